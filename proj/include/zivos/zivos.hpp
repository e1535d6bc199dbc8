#ifndef ZIVOS_ZIVOS_HPP
#define ZIVOS_ZIVOS_HPP

#include "zivos/core.hpp"
#include "zivos/error.hpp"
#include "zivos/harness.hpp"
#include "zivos/interactions.hpp"
#include "zivos/io.hpp"
#include "zivos/metrics.hpp"
#include "zivos/policy.hpp"
#include "zivos/refiner.hpp"
#include "zivos/tracker.hpp"
#include "zivos/uncertainty.hpp"

#endif  // ZIVOS_ZIVOS_HPP
