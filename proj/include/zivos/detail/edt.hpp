#ifndef ZIVOS_DETAIL_EDT_HPP
#define ZIVOS_DETAIL_EDT_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace zivos::detail {

// Squared Euclidean distance transform by lower envelopes of parabolas
// (Felzenszwalb & Huttenlocher), one separable pass per axis. All arithmetic
// stays on integers stored in doubles, so the result is exact.

inline constexpr double kEdtInfinity = 1e20;

// f: sampled function along one line (0 at seeds, kEdtInfinity elsewhere)
// d: output, min over q of f(q) + (p - q)^2
inline void edt_1d(std::span<const double> f, std::span<double> d, std::vector<int>& v,
                   std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  if (n == 0) return;
  v.assign(static_cast<std::size_t>(n), 0);
  z.assign(static_cast<std::size_t>(n) + 1, 0.0);
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  auto intersect = [&](int q, int p) {
    return ((f[static_cast<std::size_t>(q)] + static_cast<double>(q) * q) -
            (f[static_cast<std::size_t>(p)] + static_cast<double>(p) * p)) /
           (2.0 * (q - p));
  };
  for (int q = 1; q < n; ++q) {
    double s = intersect(q, v[static_cast<std::size_t>(k)]);
    // z[0] is -inf, so this stops at k == 0 at the latest.
    while (s <= z[static_cast<std::size_t>(k)]) {
      --k;
      s = intersect(q, v[static_cast<std::size_t>(k)]);
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(k) + 1] < q) ++k;
    const int p = v[static_cast<std::size_t>(k)];
    const double dq = static_cast<double>(q - p);
    d[static_cast<std::size_t>(q)] = dq * dq + f[static_cast<std::size_t>(p)];
  }
}

/// Squared distance from every pixel to the nearest seed (nonzero entry).
/// Pixels with no seed anywhere in the image get a value >= kEdtInfinity.
inline std::vector<double> squared_distance_to_seeds(int height, int width,
                                                     std::span<const std::uint8_t> seeds) {
  const auto h = static_cast<std::size_t>(height);
  const auto w = static_cast<std::size_t>(width);
  std::vector<double> grid(h * w);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = seeds[i] ? 0.0 : kEdtInfinity;

  std::vector<int> v;
  std::vector<double> z;
  std::vector<double> line_in(std::max(h, w));
  std::vector<double> line_out(std::max(h, w));

  for (std::size_t c = 0; c < w; ++c) {
    for (std::size_t r = 0; r < h; ++r) line_in[r] = grid[r * w + c];
    edt_1d(std::span<const double>(line_in.data(), h), std::span<double>(line_out.data(), h), v, z);
    for (std::size_t r = 0; r < h; ++r) grid[r * w + c] = line_out[r];
  }
  for (std::size_t r = 0; r < h; ++r) {
    std::span<double> row(grid.data() + r * w, w);
    std::copy(row.begin(), row.end(), line_in.begin());
    edt_1d(std::span<const double>(line_in.data(), w), row, v, z);
  }
  return grid;
}

}  // namespace zivos::detail

#endif  // ZIVOS_DETAIL_EDT_HPP
