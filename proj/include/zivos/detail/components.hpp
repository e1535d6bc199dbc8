#ifndef ZIVOS_DETAIL_COMPONENTS_HPP
#define ZIVOS_DETAIL_COMPONENTS_HPP

#include <array>
#include <vector>

#include "zivos/core.hpp"

namespace zivos::detail {

inline constexpr std::array<Pixel, 4> kFourNeighbours{{{-1, 0}, {0, -1}, {0, 1}, {1, 0}}};

/// Pixels of the 4-connected component of `mask` containing `seed`; empty
/// when the seed is off the mask.
inline std::vector<Pixel> flood_component(const BinaryMask& mask, Pixel seed,
                                          BinaryMask* visited = nullptr) {
  std::vector<Pixel> pixels;
  if (!mask.contains(seed) || !mask[seed]) return pixels;
  BinaryMask local;
  if (visited == nullptr) {
    local = BinaryMask(mask.height(), mask.width());
    visited = &local;
  }
  if ((*visited)[seed]) return pixels;
  (*visited)[seed] = 1;
  pixels.push_back(seed);
  for (std::size_t head = 0; head < pixels.size(); ++head) {
    const Pixel p = pixels[head];
    for (const Pixel d : kFourNeighbours) {
      const Pixel n{p.row + d.row, p.col + d.col};
      if (mask.contains(n) && mask[n] && !(*visited)[n]) {
        (*visited)[n] = 1;
        pixels.push_back(n);
      }
    }
  }
  return pixels;
}

/// All 4-connected components, ordered by their first pixel in row-major
/// order (the component's anchor is pixels.front()).
inline std::vector<std::vector<Pixel>> connected_components(const BinaryMask& mask) {
  std::vector<std::vector<Pixel>> out;
  BinaryMask visited(mask.height(), mask.width());
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (mask(r, c) && !visited(r, c)) out.push_back(flood_component(mask, {r, c}, &visited));
    }
  }
  return out;
}

}  // namespace zivos::detail

#endif  // ZIVOS_DETAIL_COMPONENTS_HPP
