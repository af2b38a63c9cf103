#pragma once

#include <cstddef>

#include "leray/grid_fields.hpp"

namespace leray::detail {

// Stencil sweep along one axis. Grid values split into blocks of n rows of
// st contiguous values; inside a block, points with at least `reach` rows on
// either side form one contiguous range, handed to interior(begin, end, st).
// The remaining rows go to edge(index, c, at), where at(i, k) reads the value
// k rows away from i (wrapped on the torus, zero outside the box).
template <class Interior, class Edge>
void sweep_axis(const Grid& g, int axis, int reach, const double* u, Interior&& interior, Edge&& edge) {
  const std::ptrdiff_t n = g.points;
  const std::ptrdiff_t st = static_cast<std::ptrdiff_t>(g.stride(axis));
  const std::ptrdiff_t block = n * st;
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>(g.size()) / block;
  const bool torus = g.topology == Topology::torus;
  for (std::ptrdiff_t o = 0; o < blocks; ++o) {
    const std::ptrdiff_t base = o * block;
    interior(base + reach * st, base + (n - reach) * st, st);
    for (std::ptrdiff_t c = 0; c < n; ++c) {
      if (c == reach) c = n - reach;
      for (std::ptrdiff_t j = 0; j < st; ++j) {
        const std::ptrdiff_t i = base + c * st + j;
        auto at = [&](std::ptrdiff_t k) {
          std::ptrdiff_t cc = c + k;
          if (torus) cc = ((cc % n) + n) % n;
          else if (cc < 0 || cc >= n) return 0.0;
          return u[base + cc * st + j];
        };
        edge(i, static_cast<int>(c), at);
      }
    }
  }
}

}  // namespace leray::detail
