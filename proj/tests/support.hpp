#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "lsf/poisson.hpp"

namespace lsf::test {

inline std::string scenario_path(std::string_view name) {
  return std::string(LSF_SCENARIO_DIR) + "/" + std::string(name) + ".json";
}

inline GridSpec square_grid(int n, double res, int n_theta = 1, Vec2 origin = Vec2::Zero()) {
  GridSpec g;
  g.origin = origin;
  g.resolution = res;
  g.nx = n;
  g.ny = n;
  g.n_theta = n_theta;
  return g;
}

/// Random occupancy: border blocked by the solver anyway, plus a few random boxes.
inline ScalarGrid2D random_occupancy(std::mt19937_64& rng, const GridSpec& g) {
  ScalarGrid2D occ(g, 0.0);
  std::uniform_int_distribution<int> boxes(0, 6);
  std::uniform_int_distribution<int> ci(0, g.nx - 1), cj(0, g.ny - 1), size(1, std::max(2, g.nx / 5));
  const int nb = boxes(rng);
  for (int b = 0; b < nb; ++b) {
    const int i0 = ci(rng), j0 = cj(rng), w = size(rng), h = size(rng);
    for (int j = j0; j < std::min(g.ny, j0 + h); ++j)
      for (int i = i0; i < std::min(g.nx, i0 + w); ++i) occ(i, j) = 1.0;
  }
  return occ;
}

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace lsf::test
