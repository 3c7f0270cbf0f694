#pragma once

#include <filesystem>

#include "lsf/grid.hpp"

namespace lsf::tools {

/// Occupancy from a PGM image (P2 or P5): pixels darker than `threshold` of the
/// maximum gray value are occupied. Image row 0 is the top, so it maps to the
/// largest y. Throws ConfigError on malformed files.
ScalarGrid2D read_pgm_occupancy(const std::filesystem::path& path, const GridSpec& spec_template,
                                double threshold = 0.5);

}  // namespace lsf::tools
