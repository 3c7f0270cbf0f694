#pragma once

#include <filesystem>

#include "lsf/grid.hpp"

namespace lsf::io {

// Grid files come in pairs: `<stem>.json` holds the header (origin, resolution,
// nx, ny, n_theta, timestamp, dtype, byte order, data file name) and
// `<stem>.bin` holds raw little-endian float64 values, layer after layer, each
// layer row-major with x fastest. A ScalarGrid2D is stored as a one-layer stack.

void write_stack(const std::filesystem::path& stem, const PsfStack& stack);
void write_grid(const std::filesystem::path& stem, const ScalarGrid2D& grid, double timestamp = 0.0);

/// Throws ConfigError on malformed headers or size mismatches.
PsfStack read_stack(const std::filesystem::path& stem);
ScalarGrid2D read_grid(const std::filesystem::path& stem);

}  // namespace lsf::io
