#pragma once

#include <filesystem>

#include "tvrelax/grid.hpp"

namespace tvrelax {

/// Reads an 8-bit PGM (binary P5 or ASCII P2, maxval 255) into a field
/// with values in [0,1] (pixel / 255). Raster order maps directly to the
/// grid: row y, column x -> cell y*width + x. Throws io_error on missing
/// files or malformed headers.
ScalarField read_pgm(const std::filesystem::path& path);

/// Writes binary P5 with maxval 255; values are clamped to [0,1] and
/// rounded to pixel = round(255 * v), so fields with values in {0,1}
/// round-trip bit-exactly through {0, 255}.
void write_pgm(const std::filesystem::path& path, const ScalarField& f);

/// Comma-separated grid of doubles, one text row per grid row; a single
/// row yields a 1-d field. Unit spacing.
ScalarField read_csv_grid(const std::filesystem::path& path);

/// Writes with enough digits to round-trip doubles exactly.
void write_csv_grid(const std::filesystem::path& path, const ScalarField& f);

}  // namespace tvrelax
