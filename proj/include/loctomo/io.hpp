#pragma once

#include <filesystem>
#include <string>

#include "loctomo/filters.hpp"
#include "loctomo/geometry.hpp"

namespace loctomo::io {

// All binary formats are little-endian with float32 payloads.
//   LTRG: "LTRG", u32 rows, u32 cols, rows*cols values.
//   LTSG: "LTSG", u32 N_theta, u32 N_d, N_theta f64 angles, N_theta*N_d values.
//   LTFB: "LTFB", u32 N_theta, u32 N_d, u32 n, f64 alpha, n*N_theta*N_d values.

void write_grid(const std::filesystem::path& path, const ImageGrid& image);
ImageGrid read_grid(const std::filesystem::path& path);

/// The file stores angles and counts only; the grid size comes from the caller.
void write_sinogram(const std::filesystem::path& path, const Sinogram& sino);
Sinogram read_sinogram(const std::filesystem::path& path, int grid_size,
                       double detector_spacing = 1.0);

void write_filter_bank(const std::filesystem::path& path, const FilterBank& bank);
/// The bank file has no angles; they are taken from `geom`, which must agree in shape.
FilterBank read_filter_bank(const std::filesystem::path& path, const ProjectionGeometry& geom);

/// Binary 16-bit PGM, min-max windowed (black = minimum).
void write_pgm(const std::filesystem::path& path, const ImageGrid& image);

/// Shortest round-trip decimal form, always with a decimal point or exponent.
std::string format_number(double v);

}  // namespace loctomo::io
