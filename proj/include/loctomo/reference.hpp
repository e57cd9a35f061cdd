#pragma once

// Serial reference implementations. These are deliberately written as the
// textbook algorithms (polygon clipping per detector strip, time-domain convolution)
// rather than the optimized kernels, and serve as oracles in the tests and as
// the baseline in the kernel benchmarks.

#include <span>
#include <vector>

#include "loctomo/geometry.hpp"

namespace loctomo::reference {

/// Bin-driven strip projection: for every detector bin, clips each pixel square
/// against the bin's strip and uses the overlap area as the weight.
Sinogram forward_project(const ImageGrid& image, const ProjectionGeometry& geom);

/// Transpose of reference::forward_project (bin-driven scatter).
ImageGrid back_project(const Sinogram& sino, const ProjectionGeometry& geom);

/// Row-major dense W with N_theta * N_d rows and N^2 columns.
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    double operator()(int r, int c) const {
        return values[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                      static_cast<std::size_t>(c)];
    }
    std::vector<double> multiply(std::span<const double> x) const;
    std::vector<double> multiply_transposed(std::span<const double> y) const;
};

DenseMatrix projection_matrix(const ProjectionGeometry& geom);

/// Time-domain convolution of one row with a centered kernel:
/// out[d] = sum_j row[j] * kernel[d - j + center], zero outside the kernel.
std::vector<double> convolve_row(std::span<const double> row, std::span<const double> kernel,
                                 int center);

}  // namespace loctomo::reference
