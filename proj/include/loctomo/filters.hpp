#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "loctomo/geometry.hpp"

namespace loctomo {

enum class AnalyticKind { ram_lak, shepp_logan, hann };

AnalyticKind parse_analytic_kind(std::string_view name);
std::string_view to_string(AnalyticKind kind);

/// Angle-independent real-space filter for detector spacing 1.
/// Odd length 2 N_d - 1, centered at index N_d - 1.
struct AnalyticFilter {
    AnalyticKind kind = AnalyticKind::ram_lak;
    std::vector<double> taps;

    int center() const { return static_cast<int>(taps.size() / 2); }
};

AnalyticFilter make_analytic_filter(AnalyticKind kind, int n_detectors);

/// Angle-dependent filters u_1..u_n that make FBP approximate 1..n SIRT iterations.
/// Each u_k has sinogram shape and is centered on the detector center bin.
class FilterBank {
public:
    FilterBank(ProjectionGeometry geometry, double alpha, int count, std::vector<double> values);

    const ProjectionGeometry& geometry() const { return geometry_; }
    double alpha() const { return alpha_; }
    int size() const { return count_; }

    /// Filter u_k, 1 <= k <= size(), as an N_theta x N_d row-major array.
    std::span<const double> filter(int k) const;
    Sinogram filter_sinogram(int k) const;

    const std::vector<double>& values() const { return values_; }

private:
    ProjectionGeometry geometry_;
    double alpha_;
    int count_;
    std::vector<double> values_;
};

/// Runs the impulse-response recursion q_k = sum_{j<k} A^j e_c with
/// A = I - alpha W^T W and returns u_k = alpha W q_k for k = 1..n.
/// The default alpha is 1 / (N_theta N_d).
FilterBank compute_sirt_filters(const ProjectionGeometry& geom, int n,
                                std::optional<double> alpha = std::nullopt);

/// Per-angle kernels for C_h: either one row shared by all angles or one row per angle.
struct FilterRows {
    std::span<const double> values;
    int rows = 1;
    int length = 0;
    int center = 0;
};

FilterRows rows_of(const AnalyticFilter& filter);
FilterRows rows_of(const FilterBank& bank, int k);

/// FFT-based row convolution for one detector count. The padded FFT length is
/// the next power of two >= 2 N_d - 1; rows are zero-padded so the result is the
/// center-aligned crop of the full linear convolution.
class RowConvolver {
public:
    explicit RowConvolver(int n_detectors);

    int n_detectors() const { return n_detectors_; }
    int fft_length() const { return fft_length_; }

    struct Spectrum {
        int rows = 0;
        int bins = 0;
        std::vector<std::complex<double>> values;
    };

    Spectrum transform(const Sinogram& sino) const;
    Sinogram apply(const Spectrum& data, const ProjectionGeometry& geom,
                   const FilterRows& filter) const;

private:
    int n_detectors_;
    int fft_length_;
};

Sinogram convolve_sinogram(const Sinogram& sino, const FilterRows& filter);
Sinogram convolve_sinogram(const Sinogram& sino, const AnalyticFilter& filter);
Sinogram convolve_sinogram(const Sinogram& sino, const FilterBank& bank, int k);

/// W^T C_h p with an analytic filter, including the pi / N_theta angular weight,
/// or W_L^T C_h p when a region is given (zero outside the region).
ImageGrid fbp(const Sinogram& sino, const AnalyticFilter& filter, const ProjectionGeometry& geom,
              const std::optional<Region>& region = std::nullopt);

/// W^T C_{u_k} p, the filtered backprojection approximating k SIRT iterations.
ImageGrid fbp(const Sinogram& sino, const FilterBank& bank, int k, const ProjectionGeometry& geom,
              const std::optional<Region>& region = std::nullopt);

}  // namespace loctomo
