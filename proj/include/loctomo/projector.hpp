#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "loctomo/geometry.hpp"

namespace loctomo {

/// Forward projection W x with a strip (area) kernel.
///
/// The weight of pixel p for bin (theta, d) is the area of the unit pixel square
/// inside the strip of width `spacing` centered on t_d, divided by the spacing.
/// It is evaluated pixel by pixel from the cumulative pixel shadow, a trapezoid
/// with widths |cos| and |sin|, so the parallel loops never race.
Sinogram forward_project(const ImageGrid& image, const ProjectionGeometry& geom);

/// Exact transpose of forward_project.
ImageGrid back_project(const Sinogram& sino, const ProjectionGeometry& geom);

/// M_L (keep_inside) or M_F (!keep_inside).
ImageGrid apply_region_mask(const ImageGrid& image, const Region& region, bool keep_inside);

/// W_L x = W M_L x; only rays meeting the region are traversed.
Sinogram forward_project_local(const ImageGrid& image, const ProjectionGeometry& geom,
                               const Region& region);

/// W_L^T y = M_L W^T y; only region pixels are computed.
ImageGrid back_project_local(const Sinogram& sino, const ProjectionGeometry& geom,
                             const Region& region);

/// Grows the region by ceil(factor * N_L) on every side and clips to the grid.
Window pad_region(const Region& region, double factor = 1.0 / 8.0);

/// Cumulative shadow of a unit pixel on the detector, in bin units.
/// For bin-unit widths a = |cos| / spacing and b = |sin| / spacing this is the
/// distribution function of the sum of two centered uniforms of widths a and b.
class FootprintCdf {
public:
    FootprintCdf() = default;
    FootprintCdf(double a, double b);

    double half_support() const { return outer_; }
    double operator()(double v) const;
    /// F(v) and F(v + 1), written so both lanes can share vector instructions.
    void pair(double v, double& f0, double& f1) const;

private:
    double wide_ = 1.0;    // max(a, b)
    double narrow_ = 0.0;  // min(a, b)
    double outer_ = 0.5;   // (a + b) / 2
    double ramp_ = 0.0;    // 1 / (2ab), zero when the narrow width vanishes
    double slope_ = 1.0;   // 1 / max(a, b)
};

/// Projector restricted to a rectangular window of the grid.
///
/// Image buffers are window-shaped (rows x cols, row-major). Projection data
/// live in a compact layout that stores, per angle, only the contiguous run of
/// detector bins the window can reach. Bins of that run that fall outside the
/// physical detector are kept at zero.
class WindowProjector {
public:
    /// With a nonzero `table_budget` (bytes) the per-pixel footprints are computed
    /// once and stored when they fit, which pays off for small windows that are
    /// projected many times. Results are bitwise the same either way.
    WindowProjector(const ProjectionGeometry& geom, Window window, std::size_t table_budget = 0);

    const ProjectionGeometry& geometry() const { return geom_; }
    const Window& window() const { return window_; }
    std::size_t compact_size() const { return compact_size_; }

    /// Number of (angle, bin) pairs on the physical detector this window can touch.
    std::size_t touched_bins() const;
    bool tabulated() const { return !table_first_.empty(); }

    void forward(std::span<const double> image, std::span<double> compact) const;
    void back(std::span<const double> compact, std::span<double> image) const;

    /// Fills `compact` from a full sinogram.
    void gather(const Sinogram& full, std::span<double> compact) const;
    /// Adds the on-detector part of `compact` into a full sinogram.
    void scatter_add(std::span<const double> compact, Sinogram& full) const;

    /// forward followed by back: W_L^T W_L on the window.
    void normal(std::span<const double> image, std::span<double> out,
                std::vector<double>& scratch) const;

private:
    struct AngleKernel {
        double u_origin;   // bin coordinate of the window's top-left pixel, minus lo
        double u_row;      // increment per image row
        double u_col;      // increment per image column
        double reach;      // half support of the footprint plus half a bin
        FootprintCdf cdf;
        double scale;      // 1 / spacing
        int taps;          // bins a pixel can touch, fixed per angle
        bool short_shadow; // shadow no wider than two bins: three taps, two interior cdf values
        int lo;            // first bin of the run (may be negative)
        int count;         // run length
        std::size_t offset;
    };

    ProjectionGeometry geom_;
    Window window_;
    std::vector<AngleKernel> kernels_;
    std::size_t compact_size_ = 0;
    // Angle-major [angle][row][col]: first bin and the two interior cdf values.
    std::vector<int> table_first_;
    std::vector<double> table_f1_;
    std::vector<double> table_f2_;
};

}  // namespace loctomo
