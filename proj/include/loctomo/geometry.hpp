#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace loctomo {

/// 2D parallel-beam acquisition geometry.
///
/// Pixel (row i, col j) sits at x = j - rotation_center, y = rotation_center - i
/// in pixel units. Detector bin d sits at t = (d - detector_center) * detector_spacing.
/// Both centers default to floor(size / 2) so the rotation axis passes through a
/// pixel center and a bin center; the filter bank relies on that alignment.
class ProjectionGeometry {
public:
    ProjectionGeometry(int n_detectors, std::vector<double> angles, int grid_size,
                       double detector_spacing = 1.0);

    /// `n_angles` equally spaced angles in [0, pi).
    static ProjectionGeometry parallel(int n_angles, int n_detectors, int grid_size,
                                       double detector_spacing = 1.0);

    int n_detectors() const { return n_detectors_; }
    int n_angles() const { return static_cast<int>(angles_.size()); }
    int grid_size() const { return grid_size_; }
    double detector_spacing() const { return detector_spacing_; }
    const std::vector<double>& angles() const { return angles_; }

    double rotation_center() const { return rotation_center_; }
    double detector_center() const { return detector_center_; }
    ProjectionGeometry with_centers(double rotation_center, double detector_center) const;
    ProjectionGeometry with_detectors(int n_detectors) const;

    /// Default SIRT step 1 / (N_theta * N_d).
    double default_alpha() const;

    std::size_t sinogram_size() const {
        return static_cast<std::size_t>(n_angles()) * static_cast<std::size_t>(n_detectors_);
    }
    std::size_t image_size() const {
        return static_cast<std::size_t>(grid_size_) * static_cast<std::size_t>(grid_size_);
    }

    bool operator==(const ProjectionGeometry&) const = default;

private:
    int n_detectors_;
    std::vector<double> angles_;
    int grid_size_;
    double detector_spacing_;
    double rotation_center_;
    double detector_center_;
};

/// Smallest detector count (unit spacing) whose strips cover the whole N x N grid
/// at every angle, i.e. the grid diagonal plus the footprint of a corner pixel.
int full_view_detectors(int grid_size);

/// Square N x N image, row-major.
class ImageGrid {
public:
    ImageGrid() = default;
    explicit ImageGrid(int size, double fill = 0.0);
    ImageGrid(int size, std::vector<double> values);

    int size() const { return size_; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

    double& operator()(int row, int col) { return values_[index(row, col)]; }
    double operator()(int row, int col) const { return values_[index(row, col)]; }

    bool operator==(const ImageGrid&) const = default;

private:
    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(size_) +
               static_cast<std::size_t>(col);
    }

    int size_ = 0;
    std::vector<double> values_;
};

/// Projection data, one row of N_d bins per angle.
class Sinogram {
public:
    explicit Sinogram(ProjectionGeometry geometry);
    Sinogram(ProjectionGeometry geometry, std::vector<double> values);

    const ProjectionGeometry& geometry() const { return geometry_; }
    int n_angles() const { return geometry_.n_angles(); }
    int n_detectors() const { return geometry_.n_detectors(); }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

    std::span<double> row(int angle);
    std::span<const double> row(int angle) const;

    double& operator()(int angle, int bin) { return values_[index(angle, bin)]; }
    double operator()(int angle, int bin) const { return values_[index(angle, bin)]; }

    bool operator==(const Sinogram&) const = default;

private:
    std::size_t index(int angle, int bin) const {
        return static_cast<std::size_t>(angle) * static_cast<std::size_t>(n_detectors()) +
               static_cast<std::size_t>(bin);
    }

    ProjectionGeometry geometry_;
    std::vector<double> values_;
};

/// Square local part of the reconstruction grid.
struct Region {
    int row0 = 0;
    int col0 = 0;
    int size = 0;
    int grid_size = 0;

    Region() = default;
    Region(int row0, int col0, int size, int grid_size);

    static Region full(int grid_size) { return Region(0, 0, grid_size, grid_size); }

    bool contains(int row, int col) const {
        return row >= row0 && row < row0 + size && col >= col0 && col < col0 + size;
    }
    bool operator==(const Region&) const = default;
};

/// Axis-aligned rectangle on the grid; the result of padding a Region and clipping it.
struct Window {
    int row0 = 0;
    int col0 = 0;
    int rows = 0;
    int cols = 0;

    std::size_t pixel_count() const {
        return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    }
    bool contains(int row, int col) const {
        return row >= row0 && row < row0 + rows && col >= col0 && col < col0 + cols;
    }
    bool operator==(const Window&) const = default;
};

inline Window window_of(const Region& r) { return Window{r.row0, r.col0, r.size, r.size}; }

/// Copy of the pixels of `image` inside `window`, row-major.
std::vector<double> extract(const ImageGrid& image, const Window& window);
/// Writes a window-shaped buffer into `image`.
void insert(ImageGrid& image, const Window& window, std::span<const double> values);
/// Square crop as an N_L x N_L image.
ImageGrid crop(const ImageGrid& image, const Region& region);
/// Places a region-sized image into an N x N grid of zeros.
ImageGrid embed(const ImageGrid& sub, const Region& region);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace loctomo
