#include "loctomo/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace loctomo {

ProjectionGeometry::ProjectionGeometry(int n_detectors, std::vector<double> angles,
                                       int grid_size, double detector_spacing)
    : n_detectors_(n_detectors),
      angles_(std::move(angles)),
      grid_size_(grid_size),
      detector_spacing_(detector_spacing),
      rotation_center_(static_cast<double>(grid_size / 2)),
      detector_center_(static_cast<double>(n_detectors / 2)) {
    if (n_detectors_ < 1) throw std::invalid_argument("geometry: n_detectors must be >= 1");
    if (grid_size_ < 1) throw std::invalid_argument("geometry: grid_size must be >= 1");
    if (angles_.empty()) throw std::invalid_argument("geometry: at least one angle required");
    if (!(detector_spacing_ > 0.0) || !std::isfinite(detector_spacing_))
        throw std::invalid_argument("geometry: detector spacing must be positive");
    for (std::size_t a = 0; a < angles_.size(); ++a) {
        const double th = angles_[a];
        if (!(th >= 0.0 && th < std::numbers::pi))
            throw std::invalid_argument("geometry: angle " + std::to_string(a) +
                                        " outside [0, pi)");
        if (a > 0 && !(th > angles_[a - 1]))
            throw std::invalid_argument("geometry: angles must be strictly increasing");
    }
}

ProjectionGeometry ProjectionGeometry::parallel(int n_angles, int n_detectors, int grid_size,
                                                double detector_spacing) {
    if (n_angles < 1) throw std::invalid_argument("geometry: n_angles must be >= 1");
    std::vector<double> angles(static_cast<std::size_t>(n_angles));
    for (int a = 0; a < n_angles; ++a)
        angles[static_cast<std::size_t>(a)] = std::numbers::pi * a / n_angles;
    return ProjectionGeometry(n_detectors, std::move(angles), grid_size, detector_spacing);
}

ProjectionGeometry ProjectionGeometry::with_centers(double rotation_center,
                                                    double detector_center) const {
    ProjectionGeometry g = *this;
    g.rotation_center_ = rotation_center;
    g.detector_center_ = detector_center;
    return g;
}

ProjectionGeometry ProjectionGeometry::with_detectors(int n_detectors) const {
    ProjectionGeometry g(n_detectors, angles_, grid_size_, detector_spacing_);
    g.rotation_center_ = rotation_center_;
    return g;
}

double ProjectionGeometry::default_alpha() const {
    return 1.0 / (static_cast<double>(n_angles()) * static_cast<double>(n_detectors_));
}

ImageGrid::ImageGrid(int size, double fill)
    : size_(size),
      values_(static_cast<std::size_t>(size) * static_cast<std::size_t>(size), fill) {
    if (size < 1) throw std::invalid_argument("image: size must be >= 1");
}

ImageGrid::ImageGrid(int size, std::vector<double> values)
    : size_(size), values_(std::move(values)) {
    if (size < 1) throw std::invalid_argument("image: size must be >= 1");
    if (values_.size() != static_cast<std::size_t>(size) * static_cast<std::size_t>(size))
        throw std::invalid_argument("image: value count does not match size");
}

Sinogram::Sinogram(ProjectionGeometry geometry)
    : geometry_(std::move(geometry)), values_(geometry_.sinogram_size(), 0.0) {}

Sinogram::Sinogram(ProjectionGeometry geometry, std::vector<double> values)
    : geometry_(std::move(geometry)), values_(std::move(values)) {
    if (values_.size() != geometry_.sinogram_size())
        throw std::invalid_argument("sinogram: value count does not match geometry");
}

std::span<double> Sinogram::row(int angle) {
    return std::span<double>(values_).subspan(index(angle, 0),
                                              static_cast<std::size_t>(n_detectors()));
}

std::span<const double> Sinogram::row(int angle) const {
    return std::span<const double>(values_).subspan(index(angle, 0),
                                                    static_cast<std::size_t>(n_detectors()));
}

Region::Region(int row0_, int col0_, int size_, int grid_size_)
    : row0(row0_), col0(col0_), size(size_), grid_size(grid_size_) {
    if (size < 1) throw std::invalid_argument("region: size must be >= 1");
    if (row0 < 0 || col0 < 0 || row0 + size > grid_size || col0 + size > grid_size)
        throw std::invalid_argument("region: does not fit inside the grid");
}

std::vector<double> extract(const ImageGrid& image, const Window& w) {
    std::vector<double> out(w.pixel_count());
    for (int r = 0; r < w.rows; ++r)
        for (int c = 0; c < w.cols; ++c)
            out[static_cast<std::size_t>(r) * static_cast<std::size_t>(w.cols) +
                static_cast<std::size_t>(c)] = image(w.row0 + r, w.col0 + c);
    return out;
}

void insert(ImageGrid& image, const Window& w, std::span<const double> values) {
    if (values.size() != w.pixel_count())
        throw std::invalid_argument("insert: buffer does not match window");
    for (int r = 0; r < w.rows; ++r)
        for (int c = 0; c < w.cols; ++c)
            image(w.row0 + r, w.col0 + c) =
                values[static_cast<std::size_t>(r) * static_cast<std::size_t>(w.cols) +
                       static_cast<std::size_t>(c)];
}

ImageGrid crop(const ImageGrid& image, const Region& region) {
    if (region.grid_size != image.size())
        throw std::invalid_argument("crop: region grid does not match image");
    return ImageGrid(region.size, extract(image, window_of(region)));
}

ImageGrid embed(const ImageGrid& sub, const Region& region) {
    if (sub.size() != region.size)
        throw std::invalid_argument("embed: image does not match region size");
    ImageGrid out(region.grid_size);
    insert(out, window_of(region), sub.values());
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

int full_view_detectors(int grid_size) {
    if (grid_size < 1) throw std::invalid_argument("full_view_detectors: grid size must be >= 1");
    // Half-width of the farthest pixel footprint, doubled, plus the center bin.
    const double reach = (grid_size / 2) * std::sqrt(2.0) + std::sqrt(0.5) + 0.5;
    return 2 * static_cast<int>(std::floor(reach)) + 1;
}

}  // namespace loctomo
