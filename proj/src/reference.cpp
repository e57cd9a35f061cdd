#include "loctomo/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace loctomo::reference {

namespace {

struct Point {
    double x;
    double y;
};

// Keeps the part of a convex polygon where n . p <= limit.
std::vector<Point> clip(const std::vector<Point>& poly, double nx, double ny, double limit) {
    std::vector<Point> out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = poly[i];
        const Point& b = poly[(i + 1) % n];
        const double da = nx * a.x + ny * a.y - limit;
        const double db = nx * b.x + ny * b.y - limit;
        if (da <= 0.0) out.push_back(a);
        if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
            const double t = da / (da - db);
            out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
        }
    }
    return out;
}

double area(const std::vector<Point>& poly) {
    double acc = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point& a = poly[i];
        const Point& b = poly[(i + 1) % poly.size()];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * std::abs(acc);
}

// Visits (pixel index, weight) pairs of one detector bin: the area of each pixel
// square inside the bin's strip, clipped polygon by polygon, over the spacing.
template <class Visit>
void trace_strip(const ProjectionGeometry& geom, double theta, double t, Visit&& visit) {
    const int n = geom.grid_size();
    const double rc = geom.rotation_center();
    const double sp = geom.detector_spacing();
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = j - rc;
            const double y = rc - i;
            std::vector<Point> square = {
                {x - 0.5, y - 0.5}, {x + 0.5, y - 0.5}, {x + 0.5, y + 0.5}, {x - 0.5, y + 0.5}};
            square = clip(square, c, s, t + 0.5 * sp);
            if (square.size() < 3) continue;
            square = clip(square, -c, -s, -(t - 0.5 * sp));
            if (square.size() < 3) continue;
            const double w = area(square) / sp;
            if (w > 0.0) visit(i * n + j, w);
        }
}

double bin_position(const ProjectionGeometry& geom, int d) {
    return (d - geom.detector_center()) * geom.detector_spacing();
}

}  // namespace

Sinogram forward_project(const ImageGrid& image, const ProjectionGeometry& geom) {
    if (image.size() != geom.grid_size())
        throw std::invalid_argument("reference: image size mismatch");
    Sinogram out(geom);
    const auto& px = image.data();
    for (int a = 0; a < geom.n_angles(); ++a)
        for (int d = 0; d < geom.n_detectors(); ++d) {
            double acc = 0.0;
            trace_strip(geom, geom.angles()[static_cast<std::size_t>(a)], bin_position(geom, d),
                      [&](int p, double w) { acc += w * px[static_cast<std::size_t>(p)]; });
            out(a, d) = acc;
        }
    return out;
}

ImageGrid back_project(const Sinogram& sino, const ProjectionGeometry& geom) {
    if (sino.n_angles() != geom.n_angles() || sino.n_detectors() != geom.n_detectors())
        throw std::invalid_argument("reference: sinogram shape mismatch");
    ImageGrid out(geom.grid_size());
    auto& px = out.data();
    for (int a = 0; a < geom.n_angles(); ++a)
        for (int d = 0; d < geom.n_detectors(); ++d) {
            const double v = sino(a, d);
            trace_strip(geom, geom.angles()[static_cast<std::size_t>(a)], bin_position(geom, d),
                      [&](int p, double w) { px[static_cast<std::size_t>(p)] += w * v; });
        }
    return out;
}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(cols))
        throw std::invalid_argument("dense: length mismatch");
    std::vector<double> y(static_cast<std::size_t>(rows), 0.0);
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) acc += (*this)(r, c) * x[static_cast<std::size_t>(c)];
        y[static_cast<std::size_t>(r)] = acc;
    }
    return y;
}

std::vector<double> DenseMatrix::multiply_transposed(std::span<const double> y) const {
    if (y.size() != static_cast<std::size_t>(rows))
        throw std::invalid_argument("dense: length mismatch");
    std::vector<double> x(static_cast<std::size_t>(cols), 0.0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            x[static_cast<std::size_t>(c)] += (*this)(r, c) * y[static_cast<std::size_t>(r)];
    return x;
}

DenseMatrix projection_matrix(const ProjectionGeometry& geom) {
    DenseMatrix w;
    w.rows = static_cast<int>(geom.sinogram_size());
    w.cols = static_cast<int>(geom.image_size());
    w.values.assign(static_cast<std::size_t>(w.rows) * static_cast<std::size_t>(w.cols), 0.0);
    for (int a = 0; a < geom.n_angles(); ++a)
        for (int d = 0; d < geom.n_detectors(); ++d) {
            const std::size_t row = static_cast<std::size_t>(a * geom.n_detectors() + d);
            trace_strip(geom, geom.angles()[static_cast<std::size_t>(a)], bin_position(geom, d),
                      [&](int p, double wt) {
                          w.values[row * static_cast<std::size_t>(w.cols) +
                                   static_cast<std::size_t>(p)] += wt;
                      });
        }
    return w;
}

std::vector<double> convolve_row(std::span<const double> row, std::span<const double> kernel,
                                 int center) {
    const int n = static_cast<int>(row.size());
    const int k = static_cast<int>(kernel.size());
    std::vector<double> out(row.size(), 0.0);
    for (int d = 0; d < n; ++d) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            const int idx = d - j + center;
            if (idx >= 0 && idx < k)
                acc += row[static_cast<std::size_t>(j)] * kernel[static_cast<std::size_t>(idx)];
        }
        out[static_cast<std::size_t>(d)] = acc;
    }
    return out;
}

}  // namespace loctomo::reference
