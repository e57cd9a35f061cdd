#include "loctomo/projector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

namespace loctomo {

namespace {

void require_image(const ImageGrid& image, const ProjectionGeometry& geom) {
    if (image.size() != geom.grid_size())
        throw std::invalid_argument("projector: image size does not match geometry grid size");
}

void require_sinogram(const Sinogram& sino, const ProjectionGeometry& geom) {
    if (sino.n_angles() != geom.n_angles() || sino.n_detectors() != geom.n_detectors())
        throw std::invalid_argument("projector: sinogram shape does not match geometry");
}

void require_region(const Region& region, const ProjectionGeometry& geom) {
    if (region.grid_size != geom.grid_size())
        throw std::invalid_argument("projector: region grid does not match geometry");
}

}  // namespace

FootprintCdf::FootprintCdf(double a, double b) {
    if (a < b) std::swap(a, b);
    if (!(a > 0.0)) throw std::invalid_argument("footprint: widths must not both vanish");
    wide_ = a;
    narrow_ = b;
    outer_ = 0.5 * (a + b);
    slope_ = 1.0 / a;
    ramp_ = b > 0.0 ? 0.5 / (a * b) : 0.0;
}

// Written with clamps instead of branches: quadratic rise over the first
// `narrow` units of the support, linear middle, quadratic tail. Saturated
// arguments give identical values, so bins out of reach get weight exactly 0.
double FootprintCdf::operator()(double v) const {
    // std::clamp compiles to branches here; min/max does not.
    const auto clamp = [](double x, double lo, double hi) { return std::min(std::max(x, lo), hi); };
    const double e = clamp(v + outer_, 0.0, 2.0 * outer_);
    const double rise = std::min(e, narrow_);
    const double mid = clamp(e - narrow_, 0.0, wide_ - narrow_);
    const double tail = clamp(e - wide_, 0.0, narrow_);
    return ramp_ * rise * rise + slope_ * mid + ramp_ * tail * (2.0 * narrow_ - tail);
}

void FootprintCdf::pair(double v, double& f0, double& f1) const {
#if defined(__SSE2__)
    const __m128d zero = _mm_setzero_pd();
    const __m128d narrow = _mm_set1_pd(narrow_);
    const __m128d x = _mm_min_pd(_mm_max_pd(_mm_set_pd(v + 1.0 + outer_, v + outer_), zero),
                                 _mm_set1_pd(2.0 * outer_));
    const __m128d rise = _mm_min_pd(x, narrow);
    const __m128d mid = _mm_min_pd(_mm_max_pd(_mm_sub_pd(x, narrow), zero),
                                   _mm_set1_pd(wide_ - narrow_));
    const __m128d tail = _mm_min_pd(_mm_max_pd(_mm_sub_pd(x, _mm_set1_pd(wide_)), zero), narrow);
    const __m128d ramp = _mm_set1_pd(ramp_);
    const __m128d r = _mm_add_pd(
        _mm_add_pd(_mm_mul_pd(ramp, _mm_mul_pd(rise, rise)), _mm_mul_pd(_mm_set1_pd(slope_), mid)),
        _mm_mul_pd(ramp, _mm_mul_pd(tail, _mm_sub_pd(_mm_add_pd(narrow, narrow), tail))));
    f0 = _mm_cvtsd_f64(r);
    f1 = _mm_cvtsd_f64(_mm_unpackhi_pd(r, r));
#else
    f0 = (*this)(v);
    f1 = (*this)(v + 1.0);
#endif
}

WindowProjector::WindowProjector(const ProjectionGeometry& geom, Window window,
                                 std::size_t table_budget)
    : geom_(geom), window_(window) {
    if (window.rows < 1 || window.cols < 1 || window.row0 < 0 || window.col0 < 0 ||
        window.row0 + window.rows > geom.grid_size() ||
        window.col0 + window.cols > geom.grid_size())
        throw std::invalid_argument("projector: window does not fit inside the grid");

    const double rc = geom.rotation_center();
    const double dc = geom.detector_center();
    const double sp = geom.detector_spacing();
    kernels_.reserve(static_cast<std::size_t>(geom.n_angles()));
    for (double theta : geom.angles()) {
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        AngleKernel k{};
        k.u_col = c / sp;
        k.u_row = -s / sp;
        k.cdf = FootprintCdf(std::abs(c) / sp, std::abs(s) / sp);
        k.reach = k.cdf.half_support() + 0.5;
        k.scale = 1.0 / sp;
        k.taps = static_cast<int>(std::ceil(2.0 * k.reach));
        k.short_shadow = 2.0 * k.cdf.half_support() <= 2.0;

        const double u00 = (-rc * c + rc * s) / sp + dc;
        const double i0 = window.row0;
        const double i1 = window.row0 + window.rows - 1;
        const double j0 = window.col0;
        const double j1 = window.col0 + window.cols - 1;
        const double corners[4] = {u00 + i0 * k.u_row + j0 * k.u_col,
                                   u00 + i0 * k.u_row + j1 * k.u_col,
                                   u00 + i1 * k.u_row + j0 * k.u_col,
                                   u00 + i1 * k.u_row + j1 * k.u_col};
        const double umin = *std::min_element(corners, corners + 4);
        const double umax = *std::max_element(corners, corners + 4);
        k.lo = static_cast<int>(std::floor(umin - k.reach)) - 1;
        const int hi = static_cast<int>(std::ceil(umax + k.reach)) + 1;
        k.count = hi - k.lo + 1;
        k.offset = compact_size_;
        k.u_origin = corners[0] - k.lo;
        compact_size_ += static_cast<std::size_t>(k.count);
        kernels_.push_back(k);
    }

    const std::size_t entries = window.pixel_count() * kernels_.size();
    const bool all_short = std::all_of(kernels_.begin(), kernels_.end(),
                                       [](const AngleKernel& k) { return k.short_shadow; });
    if (table_budget == 0 || !all_short ||
        entries * (sizeof(int) + 2 * sizeof(double)) > table_budget)
        return;
    table_first_.resize(entries);
    table_f1_.resize(entries);
    table_f2_.resize(entries);
    const int n_angles = static_cast<int>(kernels_.size());
#pragma omp parallel for schedule(static)
    for (int a = 0; a < n_angles; ++a) {
        const AngleKernel& k = kernels_[static_cast<std::size_t>(a)];
        std::size_t q = static_cast<std::size_t>(a) * window.pixel_count();
        for (int r = 0; r < window.rows; ++r) {
            const double base = k.u_origin + r * k.u_row;
            for (int c = 0; c < window.cols; ++c, ++q) {
                const double u = base + c * k.u_col;
                const int first = static_cast<int>(u - k.reach + 1.0);
                table_first_[q] = first;
                k.cdf.pair(first - 0.5 - u + 1.0, table_f1_[q], table_f2_[q]);
            }
        }
    }
}

std::size_t WindowProjector::touched_bins() const {
    std::size_t n = 0;
    const int nd = geom_.n_detectors();
    for (const auto& k : kernels_) {
        const int lo = std::max(k.lo, 0);
        const int hi = std::min(k.lo + k.count - 1, nd - 1);
        if (hi >= lo) n += static_cast<std::size_t>(hi - lo + 1);
    }
    return n;
}

void WindowProjector::forward(std::span<const double> image, std::span<double> compact) const {
    if (image.size() != window_.pixel_count() || compact.size() != compact_size_)
        throw std::invalid_argument("projector: buffer sizes do not match window");
    const int rows = window_.rows;
    const int cols = window_.cols;
    const int nd = geom_.n_detectors();
    const int n_angles = static_cast<int>(kernels_.size());

#pragma omp parallel for schedule(static)
    for (int a = 0; a < n_angles; ++a) {
        const AngleKernel& k = kernels_[static_cast<std::size_t>(a)];
        double* out = compact.data() + k.offset;
        std::fill(out, out + k.count, 0.0);
        if (tabulated()) {
            const std::size_t base = static_cast<std::size_t>(a) * window_.pixel_count();
            const int* first = table_first_.data() + base;
            const double* f1 = table_f1_.data() + base;
            const double* f2 = table_f2_.data() + base;
            for (std::size_t q = 0; q < window_.pixel_count(); ++q) {
                const double v = image[q];
                if (v == 0.0) continue;
                const double sv = k.scale * v;
                out[first[q]] += sv * f1[q];
                out[first[q] + 1] += sv * (f2[q] - f1[q]);
                out[first[q] + 2] += sv * (1.0 - f2[q]);
            }
        } else {
        for (int r = 0; r < rows; ++r) {
            const double* src = image.data() + static_cast<std::size_t>(r) * cols;
            const double base = k.u_origin + r * k.u_row;
            for (int c = 0; c < cols; ++c) {
                const double v = src[c];
                if (v == 0.0) continue;
                const double u = base + c * k.u_col;
                // u - reach + 1 > 0 inside the run, so truncation is floor.
                const int first = static_cast<int>(u - k.reach + 1.0);
                const double v0 = first - 0.5 - u;
                if (k.short_shadow) {
                    // The shadow starts in bin `first`; F is 0 before it and 1 two bins on.
                    double f1, f2;
                    k.cdf.pair(v0 + 1.0, f1, f2);
                    const double sv = k.scale * v;
                    out[first] += sv * f1;
                    out[first + 1] += sv * (f2 - f1);
                    out[first + 2] += sv * (1.0 - f2);
                    continue;
                }
                double prev = k.cdf(v0);
                for (int t = 0; t < k.taps; ++t) {
                    const double next = k.cdf(v0 + (t + 1));
                    out[first + t] += k.scale * (next - prev) * v;
                    prev = next;
                }
            }
        }
        }
        // Rays that miss the physical detector do not exist.
        for (int q = 0; q < k.count; ++q) {
            const int d = k.lo + q;
            if (d < 0 || d >= nd) out[q] = 0.0;
        }
    }
}

void WindowProjector::back(std::span<const double> compact, std::span<double> image) const {
    if (image.size() != window_.pixel_count() || compact.size() != compact_size_)
        throw std::invalid_argument("projector: buffer sizes do not match window");
    const int rows = window_.rows;
    const int cols = window_.cols;
    const std::size_t n_angles = kernels_.size();

#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        double* dst = image.data() + static_cast<std::size_t>(r) * cols;
        std::fill(dst, dst + cols, 0.0);
        for (std::size_t a = 0; a < n_angles; ++a) {
            const AngleKernel& k = kernels_[a];
            const double* in = compact.data() + k.offset;
            if (tabulated()) {
                const std::size_t base = a * window_.pixel_count() + static_cast<std::size_t>(r) * cols;
                const int* first = table_first_.data() + base;
                const double* f1 = table_f1_.data() + base;
                const double* f2 = table_f2_.data() + base;
                for (int c = 0; c < cols; ++c) {
                    const int d = first[c];
                    dst[c] += k.scale * (f1[c] * in[d] + (f2[c] - f1[c]) * in[d + 1] +
                                         (1.0 - f2[c]) * in[d + 2]);
                }
                continue;
            }
            const double base = k.u_origin + r * k.u_row;
            for (int c = 0; c < cols; ++c) {
                const double u = base + c * k.u_col;
                const int first = static_cast<int>(u - k.reach + 1.0);
                const double v0 = first - 0.5 - u;
                if (k.short_shadow) {
                    double f1, f2;
                    k.cdf.pair(v0 + 1.0, f1, f2);
                    dst[c] += k.scale * (f1 * in[first] + (f2 - f1) * in[first + 1] +
                                         (1.0 - f2) * in[first + 2]);
                    continue;
                }
                double prev = k.cdf(v0);
                double acc = 0.0;
                for (int t = 0; t < k.taps; ++t) {
                    const double next = k.cdf(v0 + (t + 1));
                    acc += (next - prev) * in[first + t];
                    prev = next;
                }
                dst[c] += k.scale * acc;
            }
        }
    }
}

void WindowProjector::gather(const Sinogram& full, std::span<double> compact) const {
    require_sinogram(full, geom_);
    if (compact.size() != compact_size_)
        throw std::invalid_argument("projector: compact buffer size mismatch");
    const int nd = geom_.n_detectors();
    for (std::size_t a = 0; a < kernels_.size(); ++a) {
        const AngleKernel& k = kernels_[a];
        const auto row = full.row(static_cast<int>(a));
        double* out = compact.data() + k.offset;
        for (int q = 0; q < k.count; ++q) {
            const int d = k.lo + q;
            out[q] = (d >= 0 && d < nd) ? row[static_cast<std::size_t>(d)] : 0.0;
        }
    }
}

void WindowProjector::scatter_add(std::span<const double> compact, Sinogram& full) const {
    require_sinogram(full, geom_);
    if (compact.size() != compact_size_)
        throw std::invalid_argument("projector: compact buffer size mismatch");
    const int nd = geom_.n_detectors();
    for (std::size_t a = 0; a < kernels_.size(); ++a) {
        const AngleKernel& k = kernels_[a];
        auto row = full.row(static_cast<int>(a));
        const double* in = compact.data() + k.offset;
        for (int q = 0; q < k.count; ++q) {
            const int d = k.lo + q;
            if (d >= 0 && d < nd) row[static_cast<std::size_t>(d)] += in[q];
        }
    }
}

void WindowProjector::normal(std::span<const double> image, std::span<double> out,
                             std::vector<double>& scratch) const {
    scratch.resize(compact_size_);
    forward(image, scratch);
    back(scratch, out);
}

Sinogram forward_project(const ImageGrid& image, const ProjectionGeometry& geom) {
    require_image(image, geom);
    return forward_project_local(image, geom, Region::full(geom.grid_size()));
}

ImageGrid back_project(const Sinogram& sino, const ProjectionGeometry& geom) {
    return back_project_local(sino, geom, Region::full(geom.grid_size()));
}

ImageGrid apply_region_mask(const ImageGrid& image, const Region& region, bool keep_inside) {
    if (region.grid_size != image.size())
        throw std::invalid_argument("mask: region grid does not match image");
    ImageGrid out = image;
    for (int i = 0; i < image.size(); ++i)
        for (int j = 0; j < image.size(); ++j)
            if (region.contains(i, j) != keep_inside) out(i, j) = 0.0;
    return out;
}

Sinogram forward_project_local(const ImageGrid& image, const ProjectionGeometry& geom,
                               const Region& region) {
    require_image(image, geom);
    require_region(region, geom);
    const WindowProjector proj(geom, window_of(region));
    std::vector<double> compact(proj.compact_size());
    proj.forward(extract(image, proj.window()), compact);
    Sinogram out(geom);
    proj.scatter_add(compact, out);
    return out;
}

ImageGrid back_project_local(const Sinogram& sino, const ProjectionGeometry& geom,
                             const Region& region) {
    require_sinogram(sino, geom);
    require_region(region, geom);
    const WindowProjector proj(geom, window_of(region));
    std::vector<double> compact(proj.compact_size());
    proj.gather(sino, compact);
    std::vector<double> sub(proj.window().pixel_count());
    proj.back(compact, sub);
    ImageGrid out(geom.grid_size());
    insert(out, proj.window(), sub);
    return out;
}

Window pad_region(const Region& region, double factor) {
    if (!(factor >= 0.0)) throw std::invalid_argument("pad_region: factor must be >= 0");
    const int pad = static_cast<int>(std::ceil(factor * region.size - 1e-9));
    const int r0 = std::max(0, region.row0 - pad);
    const int c0 = std::max(0, region.col0 - pad);
    const int r1 = std::min(region.grid_size, region.row0 + region.size + pad);
    const int c1 = std::min(region.grid_size, region.col0 + region.size + pad);
    return Window{r0, c0, r1 - r0, c1 - c0};
}

}  // namespace loctomo
