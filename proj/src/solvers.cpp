#include "loctomo/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "loctomo/projector.hpp"
#include "operators.hpp"

namespace loctomo {

namespace detail {

GradientStep::GradientStep(const Sinogram& p, const ProjectionGeometry& geom, double alpha)
    : proj_(geom, window_of(Region::full(geom.grid_size()))), alpha_(alpha) {
    if (p.geometry().n_angles() != geom.n_angles() || p.n_detectors() != geom.n_detectors())
        throw std::invalid_argument("solver: sinogram shape does not match geometry");
    data_.resize(proj_.compact_size());
    proj_.gather(p, data_);
    residual_.resize(proj_.compact_size());
    back_.resize(geom.image_size());
}

void GradientStep::apply(std::span<const double> x, std::span<double> out) {
    proj_.forward(x, residual_);
    for (std::size_t i = 0; i < residual_.size(); ++i) residual_[i] = data_[i] - residual_[i];
    proj_.back(residual_, back_);
    for (std::size_t i = 0; i < back_.size(); ++i) out[i] = x[i] + alpha_ * back_[i];
}

void clamp(std::span<double> values, double low, double high) {
    for (double& v : values) v = std::clamp(v, low, high);
}

void extrapolate(std::span<const double> x, std::span<const double> x_prev, double beta,
                 std::span<double> r) {
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + beta * (x[i] - x_prev[i]);
}

double next_momentum(double t) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)); }

}  // namespace detail

namespace {

void require_shapes(const Sinogram& p, const ProjectionGeometry& geom) {
    if (p.n_angles() != geom.n_angles() || p.n_detectors() != geom.n_detectors())
        throw std::invalid_argument("solver: sinogram shape does not match geometry");
}

}  // namespace

PriorKind parse_prior_kind(std::string_view name) {
    if (name == "none") return PriorKind::none;
    if (name == "box") return PriorKind::box;
    if (name == "wavelet" || name == "wavelet_l1" || name == "haar") return PriorKind::wavelet_l1;
    if (name == "tv") return PriorKind::tv;
    throw std::invalid_argument("unknown prior '" + std::string(name) + "'");
}

std::string_view to_string(PriorKind kind) {
    switch (kind) {
        case PriorKind::none: return "none";
        case PriorKind::box: return "box";
        case PriorKind::wavelet_l1: return "wavelet_l1";
        case PriorKind::tv: return "tv";
    }
    return "unknown";
}

PriorSpec PriorSpec::box(double low, double high) {
    PriorSpec s;
    s.kind = PriorKind::box;
    s.box_low = low;
    s.box_high = high;
    s.validate();
    return s;
}

PriorSpec PriorSpec::wavelet(double lambda, int levels) {
    PriorSpec s;
    s.kind = PriorKind::wavelet_l1;
    s.lambda = lambda;
    s.wavelet_levels = levels;
    s.validate();
    return s;
}

PriorSpec PriorSpec::tv(double lambda, int fgp_iterations) {
    PriorSpec s;
    s.kind = PriorKind::tv;
    s.lambda = lambda;
    s.fgp_iterations = fgp_iterations;
    s.validate();
    return s;
}

void PriorSpec::validate() const {
    if (kind == PriorKind::box && !(box_low <= box_high))
        throw std::invalid_argument("prior: box requires low <= high");
    if (!(lambda >= 0.0)) throw std::invalid_argument("prior: lambda must be >= 0");
    if (kind == PriorKind::tv && fgp_iterations < 1)
        throw std::invalid_argument("prior: fgp_iterations must be >= 1");
    if (wavelet_levels < 0) throw std::invalid_argument("prior: wavelet_levels must be >= 0");
}

double SolverConfig::alpha_for(const ProjectionGeometry& geom) const {
    return alpha.value_or(geom.default_alpha());
}

void SolverConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("solver: iterations must be >= 1");
    if (alpha && !(*alpha > 0.0)) throw std::invalid_argument("solver: alpha must be positive");
}

ImageGrid sirt(const Sinogram& p, const ProjectionGeometry& geom, const SolverConfig& cfg,
               const std::optional<ImageGrid>& x0) {
    require_shapes(p, geom);
    cfg.validate();
    ImageGrid x(geom.grid_size());
    if (x0) {
        if (x0->size() != geom.grid_size())
            throw std::invalid_argument("sirt: initial image size does not match geometry");
        x = *x0;
    }
    detail::GradientStep step(p, geom, cfg.alpha_for(geom));
    ImageGrid next(geom.grid_size());
    for (int k = 0; k < cfg.iterations; ++k) {
        step.apply(x.values(), next.values());
        std::swap(x, next);
    }
    return x;
}

ImageGrid sirt_box(const Sinogram& p, const ProjectionGeometry& geom, const SolverConfig& cfg,
                   double low, double high) {
    require_shapes(p, geom);
    cfg.validate();
    if (!(low <= high)) throw std::invalid_argument("sirt_box: requires low <= high");
    detail::GradientStep step(p, geom, cfg.alpha_for(geom));
    ImageGrid x(geom.grid_size());
    ImageGrid next(geom.grid_size());
    for (int k = 0; k < cfg.iterations; ++k) {
        step.apply(x.values(), next.values());
        detail::clamp(next.values(), low, high);
        std::swap(x, next);
    }
    return x;
}

void soft_threshold_inplace(std::span<double> y, double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("soft_threshold: lambda must be >= 0");
    for (double& v : y) {
        const double a = std::abs(v) - lambda;
        v = a > 0.0 ? std::copysign(a, v) : 0.0;
    }
}

std::vector<double> soft_threshold(std::span<const double> y, double lambda) {
    std::vector<double> out(y.begin(), y.end());
    soft_threshold_inplace(out, lambda);
    return out;
}

int max_wavelet_levels(int rows, int cols, int cap) {
    int levels = 0;
    while (levels < cap && rows % (2 << levels) == 0 && cols % (2 << levels) == 0) ++levels;
    return levels;
}

namespace {

constexpr double inv_sqrt2 = 0.70710678118654752440;

void check_haar(std::size_t n, int rows, int cols, int levels) {
    if (levels < 0) throw std::invalid_argument("haar: levels must be >= 0");
    if (rows < 1 || cols < 1 || n != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw std::invalid_argument("haar: buffer size mismatch");
    const int block = 1 << levels;
    if (rows % block != 0 || cols % block != 0)
        throw std::invalid_argument("haar: size must be divisible by 2^levels");
}

}  // namespace

void haar_forward(std::span<double> v, int rows, int cols, int levels) {
    check_haar(v.size(), rows, cols, levels);
    std::vector<double> tmp(static_cast<std::size_t>(std::max(rows, cols)));
    int r = rows;
    int c = cols;
    for (int l = 0; l < levels; ++l) {
        const int hr = r / 2;
        const int hc = c / 2;
        for (int i = 0; i < r; ++i) {
            double* row = v.data() + static_cast<std::size_t>(i) * cols;
            for (int j = 0; j < hc; ++j) {
                tmp[j] = (row[2 * j] + row[2 * j + 1]) * inv_sqrt2;
                tmp[hc + j] = (row[2 * j] - row[2 * j + 1]) * inv_sqrt2;
            }
            std::copy(tmp.begin(), tmp.begin() + c, row);
        }
        for (int j = 0; j < c; ++j) {
            auto at = [&](int i) -> double& { return v[static_cast<std::size_t>(i) * cols + j]; };
            for (int i = 0; i < hr; ++i) {
                tmp[i] = (at(2 * i) + at(2 * i + 1)) * inv_sqrt2;
                tmp[hr + i] = (at(2 * i) - at(2 * i + 1)) * inv_sqrt2;
            }
            for (int i = 0; i < r; ++i) at(i) = tmp[i];
        }
        r = hr;
        c = hc;
    }
}

void haar_inverse(std::span<double> v, int rows, int cols, int levels) {
    check_haar(v.size(), rows, cols, levels);
    std::vector<double> tmp(static_cast<std::size_t>(std::max(rows, cols)));
    for (int l = levels - 1; l >= 0; --l) {
        const int r = rows >> l;
        const int c = cols >> l;
        const int hr = r / 2;
        const int hc = c / 2;
        for (int j = 0; j < c; ++j) {
            auto at = [&](int i) -> double& { return v[static_cast<std::size_t>(i) * cols + j]; };
            for (int i = 0; i < hr; ++i) {
                tmp[2 * i] = (at(i) + at(hr + i)) * inv_sqrt2;
                tmp[2 * i + 1] = (at(i) - at(hr + i)) * inv_sqrt2;
            }
            for (int i = 0; i < r; ++i) at(i) = tmp[i];
        }
        for (int i = 0; i < r; ++i) {
            double* row = v.data() + static_cast<std::size_t>(i) * cols;
            for (int j = 0; j < hc; ++j) {
                tmp[2 * j] = (row[j] + row[hc + j]) * inv_sqrt2;
                tmp[2 * j + 1] = (row[j] - row[hc + j]) * inv_sqrt2;
            }
            std::copy(tmp.begin(), tmp.begin() + c, row);
        }
    }
}

std::vector<double> haar_forward(const ImageGrid& image, int levels) {
    std::vector<double> out = image.data();
    haar_forward(out, image.size(), image.size(), levels);
    return out;
}

ImageGrid haar_inverse(std::span<const double> coeffs, int size, int levels) {
    std::vector<double> values(coeffs.begin(), coeffs.end());
    haar_inverse(values, size, size, levels);
    return ImageGrid(size, std::move(values));
}

ImageGrid ista_wavelet(const Sinogram& p, const ProjectionGeometry& geom, const SolverConfig& cfg,
                       double lambda, int levels) {
    require_shapes(p, geom);
    cfg.validate();
    if (!(lambda >= 0.0)) throw std::invalid_argument("ista: lambda must be >= 0");
    const int n = geom.grid_size();
    if (levels == 0) levels = max_wavelet_levels(n, n);
    detail::GradientStep step(p, geom, cfg.alpha_for(geom));
    ImageGrid x(n);
    ImageGrid next(n);
    for (int k = 0; k < cfg.iterations; ++k) {
        step.apply(x.values(), next.values());
        haar_forward(next.values(), n, n, levels);
        soft_threshold_inplace(next.values(), lambda);
        haar_inverse(next.values(), n, n, levels);
        std::swap(x, next);
    }
    return x;
}

namespace {

// g = D z with Neumann boundary: gx[i, cols-1] = 0 and gy[rows-1, j] = 0.
// Fused with the dual ascent step w = P(r + step * D z).
void dual_ascent(const double* z, const double* rx, const double* ry, double step, int rows,
                 int cols, double* wx, double* wy, TvNorm norm) {
#pragma omp parallel for schedule(static) if (rows * cols > 32768)
    for (int i = 0; i < rows; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) {
            const std::size_t q = base + j;
            const double dx = j + 1 < cols ? z[q + 1] - z[q] : 0.0;
            const double dy = i + 1 < rows ? z[q + cols] - z[q] : 0.0;
            double gx = j + 1 < cols ? rx[q] + step * dx : 0.0;
            double gy = i + 1 < rows ? ry[q] + step * dy : 0.0;
            if (norm == TvNorm::anisotropic) {
                gx = std::clamp(gx, -1.0, 1.0);
                gy = std::clamp(gy, -1.0, 1.0);
            } else {
                const double mag = std::sqrt(gx * gx + gy * gy);
                if (mag > 1.0) {
                    gx /= mag;
                    gy /= mag;
                }
            }
            wx[q] = gx;
            wy[q] = gy;
        }
    }
}

// z = b - lambda D^T w.
void primal_from_dual(const double* b, const double* wx, const double* wy, double lambda, int rows,
                      int cols, double* z) {
#pragma omp parallel for schedule(static) if (rows * cols > 32768)
    for (int i = 0; i < rows; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) {
            const std::size_t q = base + j;
            double dt = -wx[q] - wy[q];
            if (j > 0) dt += wx[q - 1];
            if (i > 0) dt += wy[q - cols];
            z[q] = b[q] - lambda * dt;
        }
    }
}

}  // namespace

void fgp_tv_denoise(std::span<const double> b, int rows, int cols, double lambda, int iterations,
                    std::span<double> out, TvNorm norm) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("fgp: lambda must be >= 0");
    if (iterations < 1) throw std::invalid_argument("fgp: iterations must be >= 1");
    const std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    if (rows < 1 || cols < 1 || b.size() != n || out.size() != n)
        throw std::invalid_argument("fgp: buffer size mismatch");
    if (lambda == 0.0) {
        std::copy(b.begin(), b.end(), out.begin());
        return;
    }
    std::vector<double> wx(n, 0.0), wy(n, 0.0), px(n, 0.0), py(n, 0.0), rx(n, 0.0), ry(n, 0.0);
    std::vector<double> z(n);
    const double step = 1.0 / (8.0 * lambda);
    double t = 1.0;
    for (int k = 0; k < iterations; ++k) {
        primal_from_dual(b.data(), rx.data(), ry.data(), lambda, rows, cols, z.data());
        dual_ascent(z.data(), rx.data(), ry.data(), step, rows, cols, wx.data(), wy.data(), norm);
        // Drop the momentum once it points against the step just taken.
        double turn = 0.0;
        for (std::size_t q = 0; q < n; ++q)
            turn += (rx[q] - wx[q]) * (wx[q] - px[q]) + (ry[q] - wy[q]) * (wy[q] - py[q]);
        if (turn > 0.0) t = 1.0;
        const double t_next = detail::next_momentum(t);
        const double beta = (t - 1.0) / t_next;
        detail::extrapolate(wx, px, beta, rx);
        detail::extrapolate(wy, py, beta, ry);
        std::swap(wx, px);
        std::swap(wy, py);
        t = t_next;
    }
    primal_from_dual(b.data(), px.data(), py.data(), lambda, rows, cols, out.data());
}

ImageGrid fgp_tv_denoise(const ImageGrid& image, double lambda, int iterations, TvNorm norm) {
    ImageGrid out(image.size());
    fgp_tv_denoise(image.values(), image.size(), image.size(), lambda, iterations, out.values(),
                   norm);
    return out;
}

double total_variation(std::span<const double> v, int rows, int cols, TvNorm norm) {
    if (v.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw std::invalid_argument("total_variation: buffer size mismatch");
    double tv = 0.0;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            const std::size_t q = static_cast<std::size_t>(i) * cols + j;
            const double dx = j + 1 < cols ? v[q + 1] - v[q] : 0.0;
            const double dy = i + 1 < rows ? v[q + cols] - v[q] : 0.0;
            tv += norm == TvNorm::anisotropic ? std::abs(dx) + std::abs(dy)
                                              : std::sqrt(dx * dx + dy * dy);
        }
    return tv;
}

ImageGrid fista_tv(const Sinogram& p, const ProjectionGeometry& geom, const SolverConfig& cfg,
                   double lambda, int fgp_iterations, bool momentum, TvNorm norm) {
    require_shapes(p, geom);
    cfg.validate();
    if (!(lambda >= 0.0)) throw std::invalid_argument("fista: lambda must be >= 0");
    if (fgp_iterations < 1) throw std::invalid_argument("fista: fgp_iterations must be >= 1");
    const int n = geom.grid_size();
    detail::GradientStep step(p, geom, cfg.alpha_for(geom));
    ImageGrid x(n), x_prev(n), r(n), s(n);
    double t = 1.0;
    for (int k = 0; k < cfg.iterations; ++k) {
        step.apply(r.values(), s.values());
        std::swap(x, x_prev);
        fgp_tv_denoise(s.values(), n, n, lambda, fgp_iterations, x.values(), norm);
        if (momentum) {
            const double t_next = detail::next_momentum(t);
            detail::extrapolate(x.values(), x_prev.values(), (t - 1.0) / t_next, r.values());
            t = t_next;
        } else {
            r = x;
        }
    }
    return x;
}

double data_misfit(const Sinogram& p, const ProjectionGeometry& geom, const ImageGrid& x) {
    require_shapes(p, geom);
    const Sinogram wx = forward_project(x, geom);
    double acc = 0.0;
    for (std::size_t i = 0; i < wx.data().size(); ++i) {
        const double d = p.data()[i] - wx.data()[i];
        acc += d * d;
    }
    return 0.5 * acc;
}

double estimate_normal_norm(const ProjectionGeometry& geom, int iterations,
                            unsigned long long seed) {
    if (iterations < 1) throw std::invalid_argument("power iteration: iterations must be >= 1");
    const WindowProjector proj(geom, window_of(Region::full(geom.grid_size())));
    std::vector<double> v(geom.image_size()), w(geom.image_size()), scratch;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (double& e : v) e = uni(rng);
    double estimate = 0.0;
    for (int k = 0; k < iterations; ++k) {
        const double nv = norm2(v);
        for (double& e : v) e /= nv;
        proj.normal(v, w, scratch);
        estimate = dot(v, w);
        std::swap(v, w);
    }
    return estimate;
}

}  // namespace loctomo
