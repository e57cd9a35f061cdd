#include "loctomo/filters.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "loctomo/projector.hpp"

namespace loctomo {

namespace {

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwDeleter>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwDeleter>;

RealBuffer alloc_real(int n) { return RealBuffer(fftw_alloc_real(static_cast<std::size_t>(n))); }
ComplexBuffer alloc_complex(int n) {
    return ComplexBuffer(fftw_alloc_complex(static_cast<std::size_t>(n)));
}

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
};

// The FFTW planner is not thread-safe; execution with the new-array interface is.
const PlanPair& plans_for(int length) {
    static std::mutex mutex;
    static std::map<int, PlanPair> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(length);
    if (it != cache.end()) return it->second;
    auto real = alloc_real(length);
    auto spec = alloc_complex(length / 2 + 1);
    PlanPair p;
    p.forward = fftw_plan_dft_r2c_1d(length, real.get(), spec.get(), FFTW_ESTIMATE);
    p.inverse = fftw_plan_dft_c2r_1d(length, spec.get(), real.get(), FFTW_ESTIMATE);
    if (!p.forward || !p.inverse) throw std::runtime_error("fftw: planning failed");
    return cache.emplace(length, p).first->second;
}

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

double ram_lak_tap(long k) {
    if (k == 0) return 0.25;
    if (k % 2 == 0) return 0.0;
    const double kk = static_cast<double>(k);
    return -1.0 / (std::numbers::pi * std::numbers::pi * kk * kk);
}

}  // namespace

AnalyticKind parse_analytic_kind(std::string_view name) {
    if (name == "ram-lak" || name == "ramlak" || name == "ramp") return AnalyticKind::ram_lak;
    if (name == "shepp-logan") return AnalyticKind::shepp_logan;
    if (name == "hann") return AnalyticKind::hann;
    throw std::invalid_argument("unknown analytic filter '" + std::string(name) + "'");
}

std::string_view to_string(AnalyticKind kind) {
    switch (kind) {
        case AnalyticKind::ram_lak: return "ram-lak";
        case AnalyticKind::shepp_logan: return "shepp-logan";
        case AnalyticKind::hann: return "hann";
    }
    return "unknown";
}

AnalyticFilter make_analytic_filter(AnalyticKind kind, int n_detectors) {
    if (n_detectors < 1) throw std::invalid_argument("analytic filter: n_detectors must be >= 1");
    AnalyticFilter f;
    f.kind = kind;
    const long half = n_detectors - 1;
    f.taps.resize(static_cast<std::size_t>(2 * half + 1));
    for (long k = -half; k <= half; ++k) {
        double v = 0.0;
        switch (kind) {
            case AnalyticKind::ram_lak: v = ram_lak_tap(k); break;
            case AnalyticKind::shepp_logan: {
                const double kk = static_cast<double>(k);
                v = -2.0 / (std::numbers::pi * std::numbers::pi * (4.0 * kk * kk - 1.0));
                break;
            }
            case AnalyticKind::hann:
                // Ramp times a raised-cosine window: a three-tap smoothing of the ramp taps.
                v = 0.5 * ram_lak_tap(k) + 0.25 * ram_lak_tap(k - 1) + 0.25 * ram_lak_tap(k + 1);
                break;
        }
        f.taps[static_cast<std::size_t>(k + half)] = v;
    }
    return f;
}

FilterBank::FilterBank(ProjectionGeometry geometry, double alpha, int count,
                       std::vector<double> values)
    : geometry_(std::move(geometry)), alpha_(alpha), count_(count), values_(std::move(values)) {
    if (count_ < 1) throw std::invalid_argument("filter bank: needs at least one filter");
    if (!(alpha_ > 0.0)) throw std::invalid_argument("filter bank: alpha must be positive");
    if (values_.size() != static_cast<std::size_t>(count_) * geometry_.sinogram_size())
        throw std::invalid_argument("filter bank: value count does not match geometry");
}

std::span<const double> FilterBank::filter(int k) const {
    if (k < 1 || k > count_)
        throw std::out_of_range("filter bank: index " + std::to_string(k) + " out of range");
    const std::size_t stride = geometry_.sinogram_size();
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(k - 1) * stride,
                                                    stride);
}

Sinogram FilterBank::filter_sinogram(int k) const {
    const auto f = filter(k);
    return Sinogram(geometry_, std::vector<double>(f.begin(), f.end()));
}

FilterBank compute_sirt_filters(const ProjectionGeometry& geom, int n,
                                std::optional<double> alpha_opt) {
    if (n < 1) throw std::invalid_argument("compute_sirt_filters: n must be >= 1");
    const double alpha = alpha_opt.value_or(geom.default_alpha());
    if (!(alpha > 0.0)) throw std::invalid_argument("compute_sirt_filters: alpha must be positive");
    const double rc = geom.rotation_center();
    if (rc != std::floor(rc) || geom.detector_center() != std::floor(geom.detector_center()))
        throw std::invalid_argument(
            "compute_sirt_filters: rotation axis must pass through a pixel and a bin center");

    const int center = static_cast<int>(rc);
    const WindowProjector proj(geom, window_of(Region::full(geom.grid_size())));
    const std::size_t sino_size = geom.sinogram_size();

    std::vector<double> impulse(geom.image_size(), 0.0);
    impulse[static_cast<std::size_t>(center) * static_cast<std::size_t>(geom.grid_size()) +
            static_cast<std::size_t>(center)] = 1.0;

    std::vector<double> compact(proj.compact_size());
    std::vector<double> normal(geom.image_size());
    Sinogram projected(geom);      // W c, where c = A^{k-1} e_c
    Sinogram accumulated(geom);    // W q_k
    std::vector<double> values(static_cast<std::size_t>(n) * sino_size);

    for (int k = 1; k <= n; ++k) {
        proj.forward(impulse, compact);
        std::fill(projected.data().begin(), projected.data().end(), 0.0);
        proj.scatter_add(compact, projected);
        auto& acc = accumulated.data();
        for (std::size_t i = 0; i < sino_size; ++i) acc[i] += projected.data()[i];
        double* out = values.data() + static_cast<std::size_t>(k - 1) * sino_size;
        for (std::size_t i = 0; i < sino_size; ++i) out[i] = alpha * acc[i];
        if (k == n) break;
        proj.back(compact, normal);
        for (std::size_t i = 0; i < impulse.size(); ++i) impulse[i] -= alpha * normal[i];
    }
    return FilterBank(geom, alpha, n, std::move(values));
}

FilterRows rows_of(const AnalyticFilter& filter) {
    return FilterRows{filter.taps, 1, static_cast<int>(filter.taps.size()), filter.center()};
}

FilterRows rows_of(const FilterBank& bank, int k) {
    const auto& g = bank.geometry();
    return FilterRows{bank.filter(k), g.n_angles(), g.n_detectors(),
                      static_cast<int>(g.detector_center())};
}

RowConvolver::RowConvolver(int n_detectors)
    : n_detectors_(n_detectors), fft_length_(next_pow2(std::max(2 * n_detectors - 1, 2))) {
    if (n_detectors < 1) throw std::invalid_argument("convolver: n_detectors must be >= 1");
}

RowConvolver::Spectrum RowConvolver::transform(const Sinogram& sino) const {
    if (sino.n_detectors() != n_detectors_)
        throw std::invalid_argument("convolver: detector count mismatch");
    const PlanPair& plans = plans_for(fft_length_);
    Spectrum s;
    s.rows = sino.n_angles();
    s.bins = fft_length_ / 2 + 1;
    s.values.resize(static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.bins));
    const int rows = s.rows;

#pragma omp parallel
    {
        auto real = alloc_real(fft_length_);
        auto spec = alloc_complex(s.bins);
#pragma omp for schedule(static)
        for (int a = 0; a < rows; ++a) {
            const auto row = sino.row(a);
            std::fill(real.get(), real.get() + fft_length_, 0.0);
            std::copy(row.begin(), row.end(), real.get());
            fftw_execute_dft_r2c(plans.forward, real.get(), spec.get());
            auto* dst = s.values.data() + static_cast<std::size_t>(a) * s.bins;
            for (int b = 0; b < s.bins; ++b) dst[b] = {spec[b][0], spec[b][1]};
        }
    }
    return s;
}

Sinogram RowConvolver::apply(const Spectrum& data, const ProjectionGeometry& geom,
                             const FilterRows& filter) const {
    if (geom.n_detectors() != n_detectors_ || data.rows != geom.n_angles())
        throw std::invalid_argument("convolver: spectrum does not match geometry");
    if (filter.rows != 1 && filter.rows != geom.n_angles())
        throw std::invalid_argument("convolver: filter row count does not match angle count");
    if (filter.length < 1 || filter.values.size() !=
                                 static_cast<std::size_t>(filter.rows) *
                                     static_cast<std::size_t>(filter.length))
        throw std::invalid_argument("convolver: filter length mismatch");
    if (filter.center < 0 || filter.center >= filter.length ||
        n_detectors_ + filter.length - 1 - filter.center > fft_length_)
        throw std::invalid_argument("convolver: filter too long for the padded transform");

    const PlanPair& plans = plans_for(fft_length_);
    const int bins = data.bins;
    const int rows = data.rows;
    const double norm = 1.0 / fft_length_;
    Sinogram out(geom);

    auto kernel_spectrum = [&](int row, double* real, fftw_complex* spec) {
        const double* k = filter.values.data() + static_cast<std::size_t>(row) * filter.length;
        std::fill(real, real + fft_length_, 0.0);
        std::copy(k, k + filter.length, real);
        fftw_execute_dft_r2c(plans.forward, real, spec);
    };

    ComplexBuffer shared;
    if (filter.rows == 1) {
        auto real = alloc_real(fft_length_);
        shared = alloc_complex(bins);
        kernel_spectrum(0, real.get(), shared.get());
    }

#pragma omp parallel
    {
        auto real = alloc_real(fft_length_);
        auto spec = alloc_complex(bins);
#pragma omp for schedule(static)
        for (int a = 0; a < rows; ++a) {
            const fftw_complex* ks = shared.get();
            if (!ks) {
                kernel_spectrum(a, real.get(), spec.get());
                ks = spec.get();
            }
            const auto* ds = data.values.data() + static_cast<std::size_t>(a) * bins;
            for (int b = 0; b < bins; ++b) {
                const double re = ds[b].real() * ks[b][0] - ds[b].imag() * ks[b][1];
                const double im = ds[b].real() * ks[b][1] + ds[b].imag() * ks[b][0];
                spec[b][0] = re;
                spec[b][1] = im;
            }
            fftw_execute_dft_c2r(plans.inverse, spec.get(), real.get());
            auto row = out.row(a);
            for (int d = 0; d < n_detectors_; ++d)
                row[static_cast<std::size_t>(d)] = real[d + filter.center] * norm;
        }
    }
    return out;
}

Sinogram convolve_sinogram(const Sinogram& sino, const FilterRows& filter) {
    const RowConvolver conv(sino.n_detectors());
    return conv.apply(conv.transform(sino), sino.geometry(), filter);
}

Sinogram convolve_sinogram(const Sinogram& sino, const AnalyticFilter& filter) {
    if (filter.taps.size() != static_cast<std::size_t>(2 * sino.n_detectors() - 1))
        throw std::invalid_argument("convolve: analytic filter built for a different detector count");
    return convolve_sinogram(sino, rows_of(filter));
}

Sinogram convolve_sinogram(const Sinogram& sino, const FilterBank& bank, int k) {
    if (bank.geometry().n_angles() != sino.n_angles() ||
        bank.geometry().n_detectors() != sino.n_detectors())
        throw std::invalid_argument("convolve: filter bank geometry does not match sinogram");
    return convolve_sinogram(sino, rows_of(bank, k));
}

ImageGrid fbp(const Sinogram& sino, const AnalyticFilter& filter, const ProjectionGeometry& geom,
              const std::optional<Region>& region) {
    if (sino.n_angles() != geom.n_angles() || sino.n_detectors() != geom.n_detectors())
        throw std::invalid_argument("fbp: sinogram shape does not match geometry");
    Sinogram filtered = convolve_sinogram(sino, filter);
    const double weight = std::numbers::pi / geom.n_angles();
    for (double& v : filtered.data()) v *= weight;
    return region ? back_project_local(filtered, geom, *region) : back_project(filtered, geom);
}

ImageGrid fbp(const Sinogram& sino, const FilterBank& bank, int k, const ProjectionGeometry& geom,
              const std::optional<Region>& region) {
    if (sino.n_angles() != geom.n_angles() || sino.n_detectors() != geom.n_detectors())
        throw std::invalid_argument("fbp: sinogram shape does not match geometry");
    const Sinogram filtered = convolve_sinogram(sino, bank, k);
    return region ? back_project_local(filtered, geom, *region) : back_project(filtered, geom);
}

}  // namespace loctomo
