#include "loctomo/local.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>

#include "loctomo/projector.hpp"
#include "operators.hpp"

namespace loctomo {

namespace {

bool inside_disc(const ProjectionGeometry& geom, int i, int j) {
    const double rc = geom.rotation_center();
    const double x = j - rc;
    const double y = rc - i;
    const double r = 0.5 * geom.grid_size();
    return x * x + y * y <= r * r;
}

std::vector<double> disc_on_window(const ProjectionGeometry& geom, const Window& w, double c) {
    std::vector<double> out(w.pixel_count(), 0.0);
    if (c == 0.0) return out;
    for (int i = 0; i < w.rows; ++i)
        for (int j = 0; j < w.cols; ++j)
            if (inside_disc(geom, w.row0 + i, w.col0 + j))
                out[static_cast<std::size_t>(i) * w.cols + j] = c;
    return out;
}

void require_shapes(const Sinogram& p, const ProjectionGeometry& geom) {
    if (p.n_angles() != geom.n_angles() || p.n_detectors() != geom.n_detectors())
        throw std::invalid_argument("local: sinogram shape does not match geometry");
}

// Grows a window outward so its corners land on multiples of `block` (grid coordinates).
Window align_window(const Window& w, int block, int grid) {
    if (grid % block != 0)
        throw std::invalid_argument("local: grid size must be divisible by 2^wavelet_levels");
    const int r0 = (w.row0 / block) * block;
    const int c0 = (w.col0 / block) * block;
    const int r1 = std::min(grid, (w.row0 + w.rows + block - 1) / block * block);
    const int c1 = std::min(grid, (w.col0 + w.cols + block - 1) / block * block);
    return Window{r0, c0, r1 - r0, c1 - c0};
}

// Footprint tables for local windows: about 33 MB for an 80 x 80 window at 256 angles.
constexpr std::size_t kTableBudget = std::size_t{256} << 20;

// Everything a local iteration needs on the padded window.
class LocalProblem {
public:
    LocalProblem(const Sinogram& p, const ProjectionGeometry& geom, const Window& window,
                 const SolverConfig& cfg, const FilterBank& bank, const ConvCache* cache,
                 const LocalOptions& options)
        : bank_(bank), cache_(cache), proj_(geom, window, kTableBudget), n_(cfg.iterations) {
        require_shapes(p, geom);
        cfg.validate();
        if (!(bank.geometry() == geom))
            throw std::invalid_argument("local: filter bank was computed for a different geometry");
        if (bank.size() < n_)
            throw std::invalid_argument("local: filter bank has " + std::to_string(bank.size()) +
                                        " filters, " + std::to_string(n_) + " needed");
        alpha_ = bank.alpha();
        if (cfg.alpha && std::abs(*cfg.alpha - alpha_) > 1e-12 * alpha_)
            throw std::invalid_argument("local: alpha differs from the filter bank's alpha");

        double c = 0.0;
        if (cache_) {
            cache_->check_compatible(p, options.disc_correction);
            if (!(cache_->geometry() == geom))
                throw std::invalid_argument("local: cache geometry does not match");
            if (cache_->size() < n_)
                throw std::invalid_argument("local: cache holds fewer entries than iterations");
            c = cache_->disc_value();
        } else {
            conv_.emplace(geom.n_detectors());
            if (options.disc_correction) {
                const DiscPrecorrected pre = disc_precorrect(p, geom);
                c = pre.correction.c;
                spectrum_ = conv_->transform(pre.corrected);
            } else {
                spectrum_ = conv_->transform(p);
            }
        }
        offset_ = disc_on_window(geom, window, c);
        compact_.resize(proj_.compact_size());
        scratch_.resize(proj_.compact_size());
    }

    const Window& window() const { return proj_.window(); }
    std::size_t pixels() const { return proj_.window().pixel_count(); }
    int iterations() const { return n_; }
    double alpha() const { return alpha_; }
    const std::vector<double>& offset() const { return offset_; }

    // x_s^k = W_L^T C_{u_k} p.
    void filtered_backprojection(int k, std::span<double> out) {
        if (cache_) {
            proj_.gather(cache_->entry(k), compact_);
        } else {
            const Sinogram conv =
                conv_->apply(spectrum_, bank_.geometry(), rows_of(bank_, k));
            proj_.gather(conv, compact_);
        }
        proj_.back(compact_, out);
    }

    // out = y - alpha W_L^T W_L y.
    void local_recursion(std::span<const double> y, std::span<double> out) {
        proj_.forward(y, scratch_);
        proj_.back(scratch_, out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = y[i] - alpha_ * out[i];
    }

    ImageGrid crop_with_offset(std::span<const double> x, const Region& region) const {
        const Window& w = window();
        ImageGrid out(region.size);
        for (int i = 0; i < region.size; ++i)
            for (int j = 0; j < region.size; ++j) {
                const std::size_t q = static_cast<std::size_t>(region.row0 - w.row0 + i) * w.cols +
                                      static_cast<std::size_t>(region.col0 - w.col0 + j);
                out(i, j) = x[q] + offset_[q];
            }
        return out;
    }

private:
    const FilterBank& bank_;
    const ConvCache* cache_;
    WindowProjector proj_;
    int n_;
    double alpha_ = 0.0;
    std::optional<RowConvolver> conv_;
    RowConvolver::Spectrum spectrum_;
    std::vector<double> offset_;
    std::vector<double> compact_;
    std::vector<double> scratch_;
};

void notify(const LocalOptions& options, const Window& w, int k, std::span<const double> xs,
            std::span<const double> y) {
    if (options.observer) options.observer(LocalState{w, k, xs, y});
}

void require_region(const Region& region, const ProjectionGeometry& geom) {
    if (region.grid_size != geom.grid_size())
        throw std::invalid_argument("local: region grid does not match geometry");
}

}  // namespace

ImageGrid make_disc(const ProjectionGeometry& geom) {
    const int n = geom.grid_size();
    ImageGrid disc(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (inside_disc(geom, i, j)) disc(i, j) = 1.0;
    return disc;
}

std::vector<double> zero_frequency(const Sinogram& p) {
    std::vector<double> out(static_cast<std::size_t>(p.n_angles()), 0.0);
    for (int a = 0; a < p.n_angles(); ++a)
        for (double v : p.row(a)) out[static_cast<std::size_t>(a)] += v;
    return out;
}

double zero_frequency_residual(const Sinogram& p, const Sinogram& disc_sinogram, double c) {
    const auto pz = zero_frequency(p);
    const auto dz = zero_frequency(disc_sinogram);
    if (pz.size() != dz.size()) throw std::invalid_argument("zero frequency: angle count mismatch");
    double acc = 0.0;
    for (std::size_t a = 0; a < pz.size(); ++a) {
        const double r = pz[a] - c * dz[a];
        acc += r * r;
    }
    return std::sqrt(acc);
}

DiscPrecorrected disc_precorrect(const Sinogram& p, const ProjectionGeometry& geom) {
    require_shapes(p, geom);
    ImageGrid disc = make_disc(geom);
    Sinogram disc_sino = forward_project(disc, geom);
    const auto pz = zero_frequency(p);
    const auto dz = zero_frequency(disc_sino);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t a = 0; a < pz.size(); ++a) {
        num += pz[a] * dz[a];
        den += dz[a] * dz[a];
    }
    if (!(den > 0.0))
        throw std::invalid_argument("disc correction: the disc does not reach the detector");
    const double c = num / den;
    Sinogram corrected = p;
    for (std::size_t i = 0; i < corrected.data().size(); ++i)
        corrected.data()[i] -= c * disc_sino.data()[i];
    return DiscPrecorrected{std::move(corrected),
                            DiscCorrection{c, std::move(disc_sino), std::move(disc)}};
}

std::uint64_t fingerprint(const Sinogram& p) {
    // FNV-1a over the shape and the raw value bytes.
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const void* data, std::size_t bytes) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < bytes; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    const int dims[2] = {p.n_angles(), p.n_detectors()};
    mix(dims, sizeof dims);
    mix(p.data().data(), p.data().size() * sizeof(double));
    return h;
}

ConvCache::ConvCache(ProjectionGeometry geometry, std::uint64_t source_fingerprint,
                     bool disc_corrected, double disc_value, std::vector<Sinogram> entries)
    : geometry_(std::move(geometry)),
      fingerprint_(source_fingerprint),
      disc_corrected_(disc_corrected),
      disc_value_(disc_value),
      entries_(std::move(entries)) {}

const Sinogram& ConvCache::entry(int k) const {
    if (k < 1 || k > size())
        throw std::out_of_range("conv cache: entry " + std::to_string(k) + " out of range");
    return entries_[static_cast<std::size_t>(k - 1)];
}

void ConvCache::check_compatible(const Sinogram& p, bool disc_correction) const {
    if (fingerprint(p) != fingerprint_)
        throw std::invalid_argument("conv cache: built from different projection data");
    if (disc_correction != disc_corrected_)
        throw std::invalid_argument("conv cache: disc correction setting differs");
}

ConvCache build_conv_cache(const Sinogram& p, const FilterBank& bank, bool disc_correction,
                           int count) {
    const ProjectionGeometry& geom = bank.geometry();
    require_shapes(p, geom);
    if (count <= 0) count = bank.size();
    if (count > bank.size()) throw std::invalid_argument("conv cache: more entries than filters");
    double c = 0.0;
    const RowConvolver conv(geom.n_detectors());
    RowConvolver::Spectrum spectrum;
    if (disc_correction) {
        const DiscPrecorrected pre = disc_precorrect(p, geom);
        c = pre.correction.c;
        spectrum = conv.transform(pre.corrected);
    } else {
        spectrum = conv.transform(p);
    }
    std::vector<Sinogram> entries;
    entries.reserve(static_cast<std::size_t>(count));
    for (int k = 1; k <= count; ++k) entries.push_back(conv.apply(spectrum, geom, rows_of(bank, k)));
    return ConvCache(geom, fingerprint(p), disc_correction, c, std::move(entries));
}

ImageGrid local_sirt(const Sinogram& p, const ProjectionGeometry& geom, const Region& region,
                     const SolverConfig& cfg, const FilterBank& bank, const ConvCache* cache,
                     const LocalOptions& options) {
    require_region(region, geom);
    LocalProblem lp(p, geom, pad_region(region, options.pad_factor), cfg, bank, cache, options);
    std::vector<double> xs(lp.pixels());
    lp.filtered_backprojection(lp.iterations(), xs);
    if (options.observer) {
        const std::vector<double> y(lp.pixels(), 0.0);
        notify(options, lp.window(), lp.iterations(), xs, y);
    }
    return lp.crop_with_offset(xs, region);
}

ImageGrid local_regularized(const Sinogram& p, const ProjectionGeometry& geom,
                            const Region& region, const SolverConfig& cfg, const PriorSpec& prior,
                            const FilterBank& bank, const ConvCache* cache,
                            const LocalOptions& options) {
    require_region(region, geom);
    prior.validate();
    if (prior.kind == PriorKind::tv)
        throw std::invalid_argument("local_regularized: use local_fista_tv for the tv prior");

    Window window = pad_region(region, options.pad_factor);
    int levels = 0;
    if (prior.kind == PriorKind::wavelet_l1) {
        levels = prior.wavelet_levels > 0
                     ? prior.wavelet_levels
                     : max_wavelet_levels(geom.grid_size(), geom.grid_size());
        window = align_window(window, 1 << levels, geom.grid_size());
    }
    LocalProblem lp(p, geom, window, cfg, bank, cache, options);
    const std::size_t n = lp.pixels();
    const auto& off = lp.offset();
    std::vector<double> xs(n), y(n, 0.0), x(n), ay(n);

    for (int k = 1; k <= lp.iterations(); ++k) {
        lp.filtered_backprojection(k, xs);
        if (prior.kind == PriorKind::none) {
            x = xs;
        } else {
            // x^k = prox(S(x^{k-1})) with S(x^{k-1}) ~ x_s^k + y - alpha W_L^T W_L y.
            lp.local_recursion(y, ay);
            for (std::size_t i = 0; i < n; ++i) x[i] = xs[i] + ay[i] + off[i];
            if (prior.kind == PriorKind::box) {
                detail::clamp(x, prior.box_low, prior.box_high);
            } else {
                haar_forward(x, window.rows, window.cols, levels);
                soft_threshold_inplace(x, prior.lambda);
                haar_inverse(x, window.rows, window.cols, levels);
            }
            for (std::size_t i = 0; i < n; ++i) x[i] -= off[i];
        }
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] - xs[i];
        notify(options, window, k, xs, y);
    }
    return lp.crop_with_offset(x, region);
}

ImageGrid local_fista_tv(const Sinogram& p, const ProjectionGeometry& geom, const Region& region,
                         const SolverConfig& cfg, double lambda, int fgp_iterations,
                         const FilterBank& bank, const ConvCache* cache,
                         const LocalOptions& options) {
    require_region(region, geom);
    if (!(lambda >= 0.0)) throw std::invalid_argument("local_fista_tv: lambda must be >= 0");
    if (fgp_iterations < 1)
        throw std::invalid_argument("local_fista_tv: fgp_iterations must be >= 1");
    LocalProblem lp(p, geom, pad_region(region, options.pad_factor), cfg, bank, cache, options);
    const Window& w = lp.window();
    const std::size_t n = lp.pixels();
    const auto& off = lp.offset();
    // y holds r^{k-1} - x_s^{k-1}: the momentum point minus its filtered part.
    std::vector<double> xs(n), y(n, 0.0), x(n, 0.0), x_prev(n, 0.0), z(n), r(n);
    double t = 1.0;

    for (int k = 1; k <= lp.iterations(); ++k) {
        lp.filtered_backprojection(k, xs);
        lp.local_recursion(y, z);
        for (std::size_t i = 0; i < n; ++i) z[i] += xs[i] + off[i];
        std::swap(x, x_prev);
        fgp_tv_denoise(z, w.rows, w.cols, lambda, fgp_iterations, x);
        for (std::size_t i = 0; i < n; ++i) x[i] -= off[i];
        if (options.momentum) {
            const double t_next = detail::next_momentum(t);
            detail::extrapolate(x, x_prev, (t - 1.0) / t_next, r);
            t = t_next;
        } else {
            r = x;
        }
        for (std::size_t i = 0; i < n; ++i) y[i] = r[i] - xs[i];
        notify(options, w, k, xs, y);
    }
    return lp.crop_with_offset(x, region);
}

ImageGrid local_reconstruct(const Sinogram& p, const ProjectionGeometry& geom,
                            const Region& region, const SolverConfig& cfg, const PriorSpec& prior,
                            const FilterBank& bank, const ConvCache* cache,
                            const LocalOptions& options) {
    prior.validate();
    switch (prior.kind) {
        case PriorKind::none: return local_sirt(p, geom, region, cfg, bank, cache, options);
        case PriorKind::tv:
            return local_fista_tv(p, geom, region, cfg, prior.lambda, prior.fgp_iterations, bank,
                                  cache, options);
        default: return local_regularized(p, geom, region, cfg, prior, bank, cache, options);
    }
}

ImageGrid tile_reconstruct(const Sinogram& p, const ProjectionGeometry& geom, int tile_size,
                           const SolverConfig& cfg, const PriorSpec& prior, const FilterBank& bank,
                           int workers, const ConvCache* cache, const LocalOptions& options) {
    const int n = geom.grid_size();
    if (tile_size < 1 || n % tile_size != 0)
        throw std::invalid_argument("tile_reconstruct: tile size must divide the grid size");
    if (workers < 1) throw std::invalid_argument("tile_reconstruct: workers must be >= 1");
    require_shapes(p, geom);
    prior.validate();

    std::optional<ConvCache> own;
    if (!cache) {
        own.emplace(build_conv_cache(p, bank, options.disc_correction, cfg.iterations));
        cache = &*own;
    }
    const int per_side = n / tile_size;
    const int tiles = per_side * per_side;
    ImageGrid out(n);
    std::vector<std::string> errors(static_cast<std::size_t>(tiles));
    LocalOptions tile_options = options;
    tile_options.observer = nullptr;

    // Tiles write disjoint parts of `out`; nothing is reduced across tiles.
#pragma omp parallel for num_threads(workers) schedule(dynamic)
    for (int t = 0; t < tiles; ++t) {
        try {
            const Region region((t / per_side) * tile_size, (t % per_side) * tile_size, tile_size,
                                n);
            const ImageGrid part =
                local_reconstruct(p, geom, region, cfg, prior, bank, cache, tile_options);
            for (int i = 0; i < tile_size; ++i)
                for (int j = 0; j < tile_size; ++j)
                    out(region.row0 + i, region.col0 + j) = part(i, j);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(t)] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error("tile_reconstruct: " + e);
    return out;
}

PaddedSinogram pad_truncated(const Sinogram& p, const ProjectionGeometry& geom_small,
                             int target_detectors, PadMode mode) {
    require_shapes(p, geom_small);
    const int nd = geom_small.n_detectors();
    if (target_detectors < nd)
        throw std::invalid_argument("pad_truncated: target is smaller than the detector count");
    if (mode != PadMode::edge_constant) throw std::invalid_argument("pad_truncated: unknown mode");
    ProjectionGeometry big = geom_small.with_detectors(target_detectors);
    const int left = static_cast<int>(big.detector_center() - geom_small.detector_center());
    if (left < 0 || left + nd > target_detectors)
        throw std::invalid_argument("pad_truncated: detector centers cannot be aligned");
    Sinogram out(big);
    for (int a = 0; a < p.n_angles(); ++a) {
        const auto src = p.row(a);
        auto dst = out.row(a);
        for (int d = 0; d < target_detectors; ++d) {
            const int s = std::clamp(d - left, 0, nd - 1);
            dst[static_cast<std::size_t>(d)] = src[static_cast<std::size_t>(s)];
        }
    }
    return PaddedSinogram{std::move(out), std::move(big)};
}

}  // namespace loctomo
