#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "loctomo/filters.hpp"
#include "loctomo/geometry.hpp"
#include "loctomo/solvers.hpp"

namespace loctomo {

/// Iterate of a local reconstruction, handed to LocalOptions::observer.
/// Buffers are window-shaped; pixels outside `window` are zero by construction.
struct LocalState {
    Window window;
    int iteration = 0;
    std::span<const double> x_s;
    std::span<const double> y;
};

struct LocalOptions {
    double pad_factor = 1.0 / 8.0;
    bool disc_correction = true;
    bool momentum = true;  // FISTA extrapolation in local_fista_tv
    std::function<void(const LocalState&)> observer;
};

/// Unit-gray disc of diameter N centered on the rotation axis.
ImageGrid make_disc(const ProjectionGeometry& geom);

struct DiscCorrection {
    double c = 0.0;
    Sinogram disc_sinogram;
    ImageGrid disc_image;
};

struct DiscPrecorrected {
    Sinogram corrected;
    DiscCorrection correction;
};

/// Subtracts c W disc, with c the least-squares fit of the per-angle sums of p
/// by those of the disc sinogram.
DiscPrecorrected disc_precorrect(const Sinogram& p, const ProjectionGeometry& geom);

/// Per-angle detector sums (the zero-frequency component of every row).
std::vector<double> zero_frequency(const Sinogram& p);

/// l2 norm over angles of the zero-frequency components of p - c * disc.
double zero_frequency_residual(const Sinogram& p, const Sinogram& disc_sinogram, double c);

std::uint64_t fingerprint(const Sinogram& p);

/// Convolved sinograms C_{u_k} p for k = 1..n, computed once and shared by
/// local reconstructions of any region. When built with disc correction the
/// entries hold the convolved corrected data.
class ConvCache {
public:
    ConvCache(ProjectionGeometry geometry, std::uint64_t source_fingerprint, bool disc_corrected,
              double disc_value, std::vector<Sinogram> entries);

    const ProjectionGeometry& geometry() const { return geometry_; }
    int size() const { return static_cast<int>(entries_.size()); }
    const Sinogram& entry(int k) const;
    std::uint64_t source_fingerprint() const { return fingerprint_; }
    bool disc_corrected() const { return disc_corrected_; }
    double disc_value() const { return disc_value_; }

    /// Throws unless the cache was built from `p` with the same disc setting.
    void check_compatible(const Sinogram& p, bool disc_correction) const;

private:
    ProjectionGeometry geometry_;
    std::uint64_t fingerprint_;
    bool disc_corrected_;
    double disc_value_;
    std::vector<Sinogram> entries_;
};

ConvCache build_conv_cache(const Sinogram& p, const FilterBank& bank, bool disc_correction = true,
                           int count = 0);

/// W_L^T C_{u_n} p on the padded region, cropped to the region (N_L x N_L).
ImageGrid local_sirt(const Sinogram& p, const ProjectionGeometry& geom, const Region& region,
                     const SolverConfig& cfg, const FilterBank& bank,
                     const ConvCache* cache = nullptr, const LocalOptions& options = {});

/// Local approximation of a regularized iteration with a box or wavelet prior
/// (none reduces to local_sirt). Returns the N_L x N_L region.
ImageGrid local_regularized(const Sinogram& p, const ProjectionGeometry& geom,
                            const Region& region, const SolverConfig& cfg, const PriorSpec& prior,
                            const FilterBank& bank, const ConvCache* cache = nullptr,
                            const LocalOptions& options = {});

/// Local approximation of FISTA with a TV prox. Returns the N_L x N_L region.
ImageGrid local_fista_tv(const Sinogram& p, const ProjectionGeometry& geom, const Region& region,
                         const SolverConfig& cfg, double lambda, int fgp_iterations,
                         const FilterBank& bank, const ConvCache* cache = nullptr,
                         const LocalOptions& options = {});

/// Dispatches on prior.kind (tv goes to local_fista_tv).
ImageGrid local_reconstruct(const Sinogram& p, const ProjectionGeometry& geom,
                            const Region& region, const SolverConfig& cfg, const PriorSpec& prior,
                            const FilterBank& bank, const ConvCache* cache = nullptr,
                            const LocalOptions& options = {});

/// Covers the grid with non-overlapping tile_size tiles, reconstructs each one
/// independently with the local engine and places them side by side. Tiles run
/// on up to `workers` threads; the result does not depend on the worker count.
ImageGrid tile_reconstruct(const Sinogram& p, const ProjectionGeometry& geom, int tile_size,
                           const SolverConfig& cfg, const PriorSpec& prior, const FilterBank& bank,
                           int workers = 1, const ConvCache* cache = nullptr,
                           const LocalOptions& options = {});

enum class PadMode { edge_constant };

struct PaddedSinogram {
    Sinogram sinogram;
    ProjectionGeometry geometry;
};

/// Extends every row with its edge values to `target_detectors` bins, keeping
/// the bins at their physical positions.
PaddedSinogram pad_truncated(const Sinogram& p, const ProjectionGeometry& geom_small,
                             int target_detectors, PadMode mode = PadMode::edge_constant);

}  // namespace loctomo
