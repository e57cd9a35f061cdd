#pragma once

#include <cstdint>
#include <string_view>

#include "loctomo/geometry.hpp"

namespace loctomo {

/// Modified Shepp-Logan head phantom (ten ellipses, values in [0, 1]),
/// rasterized by 4x4 supersampled area averaging over the square [-1, 1]^2.
ImageGrid shepp_logan(int n);

/// Two-material {0, 1} phantom: a gear-shaped body with annuli, bore holes
/// and radial slots whose counts and sizes are drawn from `seed`.
ImageGrid binary_structured_phantom(int n, std::uint64_t seed = 0);

/// Averages f x f pixel blocks.
ImageGrid downsample_image(const ImageGrid& hi, int factor);

/// The f-times supersampled problem in units of the fine pixel: f N grid and
/// f N_d unit-spaced detectors, centered so the physical axis and bin
/// positions coincide with those of `geom`.
ProjectionGeometry supersampled_geometry(const ProjectionGeometry& geom, int factor);

/// Projects a phantom given at f N x f N on f N_d virtual detectors and box-averages
/// every f bins. Lengths are measured in units of the coarse pixel.
Sinogram simulate_data(const ImageGrid& phantom_hi, int factor, const ProjectionGeometry& geom);

/// Keeps the central `n_keep` detector bins (physical positions unchanged).
Sinogram truncate_detectors(const Sinogram& p, int n_keep);

struct NoiseSpec {
    double i0 = 1000.0;
    std::uint64_t seed = 0;
    /// Physical length of one pixel in the units of the attenuation values.
    /// With a phantom in [0, 1] and scale 1 / N the object is one unit across.
    double length_scale = 1.0;

    void validate() const;
};

/// Expected photon counts I0 exp(-s (p - p_min)); the largest equals I0.
Sinogram expected_counts(const Sinogram& p, const NoiseSpec& spec);

/// Poisson-sampled counts converted back to line integrals; zero counts are
/// clamped to one photon.
Sinogram apply_poisson_noise(const Sinogram& p, const NoiseSpec& spec);

/// Poisson draw for bin `index` from a counter-based generator.
std::uint64_t poisson_sample(double mean, std::uint64_t seed, std::uint64_t index);

}  // namespace loctomo
