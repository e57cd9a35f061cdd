#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "loctomo/geometry.hpp"

namespace loctomo {

enum class PriorKind { none, box, wavelet_l1, tv };

PriorKind parse_prior_kind(std::string_view name);
std::string_view to_string(PriorKind kind);

enum class TvNorm { anisotropic, isotropic };

/// Which correction term the iteration applies, and its parameters.
struct PriorSpec {
    PriorKind kind = PriorKind::none;
    double box_low = 0.0;
    double box_high = 1.0;
    double lambda = 0.0;
    int fgp_iterations = 100;
    int wavelet_levels = 0;  // 0 picks the largest level count (at most 4) the size allows
    TvNorm tv_norm = TvNorm::anisotropic;

    static PriorSpec none() { return {}; }
    static PriorSpec box(double low, double high);
    static PriorSpec wavelet(double lambda, int levels = 0);
    static PriorSpec tv(double lambda, int fgp_iterations = 100);

    void validate() const;
};

struct SolverConfig {
    int iterations = 200;
    std::optional<double> alpha;  // defaults to 1 / (N_theta N_d)

    double alpha_for(const ProjectionGeometry& geom) const;
    void validate() const;
};

/// n iterations of x <- x + alpha W^T (p - W x), from x0 or zero.
ImageGrid sirt(const Sinogram& p, const ProjectionGeometry& geom, const SolverConfig& cfg,
               const std::optional<ImageGrid>& x0 = std::nullopt);

/// SIRT with every iterate clamped to [low, high].
ImageGrid sirt_box(const Sinogram& p, const ProjectionGeometry& geom, const SolverConfig& cfg,
                   double low, double high);

/// sgn(y) max(|y| - lambda, 0) elementwise.
std::vector<double> soft_threshold(std::span<const double> y, double lambda);
void soft_threshold_inplace(std::span<double> y, double lambda);

/// Largest level count (capped at `cap`) such that 2^levels divides both sides.
int max_wavelet_levels(int rows, int cols, int cap = 4);

/// Orthonormal multi-level 2D Haar transform of a rows x cols buffer, in place.
/// Coefficients use the Mallat layout: the approximation band sits in the
/// top-left (rows >> levels) x (cols >> levels) block.
void haar_forward(std::span<double> values, int rows, int cols, int levels);
void haar_inverse(std::span<double> values, int rows, int cols, int levels);

std::vector<double> haar_forward(const ImageGrid& image, int levels);
ImageGrid haar_inverse(std::span<const double> coeffs, int size, int levels);

/// x <- B^{-1} P_lambda(B (x + alpha W^T (p - W x))), n times from zero.
ImageGrid ista_wavelet(const Sinogram& p, const ProjectionGeometry& geom, const SolverConfig& cfg,
                       double lambda, int levels = 0);

/// argmin_z 1/2 ||z - b||^2 + lambda TV(z) by fast gradient projection on the dual.
/// Forward differences, Neumann boundary. The dual starts at zero on every call;
/// momentum restarts whenever it points against the latest projected step.
void fgp_tv_denoise(std::span<const double> b, int rows, int cols, double lambda, int iterations,
                    std::span<double> out, TvNorm norm = TvNorm::anisotropic);
ImageGrid fgp_tv_denoise(const ImageGrid& image, double lambda, int iterations,
                         TvNorm norm = TvNorm::anisotropic);

/// Anisotropic or isotropic total variation of a rows x cols buffer.
double total_variation(std::span<const double> values, int rows, int cols,
                       TvNorm norm = TvNorm::anisotropic);

/// Accelerated proximal gradient: gradient step on the momentum point, TV prox
/// with threshold lambda, t_k = (1 + sqrt(1 + 4 t_{k-1}^2)) / 2. With momentum
/// off it is the plain proximal gradient method.
ImageGrid fista_tv(const Sinogram& p, const ProjectionGeometry& geom, const SolverConfig& cfg,
                   double lambda, int fgp_iterations = 100, bool momentum = true,
                   TvNorm norm = TvNorm::anisotropic);

/// 1/2 ||p - W x||^2.
double data_misfit(const Sinogram& p, const ProjectionGeometry& geom, const ImageGrid& x);

/// Power-iteration estimate of sigma_max(W)^2.
double estimate_normal_norm(const ProjectionGeometry& geom, int iterations = 50,
                            unsigned long long seed = 1);

}  // namespace loctomo
