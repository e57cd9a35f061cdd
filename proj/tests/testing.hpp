#pragma once

// Shared helpers and oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "loctomo/geometry.hpp"
#include "loctomo/reference.hpp"

namespace loctomo::testing {

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

inline ImageGrid random_image(int n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    return ImageGrid(n, random_vector(static_cast<std::size_t>(n) * n, seed, lo, hi));
}

inline Sinogram random_sinogram(const ProjectionGeometry& g, std::uint64_t seed) {
    return Sinogram(g, random_vector(g.sinogram_size(), seed));
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

/// ||a - b|| / ||b||.
inline double relative_l2(std::span<const double> a, std::span<const double> b) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

/// Dense A = I - alpha W^T W.
inline std::vector<double> dense_sirt_matrix(const reference::DenseMatrix& w, double alpha) {
    const int n = w.cols;
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int r = 0; r < w.rows; ++r) acc += w(r, i) * w(r, j);
            a[static_cast<std::size_t>(i) * n + j] = (i == j ? 1.0 : 0.0) - alpha * acc;
        }
    return a;
}

inline std::vector<double> mat_vec(const std::vector<double>& m, std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) y[i] += m[i * n + j] * x[j];
    return y;
}

/// alpha (sum_{k<n} A^k) W^T p from an explicit W: the closed form of n SIRT steps from zero.
inline std::vector<double> dense_sirt(const reference::DenseMatrix& w, double alpha,
                                      std::span<const double> p, int n) {
    const auto a = dense_sirt_matrix(w, alpha);
    std::vector<double> term = w.multiply_transposed(p);
    std::vector<double> sum(term.size(), 0.0);
    for (int k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += term[i];
        term = mat_vec(a, term);
    }
    for (double& v : sum) v *= alpha;
    return sum;
}

/// argmin_z 1/2 ||z - b||^2 + lambda TV(z) (anisotropic, n x n) by plain projected
/// gradient on the dual, run long enough to serve as a reference.
inline std::vector<double> tv_prox_oracle(const std::vector<double>& b, int n, double lambda,
                                          int iterations = 200000) {
    const std::size_t sz = b.size();
    std::vector<double> px(sz, 0.0), py(sz, 0.0), z(sz);
    auto primal = [&] {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const std::size_t q = static_cast<std::size_t>(i * n + j);
                double div = -px[q] - py[q];
                if (j > 0) div += px[q - 1];
                if (i > 0) div += py[q - static_cast<std::size_t>(n)];
                z[q] = b[q] - lambda * div;
            }
    };
    const double step = 1.0 / (8.0 * lambda);
    for (int it = 0; it < iterations; ++it) {
        primal();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const std::size_t q = static_cast<std::size_t>(i * n + j);
                if (j + 1 < n) px[q] = std::clamp(px[q] + step * (z[q + 1] - z[q]), -1.0, 1.0);
                if (i + 1 < n)
                    py[q] = std::clamp(py[q] + step * (z[q + static_cast<std::size_t>(n)] - z[q]),
                                       -1.0, 1.0);
            }
    }
    primal();
    return z;
}

/// Anisotropic TV with forward differences, written out independently of the library.
inline double tv_anisotropic(std::span<const double> z, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const std::size_t q = static_cast<std::size_t>(i * n + j);
            if (j + 1 < n) acc += std::abs(z[q + 1] - z[q]);
            if (i + 1 < n) acc += std::abs(z[q + static_cast<std::size_t>(n)] - z[q]);
        }
    return acc;
}

}  // namespace loctomo::testing
