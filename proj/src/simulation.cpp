#include "loctomo/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "loctomo/projector.hpp"

namespace loctomo {

namespace {

struct Ellipse {
    double value, a, b, x0, y0, phi_deg;
};

// Modified (higher contrast) head phantom.
constexpr std::array<Ellipse, 10> kSheppLogan{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
}};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Uniform in (0, 1) from the k-th draw of counter (seed, index).
double uniform(std::uint64_t seed, std::uint64_t index, std::uint64_t k) {
    const std::uint64_t h = splitmix64(splitmix64(seed ^ splitmix64(index)) + k);
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

class SeededStream {
public:
    explicit SeededStream(std::uint64_t seed) : seed_(seed) {}
    double next() { return uniform(seed_, 0x5eedull, counter_++); }
    double between(double lo, double hi) { return lo + (hi - lo) * next(); }
    int integer(int lo, int hi) {
        return lo + static_cast<int>(std::floor(next() * (hi - lo + 1)));
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * std::numbers::pi);
    return a < 0.0 ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace

ImageGrid shepp_logan(int n) {
    if (n < 1) throw std::invalid_argument("shepp_logan: n must be >= 1");
    constexpr int sub = 4;
    struct Prepared {
        double value, inv_a2, inv_b2, x0, y0, c, s;
    };
    std::array<Prepared, kSheppLogan.size()> el{};
    for (std::size_t e = 0; e < kSheppLogan.size(); ++e) {
        const auto& k = kSheppLogan[e];
        const double phi = k.phi_deg * std::numbers::pi / 180.0;
        el[e] = {k.value, 1.0 / (k.a * k.a), 1.0 / (k.b * k.b), k.x0, k.y0, std::cos(phi),
                 std::sin(phi)};
    }
    ImageGrid img(n);
    const double h = 2.0 / n;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int si = 0; si < sub; ++si)
                for (int sj = 0; sj < sub; ++sj) {
                    const double x = -1.0 + (j + (sj + 0.5) / sub) * h;
                    const double y = 1.0 - (i + (si + 0.5) / sub) * h;
                    for (const auto& e : el) {
                        const double dx = x - e.x0;
                        const double dy = y - e.y0;
                        const double u = dx * e.c + dy * e.s;
                        const double v = -dx * e.s + dy * e.c;
                        if (u * u * e.inv_a2 + v * v * e.inv_b2 <= 1.0) acc += e.value;
                    }
                }
            img(i, j) = std::max(0.0, acc / (sub * sub));  // 1 - 0.8 - 0.2 rounds below 0
        }
    return img;
}

ImageGrid binary_structured_phantom(int n, std::uint64_t seed) {
    if (n < 16) throw std::invalid_argument("binary phantom: n must be >= 16");
    SeededStream rng(seed);
    const int teeth = rng.integer(10, 18);
    const double tooth_phase = rng.between(0.0, 2.0 * std::numbers::pi);
    const double root = rng.between(0.66, 0.72);
    const double tip = root + rng.between(0.07, 0.1);
    const double bore = rng.between(0.1, 0.15);
    const double ring_in = rng.between(0.28, 0.31);
    const double ring_out = ring_in + rng.between(0.04, 0.06);
    const int spokes = rng.integer(3, 5);
    const double spoke_half = rng.between(0.12, 0.2);
    const int holes = rng.integer(5, 8);
    const double hole_radius = rng.between(0.04, 0.06);
    const double hole_circle = rng.between(0.47, 0.52);
    const double hole_phase = rng.between(0.0, 2.0 * std::numbers::pi);
    const int slots = rng.integer(2, 4);
    const double slot_phase = rng.between(0.0, 2.0 * std::numbers::pi);
    const double slot_half_width = rng.between(0.015, 0.025);
    // An off-center insert and a notch make the phantom asymmetric.
    const double insert_angle = rng.between(0.0, 2.0 * std::numbers::pi);
    const double insert_radius = rng.between(0.06, 0.09);

    const double pi = std::numbers::pi;
    auto material = [&](double x, double y) -> bool {
        const double r = std::hypot(x, y);
        const double phi = wrap_angle(std::atan2(y, x));
        const double tooth_pos = wrap_angle(phi * teeth - tooth_phase);
        const double outer = tooth_pos < pi ? tip : root;
        if (r > outer) return false;
        if (r < bore) return false;
        // keyway in the bore
        if (x > 0.0 && x < bore + 0.04 && std::abs(y) < 0.025) return false;
        if (r > ring_in && r < ring_out) {
            const double sector = 2.0 * pi / spokes;
            const double within = std::fmod(phi, sector);
            const double d = std::min(within, sector - within);
            if (d > spoke_half) return false;
        }
        for (int h = 0; h < holes; ++h) {
            const double a = hole_phase + 2.0 * pi * h / holes;
            const double hx = hole_circle * std::cos(a);
            const double hy = hole_circle * std::sin(a);
            if (std::hypot(x - hx, y - hy) < hole_radius) return false;
        }
        for (int s = 0; s < slots; ++s) {
            const double a = slot_phase + 2.0 * pi * s / slots;
            const double along = x * std::cos(a) + y * std::sin(a);
            const double across = -x * std::sin(a) + y * std::cos(a);
            if (along > 0.56 && along < root - 0.03 && std::abs(across) < slot_half_width)
                return false;
        }
        const double ix = 0.4 * std::cos(insert_angle);
        const double iy = 0.4 * std::sin(insert_angle);
        if (std::hypot(x - ix, y - iy) < insert_radius) return false;
        return true;
    };

    ImageGrid img(n);
    const double h = 2.0 / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = -1.0 + (j + 0.5) * h;
            const double y = 1.0 - (i + 0.5) * h;
            img(i, j) = material(x, y) ? 1.0 : 0.0;
        }
    return img;
}

ImageGrid downsample_image(const ImageGrid& hi, int factor) {
    if (factor < 1 || hi.size() % factor != 0)
        throw std::invalid_argument("downsample: factor must divide the image size");
    const int n = hi.size() / factor;
    ImageGrid out(n);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int a = 0; a < factor; ++a)
                for (int b = 0; b < factor; ++b) acc += hi(i * factor + a, j * factor + b);
            out(i, j) = acc * inv;
        }
    return out;
}

ProjectionGeometry supersampled_geometry(const ProjectionGeometry& geom, int factor) {
    if (factor < 1) throw std::invalid_argument("supersample: factor must be >= 1");
    const double f = factor;
    const double sp = geom.detector_spacing();
    ProjectionGeometry hi(geom.n_detectors() * factor, geom.angles(), geom.grid_size() * factor,
                          sp);
    return hi.with_centers(f * geom.rotation_center() + 0.5 * (f - 1.0),
                           f * geom.detector_center() + 0.5 * (f - 1.0));
}

Sinogram simulate_data(const ImageGrid& phantom_hi, int factor, const ProjectionGeometry& geom) {
    if (factor < 1) throw std::invalid_argument("simulate: factor must be >= 1");
    if (phantom_hi.size() != geom.grid_size() * factor)
        throw std::invalid_argument("simulate: phantom size must be factor * grid size");
    const ProjectionGeometry hi = supersampled_geometry(geom, factor);
    const Sinogram fine = forward_project(phantom_hi, hi);
    Sinogram out(geom);
    // Fine line integrals are in fine-pixel lengths; averaging f bins and
    // dividing by f gives coarse-pixel lengths.
    const double scale = 1.0 / (static_cast<double>(factor) * factor);
    for (int a = 0; a < geom.n_angles(); ++a) {
        const auto src = fine.row(a);
        auto dst = out.row(a);
        for (int d = 0; d < geom.n_detectors(); ++d) {
            double acc = 0.0;
            for (int s = 0; s < factor; ++s) acc += src[static_cast<std::size_t>(d * factor + s)];
            dst[static_cast<std::size_t>(d)] = acc * scale;
        }
    }
    return out;
}

Sinogram truncate_detectors(const Sinogram& p, int n_keep) {
    const ProjectionGeometry& g = p.geometry();
    if (n_keep < 1 || n_keep > g.n_detectors())
        throw std::invalid_argument("truncate: n_keep must be in [1, N_d]");
    ProjectionGeometry small = g.with_detectors(n_keep);
    const int first = static_cast<int>(g.detector_center() - small.detector_center());
    Sinogram out(small);
    for (int a = 0; a < p.n_angles(); ++a) {
        const auto src = p.row(a);
        auto dst = out.row(a);
        std::copy(src.begin() + first, src.begin() + first + n_keep, dst.begin());
    }
    return out;
}

void NoiseSpec::validate() const {
    if (!(i0 > 0.0) || !std::isfinite(i0)) throw std::invalid_argument("noise: i0 must be > 0");
    if (!(length_scale > 0.0)) throw std::invalid_argument("noise: length_scale must be > 0");
}

Sinogram expected_counts(const Sinogram& p, const NoiseSpec& spec) {
    spec.validate();
    const double p_min = *std::min_element(p.data().begin(), p.data().end());
    Sinogram counts(p.geometry());
    for (std::size_t i = 0; i < p.data().size(); ++i)
        counts.data()[i] = spec.i0 * std::exp(-spec.length_scale * (p.data()[i] - p_min));
    return counts;
}

std::uint64_t poisson_sample(double mean, std::uint64_t seed, std::uint64_t index) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean must be >= 0");
    if (mean < 30.0) {
        const double u = uniform(seed, index, 0);
        double term = std::exp(-mean);
        double cdf = term;
        std::uint64_t k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            term *= mean / static_cast<double>(k);
            cdf += term;
        }
        return k;
    }
    const double u1 = uniform(seed, index, 0);
    const double u2 = uniform(seed, index, 1);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    const double k = std::round(mean + std::sqrt(mean) * z);
    return k < 0.0 ? 0 : static_cast<std::uint64_t>(k);
}

Sinogram apply_poisson_noise(const Sinogram& p, const NoiseSpec& spec) {
    const Sinogram counts = expected_counts(p, spec);
    const double p_min = *std::min_element(p.data().begin(), p.data().end());
    Sinogram out(p.geometry());
    const auto n = static_cast<std::int64_t>(p.data().size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const std::uint64_t k =
            std::max<std::uint64_t>(1, poisson_sample(counts.data()[idx], spec.seed, idx));
        out.data()[idx] = p_min - std::log(static_cast<double>(k) / spec.i0) / spec.length_scale;
    }
    return out;
}

}  // namespace loctomo
