#include "loctomo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace loctomo {

namespace {

Region resolve(const ImageGrid& a, const ImageGrid& b, const std::optional<Region>& region) {
    if (a.size() != b.size()) throw std::invalid_argument("metric: image sizes differ");
    if (!region) return Region::full(a.size());
    if (region->grid_size != a.size())
        throw std::invalid_argument("metric: region grid does not match images");
    return *region;
}

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(static_cast<std::size_t>(size));
    const double c = 0.5 * (size - 1);
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - c;
        w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += w[static_cast<std::size_t>(i)];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Separable weighted local means over "valid" window positions of a size x size block.
std::vector<double> local_mean(const std::vector<double>& src, int size,
                               const std::vector<double>& w) {
    const int k = static_cast<int>(w.size());
    const int out = size - k + 1;
    std::vector<double> rows(static_cast<std::size_t>(size) * out);
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < out; ++j) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t)
                acc += w[static_cast<std::size_t>(t)] * src[static_cast<std::size_t>(i) * size + j + t];
            rows[static_cast<std::size_t>(i) * out + j] = acc;
        }
    std::vector<double> res(static_cast<std::size_t>(out) * out);
    for (int i = 0; i < out; ++i)
        for (int j = 0; j < out; ++j) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t)
                acc += w[static_cast<std::size_t>(t)] * rows[static_cast<std::size_t>(i + t) * out + j];
            res[static_cast<std::size_t>(i) * out + j] = acc;
        }
    return res;
}

}  // namespace

double mse(const ImageGrid& a, const ImageGrid& b, const std::optional<Region>& region) {
    const Region r = resolve(a, b, region);
    double acc = 0.0;
    for (int i = r.row0; i < r.row0 + r.size; ++i)
        for (int j = r.col0; j < r.col0 + r.size; ++j) {
            const double d = a(i, j) - b(i, j);
            acc += d * d;
        }
    return acc / (static_cast<double>(r.size) * r.size);
}

double ssim(const ImageGrid& image, const ImageGrid& reference, const std::optional<Region>& region,
            const SsimOptions& options) {
    const Region r = resolve(image, reference, region);
    if (options.window < 1 || !(options.sigma > 0.0))
        throw std::invalid_argument("ssim: window and sigma must be positive");
    double range = 0.0;
    if (options.dynamic_range) {
        range = *options.dynamic_range;
        if (!(range > 0.0)) throw std::invalid_argument("ssim: dynamic range must be positive");
    } else {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int i = r.row0; i < r.row0 + r.size; ++i)
            for (int j = r.col0; j < r.col0 + r.size; ++j) {
                lo = std::min(lo, reference(i, j));
                hi = std::max(hi, reference(i, j));
            }
        range = hi > lo ? hi - lo : 1.0;
    }
    int win = std::min(options.window, r.size);
    if (win % 2 == 0) --win;
    win = std::max(win, 1);
    const auto w = gaussian_window(win, options.sigma);

    const int n = r.size;
    const std::size_t count = static_cast<std::size_t>(n) * n;
    std::vector<double> a(count), b(count), aa(count), bb(count), ab(count);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const std::size_t q = static_cast<std::size_t>(i) * n + j;
            a[q] = image(r.row0 + i, r.col0 + j);
            b[q] = reference(r.row0 + i, r.col0 + j);
            aa[q] = a[q] * a[q];
            bb[q] = b[q] * b[q];
            ab[q] = a[q] * b[q];
        }
    const auto mu_a = local_mean(a, n, w);
    const auto mu_b = local_mean(b, n, w);
    const auto e_aa = local_mean(aa, n, w);
    const auto e_bb = local_mean(bb, n, w);
    const auto e_ab = local_mean(ab, n, w);

    const double c1 = (options.k1 * range) * (options.k1 * range);
    const double c2 = (options.k2 * range) * (options.k2 * range);
    double total = 0.0;
    for (std::size_t q = 0; q < mu_a.size(); ++q) {
        const double ma = mu_a[q];
        const double mb = mu_b[q];
        const double va = e_aa[q] - ma * ma;
        const double vb = e_bb[q] - mb * mb;
        const double cov = e_ab[q] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(mu_a.size());
}

OptimizeResult optimize_param(const std::function<double(double)>& objective, double low,
                              double high, int budget, ParamScale scale) {
    if (!(low < high)) throw std::invalid_argument("optimize: requires low < high");
    if (scale == ParamScale::log10 && !(low > 0.0))
        throw std::invalid_argument("optimize: log10 scale requires low > 0");
    if (budget < 3) throw std::invalid_argument("optimize: budget must be >= 3");

    const bool use_log = scale == ParamScale::log10;
    const double lo = use_log ? std::log10(low) : low;
    const double hi = use_log ? std::log10(high) : high;
    auto to_param = [&](double s) { return use_log ? std::pow(10.0, s) : s; };

    OptimizeResult result;
    result.best_value = std::numeric_limits<double>::infinity();
    auto eval = [&](double s) {
        s = std::clamp(s, lo, hi);
        const double param = std::clamp(to_param(s), low, high);
        const double v = objective(param);
        ++result.evaluations;
        result.history.emplace_back(param, v);
        if (v < result.best_value || result.evaluations == 1) {
            result.best_value = v;
            result.best_param = param;
        }
        return std::make_pair(s, v);
    };
    auto left = [&] { return budget - result.evaluations; };

    const double mid = 0.5 * (lo + hi);
    const double step = use_log ? 0.5 : 0.25 * (hi - lo);
    auto p0 = eval(mid);
    auto p1 = eval(mid + step);

    while (left() > 0) {
        auto& best = p0.second <= p1.second ? p0 : p1;
        auto& worst = p0.second <= p1.second ? p1 : p0;
        const double c = best.first;
        const auto reflected = eval(c + (c - worst.first));
        if (left() == 0) {
            if (reflected.second < worst.second) worst = reflected;
            break;
        }
        if (reflected.second < best.second) {
            const auto expanded = eval(c + 2.0 * (c - worst.first));
            worst = expanded.second < reflected.second ? expanded : reflected;
            continue;
        }
        const bool outside = reflected.second < worst.second;
        const double target = outside ? reflected.first : worst.first;
        const auto contracted = eval(c + 0.5 * (target - c));
        if (contracted.second < (outside ? reflected.second : worst.second)) {
            worst = contracted;
            continue;
        }
        if (left() == 0) break;
        worst = eval(c + 0.5 * (worst.first - c));
    }
    return result;
}

}  // namespace loctomo
