#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "loctomo/geometry.hpp"

namespace loctomo {

/// Mean squared difference over `region` (whole grid if absent).
double mse(const ImageGrid& a, const ImageGrid& b, const std::optional<Region>& region = std::nullopt);

struct SsimOptions {
    std::optional<double> dynamic_range;  // max - min of the reference when absent
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

/// Mean SSIM with a Gaussian window over all window positions that fit inside
/// the region. `reference` supplies the default dynamic range.
double ssim(const ImageGrid& image, const ImageGrid& reference,
            const std::optional<Region>& region = std::nullopt, const SsimOptions& options = {});

enum class ParamScale { log10, linear };

struct OptimizeResult {
    double best_param = 0.0;
    double best_value = 0.0;
    int evaluations = 0;
    std::vector<std::pair<double, double>> history;  // (param, value) per evaluation
};

/// One-dimensional Nelder-Mead minimization within [low, high] using exactly
/// `budget` objective evaluations. In log10 scale the simplex lives in
/// log10(param) and starts at {mid, mid + 0.5}.
OptimizeResult optimize_param(const std::function<double(double)>& objective, double low,
                              double high, int budget, ParamScale scale = ParamScale::log10);

}  // namespace loctomo
