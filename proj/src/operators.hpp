#pragma once

// Private helpers shared by the global solvers and the local engine.

#include <span>
#include <vector>

#include "loctomo/geometry.hpp"
#include "loctomo/projector.hpp"

namespace loctomo::detail {

/// Full-grid gradient step S(x) = x + alpha W^T (p - W x) with preallocated buffers.
class GradientStep {
public:
    GradientStep(const Sinogram& p, const ProjectionGeometry& geom, double alpha);

    void apply(std::span<const double> x, std::span<double> out);
    const WindowProjector& projector() const { return proj_; }

private:
    WindowProjector proj_;
    double alpha_;
    std::vector<double> data_;
    std::vector<double> residual_;
    std::vector<double> back_;
};

void clamp(std::span<double> values, double low, double high);

/// Writes the momentum extrapolation r = x + beta (x - x_prev) into r.
void extrapolate(std::span<const double> x, std::span<const double> x_prev, double beta,
                 std::span<double> r);

double next_momentum(double t);

}  // namespace loctomo::detail
