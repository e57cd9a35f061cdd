// Optimized kernels against the serial reference versions.
// Run with OMP_NUM_THREADS to vary the thread count of the parallel kernels.

#include <benchmark/benchmark.h>

#include "loctomo/filters.hpp"
#include "loctomo/local.hpp"
#include "loctomo/projector.hpp"
#include "loctomo/reference.hpp"
#include "loctomo/simulation.hpp"
#include "loctomo/solvers.hpp"

using namespace loctomo;

namespace {

ProjectionGeometry geometry(int n) {
    return ProjectionGeometry::parallel(n, full_view_detectors(n), n);
}

void BM_Forward(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto g = geometry(n);
    const ImageGrid x = shepp_logan(n);
    for (auto _ : state) benchmark::DoNotOptimize(forward_project(x, g));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(g.image_size()) * g.n_angles());
}

void BM_ForwardReference(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto g = geometry(n);
    const ImageGrid x = shepp_logan(n);
    for (auto _ : state) benchmark::DoNotOptimize(reference::forward_project(x, g));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(g.image_size()) * g.n_angles());
}

void BM_Back(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto g = geometry(n);
    const Sinogram p = forward_project(shepp_logan(n), g);
    for (auto _ : state) benchmark::DoNotOptimize(back_project(p, g));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(g.image_size()) * g.n_angles());
}

void BM_BackReference(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto g = geometry(n);
    const Sinogram p = forward_project(shepp_logan(n), g);
    for (auto _ : state) benchmark::DoNotOptimize(reference::back_project(p, g));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(g.image_size()) * g.n_angles());
}

void BM_Convolve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto g = geometry(n);
    const Sinogram p = forward_project(shepp_logan(n), g);
    const AnalyticFilter f = make_analytic_filter(AnalyticKind::ram_lak, g.n_detectors());
    for (auto _ : state) benchmark::DoNotOptimize(convolve_sinogram(p, f));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(g.sinogram_size()));
}

void BM_ConvolveReference(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto g = geometry(n);
    const Sinogram p = forward_project(shepp_logan(n), g);
    const AnalyticFilter f = make_analytic_filter(AnalyticKind::ram_lak, g.n_detectors());
    for (auto _ : state) {
        Sinogram out(g);
        for (int a = 0; a < g.n_angles(); ++a) {
            const auto row = reference::convolve_row(p.row(a), f.taps, f.center());
            std::copy(row.begin(), row.end(), out.row(a).begin());
        }
        benchmark::DoNotOptimize(out);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(g.sinogram_size()));
}

// W_L^T W_L on a padded 64 region, with and without the footprint table.
void BM_WindowNormal(benchmark::State& state) {
    const int n = 512;
    const auto g = geometry(n);
    const Window w = pad_region(Region(224, 224, 64, n));
    const WindowProjector proj(g, w, state.range(0) ? std::size_t{1} << 30 : 0);
    std::vector<double> x(w.pixel_count(), 1.0), y(proj.compact_size()), z(w.pixel_count());
    for (auto _ : state) {
        proj.forward(x, y);
        proj.back(y, z);
        benchmark::DoNotOptimize(z.data());
    }
    state.SetLabel(proj.tabulated() ? "table" : "direct");
}

void BM_FgpTv(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const ImageGrid b = shepp_logan(n);
    for (auto _ : state) benchmark::DoNotOptimize(fgp_tv_denoise(b, 1e-2, 100));
}

}  // namespace

BENCHMARK(BM_Forward)->Arg(32)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardReference)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Back)->Arg(32)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackReference)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Convolve)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvolveReference)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WindowNormal)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FgpTv)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
