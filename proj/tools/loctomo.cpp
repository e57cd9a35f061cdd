// loctomo: simulate data, build filter banks, reconstruct, score and sweep.
//
// Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "loctomo/filters.hpp"
#include "loctomo/io.hpp"
#include "loctomo/local.hpp"
#include "loctomo/metrics.hpp"
#include "loctomo/projector.hpp"
#include "loctomo/simulation.hpp"
#include "loctomo/solvers.hpp"

namespace fs = std::filesystem;
using namespace loctomo;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int default_workers() {
    if (const char* env = std::getenv("LOCTOMO_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v >= 1) return v;
        } catch (const std::exception&) {
        }
        throw UsageError("LOCTOMO_THREADS must be a positive integer");
    }
    return 1;
}

std::vector<double> parse_list(const std::string& text, std::size_t count, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string(flag) + ": cannot parse '" + item + "'");
        }
    }
    if (out.size() != count)
        throw UsageError(std::string(flag) + ": expected " + std::to_string(count) +
                         " comma-separated values");
    return out;
}

Region parse_region(const std::string& text, int grid, const char* flag) {
    const auto v = parse_list(text, 3, flag);
    for (double x : v)
        if (x != static_cast<int>(x)) throw UsageError(std::string(flag) + ": expects integers");
    try {
        return Region(static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), grid);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string(flag) + ": " + e.what());
    }
}

void print_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
    std::string phantom = "shepp-logan";
    int n = 256;
    int angles = 180;
    int detectors = 0;
    int supersample = 4;
    std::optional<double> i0;
    std::uint64_t seed = 0;
    std::optional<double> length_scale;
    std::string out = ".";
};

void run_simulate(const SimulateArgs& a) {
    const int nd = a.detectors > 0 ? a.detectors : a.n;
    const auto geom = ProjectionGeometry::parallel(a.angles, nd, a.n);
    const int hi_n = a.n * a.supersample;
    ImageGrid hi;
    if (a.phantom == "shepp-logan")
        hi = shepp_logan(hi_n);
    else if (a.phantom == "binary")
        hi = binary_structured_phantom(hi_n, a.seed);
    else
        throw UsageError("--phantom must be shepp-logan or binary");
    Sinogram p = simulate_data(hi, a.supersample, geom);
    if (a.i0) {
        NoiseSpec spec{*a.i0, a.seed, a.length_scale.value_or(1.0 / a.n)};
        p = apply_poisson_noise(p, spec);
    }
    const fs::path dir(a.out);
    fs::create_directories(dir);
    io::write_grid(dir / "phantom.ltrg", hi);
    io::write_grid(dir / "truth.ltrg", downsample_image(hi, a.supersample));
    io::write_sinogram(dir / "sino.ltsg", p);
}

// ---- filters ----------------------------------------------------------------

struct FiltersArgs {
    int angles = 180;
    int detectors = 256;
    int grid = 0;
    int iterations = 200;
    std::optional<double> alpha;
    std::string out;
};

void run_filters(const FiltersArgs& a) {
    if (a.iterations < 1) throw UsageError("--iterations must be >= 1");
    if (a.alpha && !(*a.alpha > 0.0)) throw UsageError("--alpha must be positive");
    const auto geom =
        ProjectionGeometry::parallel(a.angles, a.detectors, a.grid > 0 ? a.grid : a.detectors);
    io::write_filter_bank(a.out, compute_sirt_filters(geom, a.iterations, a.alpha));
}

// ---- reconstruct / sweep shared ------------------------------------------------

struct ReconArgs {
    std::string sino;
    int grid = 0;
    std::string method = "sirt";
    std::string filter = "ram-lak";
    std::string local;
    std::string bank;
    int tile = 0;
    int workers = 0;
    double lambda = 0.0;
    std::string box = "0,1";
    int iterations = 200;
    int fgp_iterations = 100;
    int levels = 0;
    bool no_disc = false;
    double pad_factor = 1.0 / 8.0;
};

struct Problem {
    Sinogram p;
    ProjectionGeometry geom;
    std::optional<Region> region;
    std::optional<FilterBank> bank;
    SolverConfig cfg;
    LocalOptions options;
};

PriorSpec prior_for(const ReconArgs& a, double lambda) {
    if (a.method == "sirt") return PriorSpec::none();
    if (a.method == "sirt-box") {
        const auto b = parse_list(a.box, 2, "--box");
        if (!(b[0] <= b[1])) throw UsageError("--box: requires low <= high");
        return PriorSpec::box(b[0], b[1]);
    }
    if (a.method == "ista-haar") return PriorSpec::wavelet(lambda, a.levels);
    if (a.method == "fista-tv") return PriorSpec::tv(lambda, a.fgp_iterations);
    throw UsageError("--method must be one of fbp, sirt, sirt-box, ista-haar, fista-tv");
}

Problem load_problem(const ReconArgs& a) {
    if (a.iterations < 1) throw UsageError("--iterations must be >= 1");
    if (a.fgp_iterations < 1) throw UsageError("--fgp-iterations must be >= 1");
    if (a.lambda < 0.0) throw UsageError("--lambda must be >= 0");
    if (a.pad_factor < 0.0) throw UsageError("--pad-factor must be >= 0");
    if (!a.local.empty() && a.tile > 0) throw UsageError("--local and --tile are exclusive");
    Sinogram probe = io::read_sinogram(a.sino, a.grid > 0 ? a.grid : 1);
    const int grid = a.grid > 0 ? a.grid : probe.n_detectors();
    Sinogram p = io::read_sinogram(a.sino, grid);
    Problem prob{p, p.geometry(), std::nullopt, std::nullopt, SolverConfig{a.iterations, {}}, {}};
    if (!a.local.empty()) prob.region = parse_region(a.local, grid, "--local");
    prob.options.pad_factor = a.pad_factor;
    prob.options.disc_correction = !a.no_disc;
    const bool needs_bank = a.method != "fbp" && (prob.region || a.tile > 0);
    if (needs_bank) {
        if (a.bank.empty()) throw UsageError("local and tiled reconstruction require --bank");
        prob.bank = io::read_filter_bank(a.bank, prob.geom);
        if (prob.bank->size() < a.iterations)
            throw UsageError("--bank holds fewer filters than --iterations");
    }
    return prob;
}

// Full N x N result; local reconstructions are zero outside the region.
ImageGrid reconstruct(const ReconArgs& a, const Problem& prob, double lambda,
                      const ConvCache* cache) {
    if (a.method == "fbp") {
        const auto filter = make_analytic_filter(parse_analytic_kind(a.filter), prob.p.n_detectors());
        return fbp(prob.p, filter, prob.geom, prob.region);
    }
    const PriorSpec prior = prior_for(a, lambda);
    if (a.tile > 0) {
        if (prob.geom.grid_size() % a.tile != 0) throw UsageError("--tile must divide the grid size");
        const int workers = a.workers > 0 ? a.workers : default_workers();
        return tile_reconstruct(prob.p, prob.geom, a.tile, prob.cfg, prior, *prob.bank, workers,
                                cache, prob.options);
    }
    if (prob.region) {
        const ImageGrid part = local_reconstruct(prob.p, prob.geom, *prob.region, prob.cfg, prior,
                                                 *prob.bank, cache, prob.options);
        return embed(part, *prob.region);
    }
    switch (prior.kind) {
        case PriorKind::none: return sirt(prob.p, prob.geom, prob.cfg);
        case PriorKind::box: return sirt_box(prob.p, prob.geom, prob.cfg, prior.box_low, prior.box_high);
        case PriorKind::wavelet_l1:
            return ista_wavelet(prob.p, prob.geom, prob.cfg, lambda, a.levels);
        case PriorKind::tv: return fista_tv(prob.p, prob.geom, prob.cfg, lambda, a.fgp_iterations);
    }
    throw std::logic_error("unhandled method");
}

void run_reconstruct(const ReconArgs& a, const std::string& out, const std::string& pgm) {
    const Problem prob = load_problem(a);
    const ImageGrid x = reconstruct(a, prob, a.lambda, nullptr);
    io::write_grid(out, x);
    if (!pgm.empty()) io::write_pgm(pgm, x);
}

// ---- score ------------------------------------------------------------------

void run_score(const std::string& recon, const std::string& truth, const std::string& region) {
    const ImageGrid x = io::read_grid(recon);
    const ImageGrid t = io::read_grid(truth);
    if (x.size() != t.size()) throw UsageError("reconstruction and truth sizes differ");
    std::optional<Region> r;
    if (!region.empty()) r = parse_region(region, t.size(), "--region");
    print_row(std::cout, {"mse", "ssim"});
    print_row(std::cout, {io::format_number(mse(x, t, r)), io::format_number(ssim(x, t, r))});
}

// ---- sweep ------------------------------------------------------------------

struct SweepArgs {
    std::string truth;
    std::string metric = "mse";
    double low = 1e-4;
    double high = 1.0;
    int budget = 12;
    std::string region;
};

void run_sweep(const ReconArgs& a, const SweepArgs& s) {
    if (a.method != "ista-haar" && a.method != "fista-tv")
        throw UsageError("sweep: --method must be ista-haar or fista-tv");
    if (s.metric != "mse" && s.metric != "ssim") throw UsageError("--metric must be mse or ssim");
    if (!(s.low > 0.0 && s.low < s.high)) throw UsageError("sweep: requires 0 < --low < --high");
    if (s.budget < 3) throw UsageError("--budget must be >= 3");
    const Problem prob = load_problem(a);
    const ImageGrid truth = io::read_grid(s.truth);
    if (truth.size() != prob.geom.grid_size()) throw UsageError("--truth size does not match --grid");
    std::optional<Region> score_region = prob.region;
    if (!s.region.empty()) score_region = parse_region(s.region, truth.size(), "--region");

    std::optional<ConvCache> cache;
    if (prob.bank) cache.emplace(build_conv_cache(prob.p, *prob.bank, prob.options.disc_correction,
                                                  a.iterations));
    const ConvCache* cache_ptr = cache ? &*cache : nullptr;

    std::cout << "kind,lambda,mse,ssim\n";
    struct Row {
        double lambda, mse, ssim;
    };
    std::vector<Row> rows;
    auto objective = [&](double lambda) {
        const ImageGrid x = reconstruct(a, prob, lambda, cache_ptr);
        const Row row{lambda, mse(x, truth, score_region), ssim(x, truth, score_region)};
        rows.push_back(row);
        print_row(std::cout, {"eval", io::format_number(row.lambda), io::format_number(row.mse),
                              io::format_number(row.ssim)});
        return s.metric == "mse" ? row.mse : -row.ssim;
    };
    const OptimizeResult res = optimize_param(objective, s.low, s.high, s.budget);
    const auto best = rows[static_cast<std::size_t>(
        std::find_if(res.history.begin(), res.history.end(),
                     [&](const auto& h) { return h.first == res.best_param; }) -
        res.history.begin())];
    print_row(std::cout, {"best", io::format_number(best.lambda), io::format_number(best.mse),
                          io::format_number(best.ssim)});
}

// ---- export -----------------------------------------------------------------

void run_export(const std::string& in, const std::string& out) {
    io::write_pgm(out, io::read_grid(in));
}

void add_recon_options(CLI::App* cmd, ReconArgs& a) {
    cmd->add_option("--sino", a.sino, "Sinogram file (LTSG)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--grid", a.grid, "Reconstruction grid size N (default N_d)");
    cmd->add_option("--method", a.method, "fbp, sirt, sirt-box, ista-haar or fista-tv");
    cmd->add_option("--filter", a.filter, "Analytic filter for fbp: ram-lak, shepp-logan, hann");
    cmd->add_option("--local", a.local, "Local region r0,c0,size");
    cmd->add_option("--bank", a.bank, "Filter bank file (LTFB)")->check(CLI::ExistingFile);
    cmd->add_option("--tile", a.tile, "Tile size for tiled full-grid reconstruction");
    cmd->add_option("--workers", a.workers, "Tile worker threads (default LOCTOMO_THREADS or 1)");
    cmd->add_option("--lambda", a.lambda, "Regularization weight");
    cmd->add_option("--box", a.box, "Box constraint low,high");
    cmd->add_option("--iterations", a.iterations, "Iterations");
    cmd->add_option("--fgp-iterations", a.fgp_iterations, "Inner TV iterations");
    cmd->add_option("--levels", a.levels, "Haar levels (0 = automatic)");
    cmd->add_flag("--no-disc-correction", a.no_disc, "Disable disc pre-correction");
    cmd->add_option("--pad-factor", a.pad_factor, "Padding per side as a fraction of N_L");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local tomographic reconstruction toolkit"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Generate phantom, ground truth and sinogram");
    c_sim->add_option("--phantom", sim.phantom, "shepp-logan or binary");
    c_sim->add_option("--n", sim.n, "Grid size N")->check(CLI::PositiveNumber);
    c_sim->add_option("--angles", sim.angles, "Number of angles")->check(CLI::PositiveNumber);
    c_sim->add_option("--detectors", sim.detectors, "Detector count (default N)");
    c_sim->add_option("--supersample", sim.supersample, "Supersampling factor")
        ->check(CLI::PositiveNumber);
    c_sim->add_option("--i0", sim.i0, "Peak photon count; omit for noiseless data")
        ->check(CLI::PositiveNumber);
    c_sim->add_option("--seed", sim.seed, "Noise and phantom seed");
    c_sim->add_option("--length-scale", sim.length_scale, "Pixel length in attenuation units (default 1/N)")
        ->check(CLI::PositiveNumber);
    c_sim->add_option("--out", sim.out, "Output directory");

    FiltersArgs fil;
    auto* c_fil = app.add_subcommand("filters", "Compute a SIRT-approximating filter bank");
    c_fil->add_option("--angles", fil.angles, "Number of angles")->check(CLI::PositiveNumber);
    c_fil->add_option("--detectors", fil.detectors, "Detector count")->check(CLI::PositiveNumber);
    c_fil->add_option("--grid", fil.grid, "Grid size (default detector count)");
    c_fil->add_option("--iterations", fil.iterations, "Number of filters n");
    c_fil->add_option("--alpha", fil.alpha, "Step size (default 1/(N_theta N_d))");
    c_fil->add_option("--out", fil.out, "Output LTFB file")->required();

    ReconArgs rec;
    std::string rec_out, rec_pgm;
    auto* c_rec = app.add_subcommand("reconstruct", "Global, local or tiled reconstruction");
    add_recon_options(c_rec, rec);
    c_rec->add_option("--out", rec_out, "Output LTRG file")->required();
    c_rec->add_option("--pgm", rec_pgm, "Optional PGM preview");

    std::string sc_recon, sc_truth, sc_region;
    auto* c_score = app.add_subcommand("score", "Print mse,ssim of a reconstruction");
    c_score->add_option("--recon", sc_recon, "Reconstruction (LTRG)")->required()->check(CLI::ExistingFile);
    c_score->add_option("--truth", sc_truth, "Ground truth (LTRG)")->required()->check(CLI::ExistingFile);
    c_score->add_option("--region", sc_region, "Scoring region r0,c0,size");

    ReconArgs sw;
    SweepArgs sws;
    auto* c_sweep = app.add_subcommand("sweep", "Nelder-Mead search for lambda");
    add_recon_options(c_sweep, sw);
    c_sweep->add_option("--truth", sws.truth, "Ground truth (LTRG)")->required()->check(CLI::ExistingFile);
    c_sweep->add_option("--metric", sws.metric, "mse (minimize) or ssim (maximize)");
    c_sweep->add_option("--low", sws.low, "Lower lambda bound");
    c_sweep->add_option("--high", sws.high, "Upper lambda bound");
    c_sweep->add_option("--budget", sws.budget, "Number of reconstructions");
    c_sweep->add_option("--region", sws.region, "Scoring region (default: the --local region)");

    std::string ex_in, ex_out;
    auto* c_exp = app.add_subcommand("export", "Convert a grid file to 16-bit PGM");
    c_exp->add_option("--in", ex_in, "Grid file (LTRG)")->required()->check(CLI::ExistingFile);
    c_exp->add_option("--out", ex_out, "PGM file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_sim->parsed()) run_simulate(sim);
        else if (c_fil->parsed()) run_filters(fil);
        else if (c_rec->parsed()) run_reconstruct(rec, rec_out, rec_pgm);
        else if (c_score->parsed()) run_score(sc_recon, sc_truth, sc_region);
        else if (c_sweep->parsed()) run_sweep(sw, sws);
        else if (c_exp->parsed()) run_export(ex_in, ex_out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
