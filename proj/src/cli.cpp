#include "tmac/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tmac/baselines.hpp"
#include "tmac/config.hpp"
#include "tmac/error.hpp"
#include "tmac/harness.hpp"
#include "tmac/solver.hpp"
#include "tmac/synth.hpp"
#include "tmac/tensor_io.hpp"

namespace tmac::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::size_t kHistoryTail = 10;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
    bool threads_set = false;
    std::string config_path;
};

RunConfig base_config(const GlobalOptions& g) {
    return g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
}

struct CompleteOptions {
    std::string tensor, mask, out, truth;
    std::optional<double> tol;
    std::vector<std::string> scheme;
    std::vector<std::size_t> rank, dr, rmax;
    std::optional<std::size_t> max_iters;
    std::vector<double> alphas;
    bool dynamic_weights = false;
    bool raw_estimate = false;
    bool verbose = false;
};

int cmd_complete(const CompleteOptions& o, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    SolverConfig cfg = base_config(g).solver;
    if (o.tol) cfg.tol = *o.tol;
    if (!o.scheme.empty()) {
        cfg.scheme.clear();
        for (const auto& s : o.scheme) cfg.scheme.push_back(parse_rank_scheme(s));
    }
    if (!o.rank.empty()) cfg.ranks = o.rank;
    if (!o.dr.empty()) cfg.rank_increment = o.dr;
    if (!o.rmax.empty()) cfg.rank_max = o.rmax;
    if (o.max_iters) cfg.max_iters = *o.max_iters;
    if (!o.alphas.empty()) cfg.alphas = o.alphas;
    if (o.dynamic_weights) cfg.dynamic_weights = true;
    if (g.seed) cfg.seed = *g.seed;

    const DenseTensor data = io::read_tensor(o.tensor);
    const io::Mask mask = io::read_mask(o.mask);
    if (mask.dims != data.dims()) throw ShapeError("mask dims do not match tensor dims");
    std::optional<DenseTensor> truth;
    if (!o.truth.empty()) {
        truth = io::read_tensor(o.truth);
        if (truth->dims() != data.dims()) throw ShapeError("truth dims do not match tensor dims");
    }
    const ObservationSet obs = ObservationSet::sample(data, mask.indices);

    const SolveResult res = solve(obs, cfg, [&](const SolverState& s) {
        if (!o.verbose) return;
        err << "iter " << s.iter << "  objective " << s.objective << "  ranks";
        for (auto r : s.ranks()) err << ' ' << r;
        err << '\n';
    });
    DenseTensor result = o.raw_estimate ? res.estimate : fill_unobserved(obs, res.estimate);
    io::write_tensor(o.out, result);

    const auto& rep = res.report;
    json report;
    report["command"] = "complete";
    report["iterations"] = rep.iterations;
    report["final_ranks"] = rep.final_ranks;
    report["final_alphas"] = rep.final_alphas;
    json tail = json::array();
    const std::size_t first = rep.history.size() > kHistoryTail ? rep.history.size() - kHistoryTail : 0;
    for (std::size_t k = first; k < rep.history.size(); ++k)
        tail.push_back({{"iteration", k + 1},
                        {"objective", rep.history[k].objective},
                        {"total_fit", rep.history[k].total_fit},
                        {"ranks", rep.history[k].ranks}});
    report["fit_history_tail"] = tail;
    report["stop_reason"] = std::string(to_string(rep.stop_reason));
    report["wall_time_s"] = rep.wall_time_s;
    report["output"] = o.out;
    if (truth) report["relerr"] = relerr(result, *truth);
    out << report.dump() << '\n';
    err << "complete: " << rep.iterations << " iterations, stop reason " << to_string(rep.stop_reason)
        << ", wrote " << o.out << '\n';
    return kOk;
}

struct SynthOptions {
    std::string spec_path, prefix;
    std::vector<std::size_t> dims;
    std::optional<std::size_t> rank;
    std::optional<std::string> family;
    std::optional<double> sr, sigma;
};

int cmd_synth(const SynthOptions& o, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    SynthSpec spec = base_config(g).synth;
    if (!o.spec_path.empty()) {
        std::ifstream in(o.spec_path, std::ios::binary);
        if (!in) throw InputError("cannot open " + o.spec_path);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw InputError("spec is not valid JSON: " + std::string(e.what()));
        }
        spec = parse_synth_spec(j, spec);
    }
    if (!o.dims.empty()) spec.dims = o.dims;
    if (o.rank) spec.rank = *o.rank;
    if (o.family) spec.family = parse_family(*o.family);
    if (o.sr) spec.sr = *o.sr;
    if (o.sigma) spec.sigma = *o.sigma;
    if (g.seed) spec.seed = *g.seed;

    const SynthData d = generate(spec);
    const std::string truth_path = o.prefix + ".truth.tnsr";
    const std::string mask_path = o.prefix + ".mask";
    const std::string obs_path = o.prefix + ".obs.tnsr";
    io::write_tensor(truth_path, d.truth);
    io::write_mask(mask_path, spec.dims, d.obs.indices());
    io::write_tensor(obs_path, d.obs.to_dense());

    json report{{"command", "synth"},
                {"spec", to_json(spec)},
                {"observed", d.obs.count()},
                {"files", {truth_path, mask_path, obs_path}}};
    out << report.dump() << '\n';
    err << "synth: wrote " << truth_path << ", " << mask_path << ", " << obs_path << '\n';
    return kOk;
}

struct PhaseOptions {
    std::string prefix;
    std::vector<std::string> methods;
    std::vector<std::size_t> dims, ranks;
    std::vector<double> srs;
    std::optional<std::size_t> trials;
    bool no_timing = false;
};

int cmd_phase(const PhaseOptions& o, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    RunConfig rc = base_config(g);
    if (!o.methods.empty()) {
        rc.methods.clear();
        for (const auto& m : o.methods) rc.methods.push_back(MethodVariant::of(parse_method_kind(m)));
    }
    if (!o.dims.empty()) rc.synth.dims = o.dims;
    if (!o.ranks.empty()) rc.grid.ranks = o.ranks;
    if (!o.srs.empty()) rc.grid.srs = o.srs;
    if (o.trials) rc.grid.trials = *o.trials;
    if (g.seed) rc.seed = *g.seed;
    if (g.threads_set) rc.threads = g.threads;

    GridOptions opts;
    opts.base = rc.synth;
    opts.axes = rc.grid;
    opts.solver = rc.solver;
    opts.seed = rc.seed;
    opts.threads = rc.threads;
    opts.success_relerr = rc.success_relerr;

    err << "phase: " << rc.methods.size() << " method(s), " << opts.axes.ranks.size() << " x "
        << opts.axes.srs.size() << " cells, " << opts.axes.trials << " trials, " << opts.threads
        << " thread(s)\n";
    const std::vector<PhaseGrid> grids = run_grid(opts, rc.methods);

    json report;
    report["command"] = "phase";
    json methods = json::array();
    for (const PhaseGrid& grid : grids) {
        const std::string csv = o.prefix + "." + grid.method + ".csv";
        const std::string pgm = o.prefix + "." + grid.method + ".pgm";
        {
            std::ofstream f(csv, std::ios::binary);
            if (!f) throw InputError("cannot open " + csv);
            write_csv(f, grid, !o.no_timing);
        }
        {
            std::ofstream f(pgm, std::ios::binary);
            if (!f) throw InputError("cannot open " + pgm);
            write_pgm(f, grid);
        }
        for (const auto& d : grid.diagnostics) err << grid.method << ": " << d << '\n';
        methods.push_back({{"method", grid.method},
                           {"success_cells", grid.success_cells()},
                           {"failed_trials", grid.diagnostics.size()},
                           {"csv", csv},
                           {"pgm", pgm}});
        err << "phase: " << grid.method << " success cells " << grid.success_cells() << '\n';
    }
    report["methods"] = methods;
    json comparisons = json::array();
    for (std::size_t k = 1; k < grids.size(); ++k) {
        const RegionComparison c = compare_regions(grids[0], grids[k]);
        comparisons.push_back({{"a", grids[0].method},
                               {"b", grids[k].method},
                               {"a_ge_b", c.a_ge_b},
                               {"a_gt_b", c.a_gt_b},
                               {"b_gt_a", c.b_gt_a},
                               {"dominance", c.dominance}});
    }
    report["comparisons"] = comparisons;
    out << report.dump() << '\n';
    return kOk;
}

struct UnfoldOptions {
    std::string tensor, out;
    long mode = 0;
};

int cmd_unfold(const UnfoldOptions& o, std::ostream& out) {
    const DenseTensor t = io::read_tensor(o.tensor);
    if (o.mode < 1 || static_cast<std::size_t>(o.mode) > t.order())
        throw ShapeError("mode " + std::to_string(o.mode) + " is out of range for an order-" +
                         std::to_string(t.order()) + " tensor");
    const Matrix m = unfold(t, static_cast<std::size_t>(o.mode - 1));
    if (o.out.empty() || o.out == "-") {
        io::write_csv(out, m);
    } else {
        std::ofstream f(o.out, std::ios::binary);
        if (!f) throw InputError("cannot open " + o.out);
        io::write_csv(f, m);
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Low-rank tensor completion by parallel matrix factorization", "tmac"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Base seed of every random draw");
    auto* threads_opt = app.add_option("--threads", g.threads, "Worker pool size")->check(CLI::PositiveNumber);
    app.add_option("--config", g.config_path, "JSON run configuration");

    CompleteOptions co;
    auto* complete = app.add_subcommand("complete", "Complete a tensor from observed entries");
    complete->add_option("--tensor", co.tensor, "TNSR1 tensor holding the observed values")->required();
    complete->add_option("--mask", co.mask, "MASK1 file listing observed indices")->required();
    complete->add_option("--out", co.out, "Output TNSR1 path")->required();
    complete->add_option("--truth", co.truth, "Ground-truth TNSR1 for the relative error");
    complete->add_option("--tol", co.tol, "Stopping tolerance");
    complete->add_option("--scheme", co.scheme, "Rank scheme per mode: dec, fix or inc")->delimiter(',');
    complete->add_option("--rank", co.rank, "Initial rank per mode")->delimiter(',');
    complete->add_option("--dr", co.dr, "Rank increment per mode")->delimiter(',');
    complete->add_option("--rmax", co.rmax, "Maximum rank per mode")->delimiter(',');
    complete->add_option("--max-iters", co.max_iters, "Iteration limit");
    complete->add_option("--alphas", co.alphas, "Mode weights, summing to 1")->delimiter(',');
    complete->add_flag("--dynamic-weights", co.dynamic_weights, "Reweight modes by inverse fit");
    complete->add_flag("--raw-estimate", co.raw_estimate,
                       "Write the factor estimate everywhere instead of keeping observed values");
    complete->add_flag("-v,--verbose", co.verbose, "Print every iteration to stderr");

    SynthOptions so;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic low-rank completion problem");
    synth->add_option("--spec", so.spec_path, "JSON spec with keys dims, rank, family, sr, sigma, seed");
    synth->add_option("--prefix", so.prefix, "Output prefix")->required();
    synth->add_option("--dims", so.dims, "Tensor dimensions")->delimiter(',');
    synth->add_option("--rank", so.rank, "Core rank");
    synth->add_option("--family", so.family, "gaussian, uniform_centered or power_law");
    synth->add_option("--sr", so.sr, "Sample ratio");
    synth->add_option("--sigma", so.sigma, "Noise level");

    PhaseOptions po;
    auto* phase = app.add_subcommand("phase", "Run a phase-transition grid");
    phase->add_option("--prefix", po.prefix, "Output prefix")->required();
    phase->add_option("--methods", po.methods, "Method kinds")->delimiter(',');
    phase->add_option("--dims", po.dims, "Tensor dimensions")->delimiter(',');
    phase->add_option("--ranks", po.ranks, "Rank axis")->delimiter(',');
    phase->add_option("--srs", po.srs, "Sample-ratio axis")->delimiter(',');
    phase->add_option("--trials", po.trials, "Trials per cell");
    phase->add_flag("--no-timing", po.no_timing, "Write 0 in the timing column");

    UnfoldOptions uo;
    auto* unfold_cmd = app.add_subcommand("unfold", "Write a mode-n unfolding as CSV");
    unfold_cmd->add_option("--tensor", uo.tensor, "TNSR1 tensor")->required();
    unfold_cmd->add_option("--mode", uo.mode, "Mode, 1-based")->required();
    unfold_cmd->add_option("--out", uo.out, "Output CSV path (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }
    if (seed_opt->count()) g.seed = seed;
    g.threads_set = threads_opt->count() > 0;

    try {
        if (*complete) return cmd_complete(co, g, out, err);
        if (*synth) return cmd_synth(so, g, out, err);
        if (*phase) return cmd_phase(po, g, out, err);
        return cmd_unfold(uo, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumericalError;
    }
}

}  // namespace tmac::cli
