#include "tmac/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <optional>
#include <thread>

#include "tmac/baselines.hpp"
#include "tmac/error.hpp"
#include "tmac/seed.hpp"

namespace tmac {

namespace {

std::uint64_t label_hash(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::size_t round_rank(double r) { return std::max<long>(1, std::lround(r)); }

std::size_t ipow_capped(std::size_t base, std::size_t exp, std::size_t cap) {
    std::size_t v = 1;
    for (std::size_t k = 0; k < exp; ++k) {
        v *= base;
        if (v >= cap) return cap;
    }
    return v;
}

void put_number(std::ostream& out, double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.write(buf.data(), end - buf.data());
}

struct TrialOutcome {
    bool ok = false;
    double relerr = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;
    std::string diagnostic;
};

void validate_axes(const GridOptions& opts) {
    const auto& ax = opts.axes;
    if (ax.ranks.empty() || ax.srs.empty()) throw InputError("grid axes must be nonempty");
    if (ax.trials < 1) throw InputError("grid needs at least one trial per cell");
    if (opts.threads < 1) throw InputError("threads must be >= 1");
    for (auto r : ax.ranks) {
        SynthSpec s = opts.base;
        s.rank = r;
        s.sr = 1.0;
        validate(s);
    }
    for (double sr : ax.srs)
        if (!(sr > 0.0 && sr <= 1.0)) throw InputError("grid sample ratios must be in (0, 1]");
}

}  // namespace

std::string_view to_string(MethodKind k) {
    switch (k) {
        case MethodKind::TmacFix: return "tmac-fix";
        case MethodKind::TmacInc: return "tmac-inc";
        case MethodKind::TmacDec: return "tmac-dec";
        case MethodKind::MatComp: return "matcomp";
        case MethodKind::SquareDeal: return "squaredeal";
    }
    return "tmac-fix";
}

MethodKind parse_method_kind(std::string_view s) {
    if (s == "tmac-fix") return MethodKind::TmacFix;
    if (s == "tmac-inc") return MethodKind::TmacInc;
    if (s == "tmac-dec") return MethodKind::TmacDec;
    if (s == "matcomp") return MethodKind::MatComp;
    if (s == "squaredeal") return MethodKind::SquareDeal;
    throw InputError("unknown method '" + std::string(s) +
                     "' (expected tmac-fix, tmac-inc, tmac-dec, matcomp or squaredeal)");
}

MethodVariant MethodVariant::of(MethodKind kind) { return {std::string(to_string(kind)), kind, {}}; }

SolverConfig variant_config(const MethodVariant& v, std::size_t true_rank, const Dims& dims,
                            const SolverConfig& base) {
    SolverConfig cfg = base;
    cfg.dynamic_weights = false;
    cfg.alphas = v.alphas;
    const double r = static_cast<double>(true_rank);
    switch (v.kind) {
        case MethodKind::TmacFix:
            cfg.ranks = {true_rank};
            cfg.scheme = {RankScheme::Fixed};
            break;
        case MethodKind::TmacInc:
            cfg.ranks = {round_rank(0.75 * r)};
            cfg.scheme = {RankScheme::Increase};
            break;
        case MethodKind::TmacDec:
            cfg.ranks = {round_rank(1.25 * r)};
            cfg.scheme = {RankScheme::Decrease};
            cfg.rank_max = {std::max(cfg.ranks[0], base.rank_max.empty() ? 0 : base.rank_max[0])};
            break;
        case MethodKind::MatComp:
            cfg.alphas.clear();
            cfg.ranks = {true_rank};
            cfg.scheme = {RankScheme::Fixed};
            break;
        case MethodKind::SquareDeal: {
            cfg.alphas.clear();
            const SquarePlan plan = square_plan(dims);
            const std::size_t cap = std::min(plan.left_dim, plan.right_dim);
            cfg.ranks = {std::min(ipow_capped(true_rank, plan.split, cap),
                                  ipow_capped(true_rank, dims.size() - plan.split, cap))};
            cfg.scheme = {RankScheme::Fixed};
            break;
        }
    }
    if (cfg.rank_max.size() == 1) cfg.rank_max[0] = std::max(cfg.rank_max[0], cfg.ranks[0]);
    return cfg;
}

SolveResult run_variant(const MethodVariant& v, std::size_t true_rank, const ObservationSet& obs,
                        const SolverConfig& base) {
    const SolverConfig cfg = variant_config(v, true_rank, obs.dims(), base);
    switch (v.kind) {
        case MethodKind::MatComp: return matcomp(obs, cfg);
        case MethodKind::SquareDeal: return square_solve(obs, square_plan(obs.dims()), cfg);
        default: return solve(obs, cfg);
    }
}

GridAxes desk_axes() {
    GridAxes ax;
    for (std::size_t r = 1; r <= 8; ++r) ax.ranks.push_back(r);
    for (int k = 1; k <= 9; ++k) ax.srs.push_back(k / 10.0);
    ax.trials = 10;
    return ax;
}

std::size_t PhaseGrid::success_cells(double min_rate) const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [&](const CellStats& c) {
        return c.success_rate() >= min_rate;
    }));
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t rank_index, std::size_t sr_index,
                         std::size_t trial) {
    return derive_seed(base, {rank_index, sr_index, trial});
}

std::vector<PhaseGrid> run_grid(const GridOptions& opts, const std::vector<MethodVariant>& variants) {
    validate_axes(opts);
    if (variants.empty()) throw InputError("no methods configured");
    const auto& ax = opts.axes;
    const std::size_t n_cells = ax.ranks.size() * ax.srs.size();
    const std::size_t n_items = n_cells * ax.trials;
    const std::size_t n_var = variants.size();

    std::vector<TrialOutcome> outcomes(n_items * n_var);

    auto run_item = [&](std::size_t item) {
        const std::size_t cell = item / ax.trials;
        const std::size_t trial = item % ax.trials;
        const std::size_t ri = cell / ax.srs.size();
        const std::size_t si = cell % ax.srs.size();
        const std::uint64_t seed = trial_seed(opts.seed, ri, si, trial);

        SynthSpec spec = opts.base;
        spec.rank = ax.ranks[ri];
        spec.sr = ax.srs[si];
        spec.seed = seed;
        std::optional<SynthData> data;
        std::string gen_error;
        try {
            data.emplace(generate(spec));
        } catch (const std::exception& e) {
            gen_error = e.what();
        }
        for (std::size_t v = 0; v < n_var; ++v) {
            TrialOutcome& out = outcomes[item * n_var + v];
            if (!data) {
                out.diagnostic = "data generation failed: " + gen_error;
                continue;
            }
            SolverConfig base = opts.solver;
            base.seed = derive_seed(seed, {label_hash(variants[v].label)});
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const SolveResult res = run_variant(variants[v], spec.rank, data->obs, base);
                out.relerr = relerr(res.estimate, data->truth);
                out.ok = std::isfinite(out.relerr);
                if (!out.ok) out.diagnostic = "non-finite relative error";
            } catch (const std::exception& e) {
                out.diagnostic = e.what();
            }
            out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t item = next++; item < n_items; item = next++) run_item(item);
    };
    const std::size_t n_threads = std::min(opts.threads, n_items);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    std::vector<PhaseGrid> grids(n_var);
    for (std::size_t v = 0; v < n_var; ++v) {
        PhaseGrid& g = grids[v];
        g.method = variants[v].label;
        g.ranks = ax.ranks;
        g.srs = ax.srs;
        g.trials = ax.trials;
        g.cells.resize(n_cells);
        for (std::size_t cell = 0; cell < n_cells; ++cell) {
            CellStats& c = g.cells[cell];
            double err_sum = 0.0, time_sum = 0.0;
            std::size_t finished = 0;
            for (std::size_t t = 0; t < ax.trials; ++t) {
                const TrialOutcome& o = outcomes[(cell * ax.trials + t) * n_var + v];
                ++c.trials;
                time_sum += o.seconds;
                if (!o.ok) {
                    ++c.failures;
                    g.diagnostics.push_back("rank=" + std::to_string(ax.ranks[cell / ax.srs.size()]) +
                                            " sr=" + std::to_string(ax.srs[cell % ax.srs.size()]) +
                                            " trial=" + std::to_string(t) + ": " + o.diagnostic);
                    continue;
                }
                ++finished;
                err_sum += o.relerr;
                if (o.relerr <= opts.success_relerr) ++c.successes;
            }
            c.mean_relerr = finished ? err_sum / static_cast<double>(finished)
                                     : std::numeric_limits<double>::quiet_NaN();
            c.mean_time_s = time_sum / static_cast<double>(c.trials);
        }
    }
    return grids;
}

PhaseGrid run_grid(const GridOptions& opts, const MethodVariant& variant) {
    return std::move(run_grid(opts, std::vector<MethodVariant>{variant}).front());
}

RegionComparison compare_regions(const PhaseGrid& a, const PhaseGrid& b, double min_rate) {
    if (a.ranks != b.ranks || a.srs != b.srs || a.cells.size() != b.cells.size())
        throw ShapeError("compare_regions: grids have different axes");
    RegionComparison out;
    out.rate_diff.resize(a.cells.size());
    for (std::size_t k = 0; k < a.cells.size(); ++k) {
        const double d = a.cells[k].success_rate() - b.cells[k].success_rate();
        out.rate_diff[k] = d;
        if (d >= 0.0) ++out.a_ge_b;
        if (d > 0.0) ++out.a_gt_b;
        if (d < 0.0) ++out.b_gt_a;
    }
    out.a_success_cells = a.success_cells(min_rate);
    out.b_success_cells = b.success_cells(min_rate);
    if (out.a_gt_b == 0 && out.b_gt_a == 0)
        out.dominance = "tie";
    else if (out.b_gt_a == 0)
        out.dominance = "a";
    else if (out.a_gt_b == 0)
        out.dominance = "b";
    else
        out.dominance = "mixed";
    return out;
}

void write_csv(std::ostream& out, const PhaseGrid& g, bool with_timing) {
    out << "method,rank,sr,trials,successes,success_rate,mean_relerr,mean_time_s\n";
    for (std::size_t ri = 0; ri < g.ranks.size(); ++ri) {
        for (std::size_t si = 0; si < g.srs.size(); ++si) {
            const CellStats& c = g.cell(ri, si);
            out << g.method << ',' << g.ranks[ri] << ',';
            put_number(out, g.srs[si]);
            out << ',' << c.trials << ',' << c.successes << ',';
            put_number(out, c.success_rate());
            out << ',';
            put_number(out, c.mean_relerr);
            out << ',';
            put_number(out, with_timing ? c.mean_time_s : 0.0);
            out << '\n';
        }
    }
}

void write_pgm(std::ostream& out, const PhaseGrid& g) {
    out << "P2\n" << g.srs.size() << ' ' << g.ranks.size() << "\n255\n";
    for (std::size_t ri = 0; ri < g.ranks.size(); ++ri) {
        for (std::size_t si = 0; si < g.srs.size(); ++si) {
            if (si) out << ' ';
            out << std::lround(255.0 * g.cell(ri, si).success_rate());
        }
        out << '\n';
    }
}

}  // namespace tmac
