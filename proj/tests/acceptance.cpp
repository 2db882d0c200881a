// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "test_support.hpp"
#include "tmac/cli.hpp"
#include "tmac/harness.hpp"
#include "tmac/solver.hpp"
#include "tmac/synth.hpp"

using namespace tmac;
namespace fs = std::filesystem;
using tmac::testing::gaussian;
using tmac::testing::pinv_oracle;
using tmac::testing::rel_diff;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool ok = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

SynthData gaussian_instance(const Dims& dims, std::size_t r, double sr, std::uint64_t seed, double sigma = 0.0) {
    SynthSpec s;
    s.dims = dims;
    s.rank = r;
    s.sr = sr;
    s.sigma = sigma;
    s.seed = seed;
    return generate(s);
}

// 1. Worked example: mode-1 and mode-3 unfoldings and the fold back.
Outcome worked_example() {
    const DenseTensor t = tmac::testing::example_tensor();
    Matrix m1(2, 4), m3(2, 4);
    m1 << 1, 3, 5, 7, 2, 4, 6, 8;
    m3 << 1, 2, 3, 4, 5, 6, 7, 8;
    const bool u1 = unfold(t, 0) == m1, u3 = unfold(t, 2) == m3;
    const bool f = fold(m1, 0, t.dims()) == t && fold(m3, 2, t.dims()) == t && fold(unfold(t, 1), 1, t.dims()) == t;
    return {u1 && u3 && f, std::string("mode1 ") + (u1 ? "exact" : "MISMATCH") + ", mode3 " +
                               (u3 ? "exact" : "MISMATCH") + ", fold " + (f ? "inverts" : "MISMATCH")};
}

// 2. Pseudo-inverse X-update and plain X-update give the same Y-step product.
Outcome lemma_equivalence() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<Eigen::Index> dm(1, 30), dn(1, 40);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const Eigen::Index m = dm(rng), n = dn(rng);
        const Eigen::Index r = std::uniform_int_distribution<Eigen::Index>(1, std::min(m, n))(rng);
        Matrix b = gaussian(r, n, rng);
        if (t % 4 == 0 && r > 1) b.row(r - 1) = 2.0 * b.row(0);
        const Matrix c = gaussian(m, n, rng);
        const Matrix a_pinv = c * b.transpose() * pinv_oracle(b * b.transpose());
        const Matrix a_plain = c * b.transpose();
        const Matrix p_pinv = a_pinv * linalg::solve_ystep(a_pinv, c);
        const Matrix p_plain = a_plain * linalg::solve_ystep(a_plain, c);
        const Matrix p_oracle = a_plain * pinv_oracle(a_plain) * c;
        worst = std::max({worst, rel_diff(p_pinv, p_plain), rel_diff(p_plain, p_oracle)});
    }
    return {worst <= 1e-8, "200 instances, max rel diff " + fmt(worst)};
}

// 3. ||AB - C||^2 - ||A~B~ - C||^2 = ||A~B~ - AB||^2.
Outcome lemma_pythagorean() {
    std::mt19937_64 rng(2025);
    std::uniform_int_distribution<Eigen::Index> dim(2, 30);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const Eigen::Index m = dim(rng), n = dim(rng);
        const Eigen::Index r = std::uniform_int_distribution<Eigen::Index>(1, std::min(m, n))(rng);
        const Matrix a = gaussian(m, r, rng), b = gaussian(r, n, rng), c = gaussian(m, n, rng);
        const Matrix at = linalg::solve_xstep(c, b);
        const Matrix bt = linalg::solve_ystep(at, c);
        const double lhs = (a * b - c).squaredNorm() - (at * bt - c).squaredNorm();
        const double rhs = (at * bt - a * b).squaredNorm();
        worst = std::max(worst, std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300}));
    }
    return {worst <= 1e-8, "200 instances, max rel diff " + fmt(worst)};
}

// 4. Per-sweep decrease equals the factor-step term plus the Z-step term.
Outcome monotone_decrease() {
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<std::size_t> dim(5, 12);
    double worst_rel = 0.0, worst_increase = 0.0;
    std::size_t sweeps = 0;
    for (std::uint64_t inst = 0; inst < 20; ++inst) {
        const Dims dims{dim(rng), dim(rng), dim(rng)};
        const auto d = gaussian_instance(dims, 2, 0.5, 100 + inst);
        SolverConfig c;
        c.ranks = {3};
        c.seed = inst;
        std::vector<double> w{rng() % 5 + 1.0, rng() % 5 + 1.0, rng() % 5 + 1.0};
        const double sum = w[0] + w[1] + w[2];
        for (auto& x : w) x /= sum;
        c.alphas = w;
        const SolverConfig cfg = resolve(c, dims);
        SolverState s = init_state(d.obs, cfg);
        for (int k = 0; k < 15; ++k, ++sweeps) {
            const SolverState before = s;
            sweep(s, d.obs, cfg);
            double term_xy = 0.0;
            for (std::size_t n = 0; n < 3; ++n)
                term_xy += 0.5 * cfg.alphas[n] *
                           (before.factors[n].x * before.factors[n].y - s.factors[n].x * s.factors[n].y).squaredNorm();
            double term_z = 0.0;
            for (std::size_t i = 0; i < s.z.size(); ++i) term_z += 0.5 * std::pow(before.z[i] - s.z[i], 2);
            const double drop = objective(before) - objective(s);
            const double predicted = term_xy + term_z;
            worst_rel = std::max(worst_rel, std::abs(drop - predicted) / std::max(predicted, 1e-12));
            worst_increase = std::max(worst_increase, -drop);
        }
    }
    return {worst_rel <= 1e-8 && worst_increase <= 1e-10,
            "20 instances, " + std::to_string(sweeps) + " sweeps, max rel mismatch " + fmt(worst_rel) +
                ", max increase " + fmt(std::max(worst_increase, 0.0))};
}

// 5. KKT residuals on the exact rank-2 instance at tol 1e-10.
Outcome kkt_at_convergence() {
    const auto d = gaussian_instance({20, 20, 20}, 2, 0.6, 5);
    SolverConfig c;
    c.ranks = {2};
    c.tol = 1e-10;
    const double bnorm = d.obs.norm();
    double worst_rz = 0.0;
    bool rw_zero = true;
    std::optional<KKTResidual> last;
    const auto res = solve(d.obs, c, [&](const SolverState& s) {
        last = kkt_residual(s, d.obs);
        worst_rz = std::max(worst_rz, last->rz);
        rw_zero = rw_zero && last->rw == 0.0;
    });
    double worst_xy = 0.0;
    for (std::size_t n = 0; n < 3; ++n) worst_xy = std::max({worst_xy, last->rx[n], last->ry[n]});
    const bool ok = worst_xy <= 1e-6 * bnorm && rw_zero && worst_rz <= 1e-12 * bnorm;
    return {ok, std::to_string(res.report.iterations) + " iterations (" +
                    std::string(to_string(res.report.stop_reason)) + "), max(rx,ry)/|B| " + fmt(worst_xy / bnorm) +
                    ", rw " + (rw_zero ? "0" : "NONZERO") + ", max rz/|B| " + fmt(worst_rz / bnorm)};
}

// 6. Exact recovery at the true ranks.
Outcome fixed_rank_recovery() {
    int ok = 0;
    double worst = 0.0;
    for (std::uint64_t t = 0; t < 10; ++t) {
        const auto d = gaussian_instance({20, 20, 20}, 2, 0.6, 600 + t);
        SolverConfig c;
        c.ranks = {2};
        c.seed = t;
        const double e = relerr(solve(d.obs, c).estimate, d.truth);
        worst = std::max(worst, e);
        ok += e <= 1e-2;
    }
    return {ok >= 9, std::to_string(ok) + "/10 trials with relerr <= 1e-2 (worst " + fmt(worst) + ")"};
}

// 7. Rank-decreasing scheme from round(1.25 r).
Outcome rank_decreasing() {
    bool all = true;
    std::string detail;
    for (std::size_t r : {2, 3, 4}) {
        int hit = 0;
        for (std::uint64_t t = 0; t < 10; ++t) {
            const auto d = gaussian_instance({20, 20, 20}, r, 0.6, 700 + 10 * r + t);
            SolverConfig c;
            c.ranks = {static_cast<std::size_t>(std::lround(1.25 * static_cast<double>(r)))};
            c.scheme = {RankScheme::Decrease};
            c.seed = t;
            const auto res = solve(d.obs, c);
            hit += res.report.final_ranks == std::vector<std::size_t>(3, r);
        }
        all = all && hit >= 9;
        detail += (detail.empty() ? "" : ", ") + ("r=" + std::to_string(r) + ": " + std::to_string(hit) + "/10");
    }
    return {all, "final ranks equal true ranks in " + detail};
}

// 8. Rank-increasing scheme from round(0.75 r), increment 1, cap r + 3.
Outcome rank_increasing() {
    bool all = true;
    std::string detail;
    for (std::size_t r : {2, 3, 4}) {
        int hit = 0;
        for (std::uint64_t t = 0; t < 10; ++t) {
            const auto d = gaussian_instance({20, 20, 20}, r, 0.6, 800 + 10 * r + t);
            SolverConfig c;
            c.ranks = {static_cast<std::size_t>(std::lround(0.75 * static_cast<double>(r)))};
            c.scheme = {RankScheme::Increase};
            c.rank_increment = {1};
            c.rank_max = {r + 3};
            c.seed = t;
            const auto res = solve(d.obs, c);
            bool ranks_ok = true;
            for (auto fr : res.report.final_ranks) ranks_ok = ranks_ok && fr >= r;
            hit += ranks_ok && relerr(res.estimate, d.truth) <= 1e-2;
        }
        all = all && hit >= 9;
        detail += (detail.empty() ? "" : ", ") + ("r=" + std::to_string(r) + ": " + std::to_string(hit) + "/10");
    }
    return {all, "relerr <= 1e-2 and ranks >= true in " + detail};
}

struct Grids {
    PhaseGrid fix3, matcomp3, fix4, square4, onemode4;
    double seconds3 = 0.0, seconds4 = 0.0;
};

Grids run_desk_grids(std::size_t threads) {
    Grids g;
    GridOptions o;
    o.axes = desk_axes();
    o.seed = 1;
    o.threads = threads;
    o.base.dims = {20, 20, 20};
    auto t0 = Clock::now();
    auto three = run_grid(o, {MethodVariant::of(MethodKind::TmacFix), MethodVariant::of(MethodKind::MatComp)});
    g.seconds3 = seconds_since(t0);
    g.fix3 = three[0];
    g.matcomp3 = three[1];

    o.base.dims = {10, 10, 10, 10};
    MethodVariant one = MethodVariant::of(MethodKind::TmacFix);
    one.label = "tmac-1mode";
    one.alphas = {1, 0, 0, 0};
    t0 = Clock::now();
    auto four = run_grid(o, {MethodVariant::of(MethodKind::TmacFix), MethodVariant::of(MethodKind::SquareDeal), one});
    g.seconds4 = seconds_since(t0);
    g.fix4 = four[0];
    g.square4 = four[1];
    g.onemode4 = four[2];
    return g;
}

// 11. Dynamic weights.
Outcome dynamic_weights() {
    const auto w = update_weights({1, 2, 2}, {true, true, true});
    const bool exact = w == std::vector<double>{0.5, 0.25, 0.25};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(1e-6, 10.0);
    std::uniform_int_distribution<std::size_t> order(2, 6);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> fits(order(rng));
        for (auto& f : fits) f = u(rng);
        const auto a = update_weights(fits, std::vector<bool>(fits.size(), true));
        double s = 0.0;
        for (double x : a) s += x;
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return {exact && worst <= 1e-12,
            std::string("(1,2,2) -> ") + (exact ? "(0.5,0.25,0.25) exactly" : "WRONG") + ", max |sum-1| " + fmt(worst)};
}

// 12. Noise peak equals sigma times the peak of the truth.
Outcome noise_model() {
    std::mt19937_64 rng(12);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const DenseTensor truth = tmac::testing::random_tensor({5, 6, 7}, rng);
        const double sigma = 0.02 * (t + 1);
        const DenseTensor out = add_noise(truth, sigma, rng);
        double peak = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) peak = std::max(peak, std::abs(out[i] - truth[i]));
        const double want = sigma * max_abs(truth);
        worst = std::max(worst, std::abs(peak - want) / want);
    }
    return {worst <= 1e-12, "50 tensors, max rel deviation " + fmt(worst)};
}

// 13. Noisy recovery with the rank-increasing scheme.
Outcome noisy_recovery() {
    const double sigma = 0.05;
    int ok = 0;
    double worst = 0.0;
    for (std::uint64_t t = 0; t < 10; ++t) {
        const auto d = gaussian_instance({20, 20, 20}, 2, 0.5, 1300 + t, sigma);
        SolverConfig c;
        c.ranks = {1};
        c.scheme = {RankScheme::Increase};
        c.rank_increment = {1};
        c.rank_max = {5};
        c.seed = t;
        const double e = relerr(solve(d.obs, c).estimate, d.truth);
        worst = std::max(worst, e);
        ok += e <= 5 * sigma;
    }
    return {ok >= 8, std::to_string(ok) + "/10 trials with relerr <= " + fmt(5 * sigma) + " (worst " + fmt(worst) + ")"};
}

// 14. Every seeded CLI command writes byte-identical files across two runs.
Outcome reproducibility(const fs::path& workdir) {
    auto run_all = [&](const fs::path& dir) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        const std::string p = (dir / "d").string();
        std::vector<std::vector<std::string>> cmds{
            {"--seed", "7", "synth", "--prefix", p, "--dims", "12,12,12", "--rank", "2", "--sr", "0.4", "--sigma", "0.01"},
            {"--seed", "3", "complete", "--tensor", p + ".obs.tnsr", "--mask", p + ".mask", "--truth",
             p + ".truth.tnsr", "--out", (dir / "est.tnsr").string(), "--scheme", "inc", "--rank", "1", "--dr", "1",
             "--rmax", "4"},
            {"--seed", "3", "complete", "--tensor", p + ".obs.tnsr", "--mask", p + ".mask", "--out",
             (dir / "raw.tnsr").string(), "--rank", "2", "--raw-estimate"},
            {"unfold", "--tensor", (dir / "est.tnsr").string(), "--mode", "2", "--out", (dir / "est2.csv").string()},
            {"--seed", "5", "phase", "--prefix", (dir / "ph").string(), "--methods", "tmac-fix,matcomp,squaredeal",
             "--dims", "8,8,8", "--ranks", "1,2", "--srs", "0.3,0.7", "--trials", "2", "--no-timing"},
        };
        std::string failures;
        for (const auto& a : cmds) {
            std::ostringstream out, err;
            if (const int code = cli::run(a, out, err); code != 0)
                failures += a[a[0] == "--seed" ? 2 : 0] + " exited " + std::to_string(code) + "; ";
        }
        return failures;
    };
    const std::string f1 = run_all(workdir / "repro_a"), f2 = run_all(workdir / "repro_b");
    if (!f1.empty() || !f2.empty()) return {false, "command failure: " + f1 + f2};
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    std::size_t files = 0;
    std::string diff;
    for (const auto& e : fs::directory_iterator(workdir / "repro_a")) {
        ++files;
        const fs::path other = workdir / "repro_b" / e.path().filename();
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) diff += e.path().filename().string() + " ";
    }
    return {diff.empty() && files >= 10, std::to_string(files) + " files compared" +
                                             (diff.empty() ? ", all identical" : ", differ: " + diff)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::string workdir = "acceptance_work";
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--workdir", workdir, "Scratch directory");
    app.add_option("--threads", threads, "Worker pool size for the grids");
    CLI11_PARSE(app, argc, argv);
    fs::create_directories(workdir);

    int failed = 0;
    auto report = [&](int id, const char* name, double limit_s, double secs, const Outcome& o) {
        const bool ok = o.ok && secs < limit_s;
        failed += !ok;
        std::cout << (ok ? "PASS" : "FAIL") << ' ' << id << ' ' << name << ": " << o.detail << " [" << fmt(secs)
                  << " s, limit " << limit_s << " s]" << std::endl;
    };
    auto timed = [&](int id, const char* name, double limit_s, const std::function<Outcome()>& f) {
        const auto t0 = Clock::now();
        const Outcome o = f();
        report(id, name, limit_s, seconds_since(t0), o);
    };

    timed(1, "worked-example", 1e-3, worked_example);
    timed(2, "lemma-pinv-equivalence", 5, lemma_equivalence);
    timed(3, "lemma-pythagorean", 5, lemma_pythagorean);
    timed(4, "monotone-decrease", 30, monotone_decrease);
    timed(5, "kkt-residuals", 30, kkt_at_convergence);
    timed(6, "fixed-rank-recovery", 60, fixed_rank_recovery);
    timed(7, "rank-decreasing", 120, rank_decreasing);
    timed(8, "rank-increasing", 120, rank_increasing);

    // The 4-way grid is shared by criteria 9 and 10; each is charged its full time.
    const Grids g = run_desk_grids(threads);
    {
        const auto c3 = compare_regions(g.fix3, g.matcomp3);
        const auto c4 = compare_regions(g.fix4, g.square4);
        const bool ok = c3.a_success_cells >= c3.b_success_cells && c4.a_success_cells >= c4.b_success_cells;
        report(9, "phase-dominance", 1200, g.seconds3 + g.seconds4,
               {ok, "20^3 tmac-fix " + std::to_string(c3.a_success_cells) + " vs matcomp " +
                        std::to_string(c3.b_success_cells) + "; 10^4 tmac-fix " + std::to_string(c4.a_success_cells) +
                        " vs squaredeal " + std::to_string(c4.b_success_cells) + " success cells"});
    }
    {
        const auto c = compare_regions(g.fix4, g.onemode4);
        report(10, "multi-mode-benefit", 1200, g.seconds4,
               {c.a_success_cells >= c.b_success_cells, "10^4 all modes " + std::to_string(c.a_success_cells) +
                                                           " vs mode 1 only " + std::to_string(c.b_success_cells) +
                                                           " success cells"});
    }
    const std::pair<const PhaseGrid*, const char*> grids[] = {
        {&g.fix3, "3way"}, {&g.matcomp3, "3way"}, {&g.fix4, "4way"}, {&g.square4, "4way"}, {&g.onemode4, "4way"}};
    for (const auto& [grid, tag] : grids) {
        std::ofstream f(fs::path(workdir) / (grid->method + "." + tag + ".csv"));
        write_csv(f, *grid);
    }

    timed(11, "dynamic-weights", 1, dynamic_weights);
    timed(12, "noise-model", 5, noise_model);
    timed(13, "noisy-recovery", 120, noisy_recovery);
    timed(14, "reproducibility", 60, [&] { return reproducibility(workdir); });

    std::cout << (failed ? "FAILED " + std::to_string(failed) + " of 14" : std::string("ALL 14 PASSED")) << std::endl;
    return failed ? 1 : 0;
}
