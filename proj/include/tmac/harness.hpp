#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tmac/solver.hpp"
#include "tmac/synth.hpp"

namespace tmac {

enum class MethodKind { TmacFix, TmacInc, TmacDec, MatComp, SquareDeal };

std::string_view to_string(MethodKind k);
MethodKind parse_method_kind(std::string_view s);

/// One solver variant in a phase-transition run.
struct MethodVariant {
    std::string label;           // identifier written to the CSV
    MethodKind kind = MethodKind::TmacFix;
    std::vector<double> alphas;  // TMac kinds only; empty means uniform

    static MethodVariant of(MethodKind kind);
};

/// Starting ranks and schemes for a true rank r:
///   fix  r_n = r
///   inc  r_n = round(0.75 r), increasing
///   dec  r_n = round(1.25 r), decreasing
/// matcomp uses r on the last-mode unfolding; squaredeal uses the rank bound
/// min(r^j, r^(N-j)) of the reshaped matrix.
SolverConfig variant_config(const MethodVariant& v, std::size_t true_rank, const Dims& dims,
                            const SolverConfig& base);

/// Runs one variant on one data set; returns the estimate.
SolveResult run_variant(const MethodVariant& v, std::size_t true_rank, const ObservationSet& obs,
                        const SolverConfig& base);

struct GridAxes {
    std::vector<std::size_t> ranks;
    std::vector<double> srs;
    std::size_t trials = 10;
};

/// Ranks 1..8, SR 0.1..0.9 step 0.1, 10 trials.
GridAxes desk_axes();

struct CellStats {
    std::size_t trials = 0;
    std::size_t successes = 0;
    std::size_t failures = 0;  // trials where the solver threw
    double mean_relerr = 0.0;  // over trials that produced an estimate
    double mean_time_s = 0.0;

    double success_rate() const noexcept {
        return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
    }
};

struct PhaseGrid {
    std::string method;
    std::vector<std::size_t> ranks;
    std::vector<double> srs;
    std::size_t trials = 0;
    std::vector<CellStats> cells;  // ranks.size() x srs.size(), row-major by rank
    std::vector<std::string> diagnostics;

    const CellStats& cell(std::size_t rank_index, std::size_t sr_index) const {
        return cells.at(rank_index * srs.size() + sr_index);
    }
    /// Cells whose success rate is at least `min_rate`.
    std::size_t success_cells(double min_rate = 0.9) const;
};

struct GridOptions {
    SynthSpec base;          // dims, family, sigma; rank, sr and seed are set per trial
    GridAxes axes;
    SolverConfig solver;     // tol, max_iters, ... shared by all variants
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    double success_relerr = 1e-2;
};

/// Seed of trial `trial` in cell (rank_index, sr_index).
std::uint64_t trial_seed(std::uint64_t base, std::size_t rank_index, std::size_t sr_index,
                         std::size_t trial);

/// Every variant sees the same (truth, Omega) in a given trial. Cells run on a
/// pool of `threads` workers; results do not depend on the thread count.
std::vector<PhaseGrid> run_grid(const GridOptions& opts, const std::vector<MethodVariant>& variants);
PhaseGrid run_grid(const GridOptions& opts, const MethodVariant& variant);

struct RegionComparison {
    std::vector<double> rate_diff;  // a - b per cell
    std::size_t a_ge_b = 0;
    std::size_t a_gt_b = 0;
    std::size_t b_gt_a = 0;
    std::size_t a_success_cells = 0;
    std::size_t b_success_cells = 0;
    std::string dominance;  // "tie", "a", "b" or "mixed"
};

/// Throws ShapeError unless the axes agree.
RegionComparison compare_regions(const PhaseGrid& a, const PhaseGrid& b, double min_rate = 0.9);

/// `method,rank,sr,trials,successes,success_rate,mean_relerr,mean_time_s`;
/// `with_timing = false` writes 0 in the timing column.
void write_csv(std::ostream& out, const PhaseGrid& g, bool with_timing = true);
/// ASCII PGM (P2): ranks top to bottom, SR left to right, 255 = all trials succeeded.
void write_pgm(std::ostream& out, const PhaseGrid& g);

}  // namespace tmac
