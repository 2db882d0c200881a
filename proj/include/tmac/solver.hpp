#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "tmac/linalg.hpp"
#include "tmac/tensor.hpp"

namespace tmac {

/// Per-mode rank policy (the xi_n flag).
enum class RankScheme : int { Decrease = -1, Fixed = 0, Increase = 1 };

std::string_view to_string(RankScheme s);
RankScheme parse_rank_scheme(std::string_view s);

/// How the X block is updated. `Plain` is Z_(n) Y^T; `PseudoInverse` is the
/// exact block minimizer Z_(n) Y^T (Y Y^T)^+. Both give the same products X Y.
enum class XUpdate { Plain, PseudoInverse };

/// Solver parameters. Per-mode vectors may hold a single entry, which is then
/// broadcast to every mode by `resolve`.
struct SolverConfig {
    std::vector<double> alphas;  // empty: uniform 1/N
    bool dynamic_weights = false;
    std::vector<std::size_t> ranks{5};
    std::vector<RankScheme> scheme{RankScheme::Fixed};
    std::vector<std::size_t> rank_increment{3};
    std::vector<std::size_t> rank_max{50};
    double tol = 1e-5;
    std::size_t max_iters = 1000;
    std::uint64_t seed = 0;
    double pinv_tol = linalg::kDefaultRankRtol;
    double svd_tol = linalg::kDefaultRankRtol;
    double gap_threshold = 10.0;
    double slow_progress_threshold = 1e-2;
    XUpdate x_update = XUpdate::Plain;
};

/// Broadcasts per-mode vectors to `dims.size()` entries, clamps ranks to
/// [1, min(I_n, prod_{j != n} I_j)] and validates the rest. Throws InputError.
SolverConfig resolve(const SolverConfig& cfg, const Dims& dims);

/// Largest rank a mode-n factorization can have.
std::size_t rank_cap(const Dims& dims, std::size_t mode);

struct FactorPair {
    Matrix x;  // I_n x r_n
    Matrix y;  // r_n x prod_{j != n} I_j
    std::size_t mode = 0;

    std::size_t rank() const noexcept { return static_cast<std::size_t>(x.cols()); }
};

struct IterationRecord {
    double objective = 0.0;
    double total_fit = 0.0;
    std::vector<std::size_t> ranks;
};

struct SolverState {
    std::vector<FactorPair> factors;
    DenseTensor z;
    std::size_t iter = 0;
    // fit_n = || P_Omega(fold_n(X_n Y_n)) - B ||_F after the latest sweep.
    std::vector<double> fit;
    // The same quantity one sweep earlier; empty before the second sweep and
    // for one sweep after a rank decrease.
    std::vector<std::optional<double>> fit_prev;
    std::vector<double> alphas;
    // Modes that take part in the iteration. A mode is inactive when its
    // weight is zero and weights are static; its factors are then empty.
    std::vector<bool> active;
    double objective = 0.0;
    std::vector<IterationRecord> history;
    std::vector<bool> rank_reset;
    std::mt19937_64 rng;

    std::vector<std::size_t> ranks() const;
};

/// Random factors scaled by 1/sqrt(r_n); z holds the observed values and zeros.
/// `cfg` must already be resolved.
SolverState init_state(const ObservationSet& obs, const SolverConfig& cfg);

/// f(X, Y, Z) = sum_n alpha_n / 2 || X_n Y_n - Z_(n) ||_F^2 at the current state.
double objective(const SolverState& state);

/// Throws InputError unless `cfg` has been through `resolve` for an order-`order` tensor.
void require_resolved(const SolverConfig& cfg, std::size_t order);

/// One pass of X, Y then Z updates; refreshes fit, fit_prev, objective and history.
void sweep(SolverState& state, const ObservationSet& obs, const SolverConfig& cfg);

/// Index (1-based count of kept eigenvalues) at which to truncate, if the
/// eigenvalue-gap statistic reaches `gap_threshold`. `eigs` nonincreasing.
std::optional<std::size_t> rank_truncation(const Vector& eigs, double gap_threshold);

/// Rank-decreasing check on one factor pair; returns the truncated pair when
/// the gap test fires. The eigenvalues of X^T X are taken in the balanced
/// factorization X = U S, Y = V^T of X Y, so the test does not depend on how
/// the scale is split between X and Y.
std::optional<FactorPair> rank_decrease_check(const FactorPair& pair, const SolverConfig& cfg);

/// Rank-increasing check for mode `mode`; returns the augmented pair when the
/// fit stalls. Products X_n Y_n are unchanged by the augmentation.
std::optional<FactorPair> rank_increase_check(SolverState& state, std::size_t mode,
                                              const SolverConfig& cfg);

/// Applies each mode's rank scheme. Returns true if any rank changed.
bool adjust_ranks(SolverState& state, const ObservationSet& obs, const SolverConfig& cfg);

/// alpha_n proportional to 1 / fit_n over the active modes. Modes with a zero
/// fit share the whole weight equally.
std::vector<double> update_weights(const std::vector<double>& fits, const std::vector<bool>& active);

enum class StopReason { None, FitChange, WeightedFit, MaxIters };
std::string_view to_string(StopReason r);

struct StopDecision {
    bool stop = false;
    StopReason reason = StopReason::None;
};

StopDecision should_stop(const SolverState& state, const ObservationSet& obs, const SolverConfig& cfg);

/// sum_n alpha_n fold_n(X_n Y_n).
DenseTensor estimate(const SolverState& state);

struct KKTResidual {
    std::vector<double> rx;  // || (X_n Y_n - Z_(n)) Y_n^T ||_F
    std::vector<double> ry;  // || X_n^T (X_n Y_n - Z_(n)) ||_F
    double rz = 0.0;         // || Z - sum alpha fold(X Y) - P_Omega(W) ||_F
    double rw = 0.0;         // || P_Omega(Z) - B ||_F
};

KKTResidual kkt_residual(const SolverState& state, const ObservationSet& obs);

struct SolveReport {
    std::size_t iterations = 0;
    std::vector<std::size_t> final_ranks;
    std::vector<double> final_alphas;
    std::vector<IterationRecord> history;
    StopReason stop_reason = StopReason::None;
    double wall_time_s = 0.0;
};

struct SolveResult {
    DenseTensor estimate;
    SolveReport report;
};

using IterationObserver = std::function<void(const SolverState&)>;

/// Full iteration: sweep, stopping test, rank adjustment, weight update.
/// `observer`, when set, sees the state right after each sweep.
SolveResult solve(const ObservationSet& obs, const SolverConfig& cfg,
                  const IterationObserver& observer = {});

}  // namespace tmac
