#include "tmac/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tmac/error.hpp"

namespace tmac {

namespace {

// Quotients whose denominator falls below this are treated as infinite.
constexpr double kGapDenominatorFloor = 1e-300;

template <typename T>
std::vector<T> broadcast(const std::vector<T>& v, std::size_t n, const char* name) {
    if (v.size() == n) return v;
    if (v.size() == 1) return std::vector<T>(n, v.front());
    throw InputError(std::string(name) + ": expected 1 or " + std::to_string(n) + " entries, got " +
                     std::to_string(v.size()));
}

// acc += scale * t, entrywise.
void add_scaled(DenseTensor& acc, const DenseTensor& t, double scale) {
    double* a = acc.data();
    const double* s = t.data();
    for (std::size_t k = 0; k < acc.size(); ++k) a[k] += scale * s[k];
}

// fold_n(X_n Y_n) for every active mode.
std::vector<std::optional<DenseTensor>> folded_products(const SolverState& state) {
    const Dims& dims = state.z.dims();
    std::vector<std::optional<DenseTensor>> out(dims.size());
    for (std::size_t n = 0; n < dims.size(); ++n) {
        if (!state.active[n]) continue;
        const Matrix p = state.factors[n].x * state.factors[n].y;
        out[n].emplace(fold(p, n, dims));
    }
    return out;
}

DenseTensor weighted_sum(const std::vector<std::optional<DenseTensor>>& prods,
                         const std::vector<double>& alphas, const Dims& dims) {
    DenseTensor s(dims);
    for (std::size_t n = 0; n < prods.size(); ++n)
        if (prods[n]) add_scaled(s, *prods[n], alphas[n]);
    return s;
}

double observed_misfit(const DenseTensor& t, const ObservationSet& obs) {
    const auto& idx = obs.indices();
    const auto& val = obs.observed();
    double s = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double d = t[idx[k]] - val[k];
        s += d * d;
    }
    return std::sqrt(s);
}

double squared_distance(const DenseTensor& a, const DenseTensor& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

}  // namespace

std::string_view to_string(RankScheme s) {
    switch (s) {
        case RankScheme::Decrease: return "dec";
        case RankScheme::Fixed: return "fix";
        case RankScheme::Increase: return "inc";
    }
    return "fix";
}

RankScheme parse_rank_scheme(std::string_view s) {
    if (s == "dec" || s == "decrease" || s == "-1") return RankScheme::Decrease;
    if (s == "fix" || s == "fixed" || s == "0") return RankScheme::Fixed;
    if (s == "inc" || s == "increase" || s == "1" || s == "+1") return RankScheme::Increase;
    throw InputError("unknown rank scheme '" + std::string(s) + "' (expected dec, fix or inc)");
}

std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::None: return "none";
        case StopReason::FitChange: return "relative_fit_change";
        case StopReason::WeightedFit: return "weighted_fit";
        case StopReason::MaxIters: return "max_iters";
    }
    return "none";
}

std::size_t rank_cap(const Dims& dims, std::size_t mode) {
    const std::size_t total = num_elements(dims);
    return std::min(dims.at(mode), total / dims.at(mode));
}

SolverConfig resolve(const SolverConfig& cfg, const Dims& dims) {
    validate_dims(dims);
    const std::size_t n = dims.size();
    SolverConfig out = cfg;

    if (out.alphas.empty()) out.alphas.assign(n, 1.0 / static_cast<double>(n));
    out.alphas = broadcast(out.alphas, n, "alphas");
    if (cfg.alphas.size() == 1 && n > 1)
        throw InputError("alphas: a single weight cannot sum to 1 over several modes");
    double sum = 0.0;
    for (double a : out.alphas) {
        if (!std::isfinite(a) || a < 0.0) throw InputError("alphas must be finite and nonnegative");
        sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw InputError("alphas must sum to 1, got " + std::to_string(sum));
    for (double& a : out.alphas) a /= sum;

    out.ranks = broadcast(out.ranks, n, "ranks");
    out.scheme = broadcast(out.scheme, n, "scheme");
    out.rank_increment = broadcast(out.rank_increment, n, "rank_increment");
    out.rank_max = broadcast(out.rank_max, n, "rank_max");
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t cap = rank_cap(dims, k);
        if (out.ranks[k] < 1) throw InputError("ranks must be >= 1");
        if (out.rank_max[k] < 1) throw InputError("rank_max must be >= 1");
        out.ranks[k] = std::min(out.ranks[k], cap);
        out.rank_max[k] = std::min(out.rank_max[k], cap);
        if (out.ranks[k] > out.rank_max[k])
            throw InputError("mode " + std::to_string(k + 1) + ": rank " +
                             std::to_string(out.ranks[k]) + " exceeds rank_max " +
                             std::to_string(out.rank_max[k]));
        if (out.scheme[k] == RankScheme::Increase && out.rank_increment[k] < 1)
            throw InputError("rank_increment must be >= 1 for the increasing scheme");
    }
    if (!std::isfinite(out.tol) || out.tol < 0.0) throw InputError("tol must be >= 0");
    if (out.max_iters < 1) throw InputError("max_iters must be >= 1");
    if (!(out.pinv_tol >= 0.0) || !(out.svd_tol >= 0.0))
        throw InputError("pinv_tol and svd_tol must be >= 0");
    if (!(out.gap_threshold > 0.0)) throw InputError("gap_threshold must be > 0");
    if (!(out.slow_progress_threshold >= 0.0))
        throw InputError("slow_progress_threshold must be >= 0");
    return out;
}

void require_resolved(const SolverConfig& cfg, std::size_t order) {
    if (cfg.alphas.size() != order || cfg.ranks.size() != order || cfg.scheme.size() != order ||
        cfg.rank_increment.size() != order || cfg.rank_max.size() != order)
        throw InputError("solver config is not resolved for an order-" + std::to_string(order) +
                         " tensor");
}

std::vector<std::size_t> SolverState::ranks() const {
    std::vector<std::size_t> r(factors.size());
    for (std::size_t n = 0; n < factors.size(); ++n) r[n] = factors[n].rank();
    return r;
}

SolverState init_state(const ObservationSet& obs, const SolverConfig& cfg) {
    const Dims& dims = obs.dims();
    const std::size_t order = dims.size();
    require_resolved(cfg, order);
    if (obs.empty()) throw InputError("no observed entries");

    SolverState state{.factors = {},
                      .z = obs.to_dense(),
                      .iter = 0,
                      .fit = std::vector<double>(order, 0.0),
                      .fit_prev = std::vector<std::optional<double>>(order),
                      .alphas = cfg.alphas,
                      .active = std::vector<bool>(order),
                      .objective = 0.0,
                      .history = {},
                      .rank_reset = std::vector<bool>(order, false),
                      .rng = std::mt19937_64(cfg.seed)};

    const std::size_t total = num_elements(dims);
    state.factors.resize(order);
    for (std::size_t n = 0; n < order; ++n) {
        state.factors[n].mode = n;
        state.active[n] = cfg.dynamic_weights || cfg.alphas[n] > 0.0;
        if (!state.active[n]) continue;
        const auto rows = static_cast<Eigen::Index>(dims[n]);
        const auto cols = static_cast<Eigen::Index>(total / dims[n]);
        const auto r = static_cast<Eigen::Index>(cfg.ranks[n]);
        if (cfg.ranks[n] < 1 || cfg.ranks[n] > rank_cap(dims, n))
            throw InputError("mode " + std::to_string(n + 1) + ": rank out of range");
        const double scale = 1.0 / std::sqrt(static_cast<double>(r));
        state.factors[n].x = linalg::random_normal(rows, r, state.rng) * scale;
        state.factors[n].y = linalg::random_normal(r, cols, state.rng) * scale;
    }
    state.objective = objective(state);
    return state;
}

double objective(const SolverState& state) {
    const Dims& dims = state.z.dims();
    double f = 0.0;
    Matrix zn;
    for (std::size_t n = 0; n < dims.size(); ++n) {
        if (!state.active[n]) continue;
        unfold_into(state.z, n, zn);
        f += 0.5 * state.alphas[n] * (state.factors[n].x * state.factors[n].y - zn).squaredNorm();
    }
    return f;
}

void sweep(SolverState& state, const ObservationSet& obs, const SolverConfig& cfg) {
    const Dims& dims = state.z.dims();
    const std::size_t order = dims.size();
    if (obs.dims() != dims) throw ShapeError("sweep: observation dims do not match state");

    std::vector<std::optional<DenseTensor>> prods(order);
    Matrix zn;
    for (std::size_t n = 0; n < order; ++n) {
        if (!state.active[n]) continue;
        FactorPair& f = state.factors[n];
        unfold_into(state.z, n, zn);
        if (cfg.x_update == XUpdate::PseudoInverse)
            f.x = linalg::solve_xstep(zn, f.y) * linalg::pinv(f.y * f.y.transpose(), cfg.pinv_tol);
        else
            f.x = linalg::solve_xstep(zn, f.y);
        f.y = linalg::solve_ystep(f.x, zn, cfg.pinv_tol);
        const Matrix p = f.x * f.y;
        prods[n].emplace(fold(p, n, dims));
    }

    // Z <- P_{Omega^c}(sum_n alpha_n fold_n(X_n Y_n)) + B
    DenseTensor z = weighted_sum(prods, state.alphas, dims);
    {
        const auto& idx = obs.indices();
        const auto& val = obs.observed();
        for (std::size_t k = 0; k < idx.size(); ++k) z[idx[k]] = val[k];
    }
    if (!std::all_of(z.values().begin(), z.values().end(), [](double v) { return std::isfinite(v); }))
        throw NumericalError("sweep produced non-finite values");
    state.z = std::move(z);

    double total_fit = 0.0;
    double f = 0.0;
    for (std::size_t n = 0; n < order; ++n) {
        const std::optional<double> previous =
            (state.iter > 0 && !state.rank_reset[n]) ? std::optional<double>(state.fit[n])
                                                     : std::nullopt;
        state.rank_reset[n] = false;
        if (!prods[n]) {
            state.fit[n] = 0.0;
            state.fit_prev[n].reset();
            continue;
        }
        state.fit_prev[n] = previous;
        state.fit[n] = observed_misfit(*prods[n], obs);
        total_fit += state.fit[n];
        f += 0.5 * state.alphas[n] * squared_distance(*prods[n], state.z);
    }
    state.objective = f;
    ++state.iter;
    state.history.push_back({f, total_fit, state.ranks()});
}

std::optional<std::size_t> rank_truncation(const Vector& eigs, double gap_threshold) {
    const Eigen::Index r = eigs.size();
    if (r < 2) return std::nullopt;
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<double> q(static_cast<std::size_t>(r - 1));
    for (Eigen::Index i = 0; i + 1 < r; ++i)
        q[i] = eigs(i + 1) < kGapDenominatorFloor ? inf : eigs(i) / eigs(i + 1);

    // max_element returns the first maximum, i.e. the smaller rank on ties.
    const auto best = std::max_element(q.begin(), q.end());
    const auto keep = static_cast<std::size_t>(best - q.begin()) + 1;

    if (r == 2) {
        // A single quotient leaves the gap statistic undefined; require the
        // quotient itself to clear the squared threshold.
        if (*best >= gap_threshold * gap_threshold) return keep;
        return std::nullopt;
    }
    if (std::isinf(*best)) return keep;
    double rest = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (i + 1 != keep) rest += q[i];
    if (rest <= 0.0) return keep;
    const double gap = static_cast<double>(r - 1) * (*best) / rest;
    if (gap >= gap_threshold) return keep;
    return std::nullopt;
}

std::optional<FactorPair> rank_decrease_check(const FactorPair& pair, const SolverConfig& cfg) {
    if (pair.rank() < 2) return std::nullopt;
    const Matrix prod = pair.x * pair.y;
    if (!prod.allFinite()) throw NumericalError("rank_decrease_check: non-finite factors");
    // X_n^T X_n in the balanced gauge X = U S, Y = V^T: its eigenvalues are the
    // squared singular values of X Y, which both X-updates agree on.
    Eigen::JacobiSVD<Matrix> svd(prod, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto r = static_cast<Eigen::Index>(pair.rank());
    const Vector eigs = svd.singularValues().head(std::min(r, svd.singularValues().size())).array().square();
    const auto keep = rank_truncation(eigs, cfg.gap_threshold);
    if (!keep || *keep >= pair.rank()) return std::nullopt;

    const auto k = static_cast<Eigen::Index>(*keep);
    FactorPair out;
    out.mode = pair.mode;
    out.x = svd.matrixU().leftCols(k) * svd.singularValues().head(k).asDiagonal();
    out.y = svd.matrixV().leftCols(k).transpose();
    return out;
}

std::optional<FactorPair> rank_increase_check(SolverState& state, std::size_t mode,
                                              const SolverConfig& cfg) {
    const auto& prev = state.fit_prev.at(mode);
    if (!prev || *prev == 0.0) return std::nullopt;
    const FactorPair& pair = state.factors[mode];
    const std::size_t r = pair.rank();
    const std::size_t r_max = std::min(cfg.rank_max[mode], rank_cap(state.z.dims(), mode));
    if (r >= r_max) return std::nullopt;
    if (std::abs(1.0 - state.fit[mode] / *prev) > cfg.slow_progress_threshold) return std::nullopt;

    const std::size_t r_new = std::min(r + cfg.rank_increment[mode], r_max);
    FactorPair out;
    out.mode = mode;
    out.y = linalg::orthonormalize_rows_augmented(pair.y, static_cast<Eigen::Index>(r_new - r),
                                                  state.rng);
    // X is recomputed from Z and Y at the next sweep, so its value here only
    // matters for the current product; X Y Y_new^T keeps that product intact.
    out.x = pair.x * (pair.y * out.y.transpose());
    return out;
}

bool adjust_ranks(SolverState& state, const ObservationSet& obs, const SolverConfig& cfg) {
    const std::size_t order = state.z.dims().size();
    require_resolved(cfg, order);
    if (obs.dims() != state.z.dims()) throw ShapeError("adjust_ranks: dims mismatch");
    bool changed = false;
    for (std::size_t n = 0; n < order; ++n) {
        if (!state.active[n]) continue;
        switch (cfg.scheme[n]) {
            case RankScheme::Decrease:
                if (auto pair = rank_decrease_check(state.factors[n], cfg)) {
                    state.factors[n] = std::move(*pair);
                    state.fit_prev[n].reset();
                    state.rank_reset[n] = true;
                    changed = true;
                }
                break;
            case RankScheme::Increase:
                if (auto pair = rank_increase_check(state, n, cfg)) {
                    state.factors[n] = std::move(*pair);
                    changed = true;
                }
                break;
            case RankScheme::Fixed:
                break;
        }
    }
    return changed;
}

std::vector<double> update_weights(const std::vector<double>& fits, const std::vector<bool>& active) {
    if (fits.size() != active.size()) throw ShapeError("update_weights: size mismatch");
    std::vector<double> alphas(fits.size(), 0.0);
    std::size_t zeros = 0, live = 0;
    for (std::size_t n = 0; n < fits.size(); ++n) {
        if (!active[n]) continue;
        if (fits[n] < 0.0 || !std::isfinite(fits[n]))
            throw InputError("update_weights: fits must be finite and nonnegative");
        ++live;
        if (fits[n] == 0.0) ++zeros;
    }
    if (live == 0) throw InputError("update_weights: no active modes");
    if (zeros > 0) {
        for (std::size_t n = 0; n < fits.size(); ++n)
            if (active[n] && fits[n] == 0.0) alphas[n] = 1.0 / static_cast<double>(zeros);
        return alphas;
    }
    double sum = 0.0;
    for (std::size_t n = 0; n < fits.size(); ++n)
        if (active[n]) sum += 1.0 / fits[n];
    for (std::size_t n = 0; n < fits.size(); ++n)
        if (active[n]) alphas[n] = (1.0 / fits[n]) / sum;
    return alphas;
}

StopDecision should_stop(const SolverState& state, const ObservationSet& obs, const SolverConfig& cfg) {
    const auto& h = state.history;
    if (h.size() >= 2) {
        const double before = h[h.size() - 2].total_fit;
        const double after = h.back().total_fit;
        if (std::abs(before - after) / (1.0 + before) <= cfg.tol)
            return {true, StopReason::FitChange};
    }
    if (!h.empty()) {
        double weighted = 0.0;
        for (std::size_t n = 0; n < state.fit.size(); ++n)
            if (state.active[n]) weighted += state.alphas[n] * state.fit[n];
        const double bnorm = obs.norm();
        const bool small = bnorm > 0.0 ? weighted / bnorm <= cfg.tol : weighted == 0.0;
        if (small) return {true, StopReason::WeightedFit};
    }
    if (state.iter >= cfg.max_iters) return {true, StopReason::MaxIters};
    return {};
}

DenseTensor estimate(const SolverState& state) {
    return weighted_sum(folded_products(state), state.alphas, state.z.dims());
}

KKTResidual kkt_residual(const SolverState& state, const ObservationSet& obs) {
    const Dims& dims = state.z.dims();
    if (obs.dims() != dims) throw ShapeError("kkt_residual: dims mismatch");
    KKTResidual out;
    out.rx.assign(dims.size(), 0.0);
    out.ry.assign(dims.size(), 0.0);
    Matrix zn;
    for (std::size_t n = 0; n < dims.size(); ++n) {
        if (!state.active[n]) continue;
        const FactorPair& f = state.factors[n];
        unfold_into(state.z, n, zn);
        const Matrix resid = f.x * f.y - zn;
        out.rx[n] = (resid * f.y.transpose()).norm();
        out.ry[n] = (f.x.transpose() * resid).norm();
    }

    const DenseTensor s = estimate(state);
    const auto& idx = obs.indices();
    const auto& val = obs.observed();
    // W = B - P_Omega(S) vanishes off Omega, so the z-residual there is Z - S.
    double rz = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double d = state.z[i] - s[i];
        if (k < idx.size() && idx[k] == i) {
            const double w = val[k] - s[i];
            d -= w;
            ++k;
        }
        rz += d * d;
    }
    out.rz = std::sqrt(rz);

    double rw = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const double d = state.z[idx[j]] - val[j];
        rw += d * d;
    }
    out.rw = std::sqrt(rw);
    return out;
}

SolveResult solve(const ObservationSet& obs, const SolverConfig& cfg, const IterationObserver& observer) {
    const auto start = std::chrono::steady_clock::now();
    const SolverConfig c = resolve(cfg, obs.dims());
    SolverState state = init_state(obs, c);

    StopDecision decision;
    while (true) {
        sweep(state, obs, c);
        if (observer) observer(state);
        decision = should_stop(state, obs, c);
        if (decision.stop) break;
        adjust_ranks(state, obs, c);
        if (c.dynamic_weights) state.alphas = update_weights(state.fit, state.active);
    }

    SolveResult result{estimate(state), {}};
    auto& rep = result.report;
    rep.iterations = state.iter;
    rep.final_ranks = state.ranks();
    rep.final_alphas = state.alphas;
    rep.history = std::move(state.history);
    rep.stop_reason = decision.reason;
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace tmac
