#include "tmac/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <utility>

#include "tmac/error.hpp"

namespace tmac {

namespace {

template <typename T>
T pick(const std::vector<T>& v, std::size_t mode, const char* name) {
    if (v.size() == 1) return v.front();
    if (mode < v.size()) return v[mode];
    throw InputError(std::string(name) + " has no entry for mode " + std::to_string(mode + 1));
}

// Rebuilds an observation set after mapping each linear index through `remap`.
template <typename Remap>
ObservationSet remap_observations(const ObservationSet& obs, Dims dims, Remap&& remap) {
    const auto& idx = obs.indices();
    const auto& val = obs.observed();
    std::vector<std::pair<std::size_t, double>> entries(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) entries[k] = {remap(idx[k]), val[k]};
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::size_t> new_idx(entries.size());
    std::vector<double> new_val(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
        new_idx[k] = entries[k].first;
        new_val[k] = entries[k].second;
    }
    return ObservationSet(std::move(dims), std::move(new_idx), std::move(new_val));
}

}  // namespace

SolverConfig single_factorization_config(const SolverConfig& cfg, std::size_t source_mode) {
    SolverConfig out = cfg;
    out.alphas = {1.0, 0.0};
    out.dynamic_weights = false;
    out.ranks = {pick(cfg.ranks, source_mode, "ranks")};
    out.scheme = {pick(cfg.scheme, source_mode, "scheme"), RankScheme::Fixed};
    out.rank_increment = {pick(cfg.rank_increment, source_mode, "rank_increment")};
    out.rank_max = {pick(cfg.rank_max, source_mode, "rank_max")};
    return out;
}

ObservationSet unfold_observations(const ObservationSet& obs, std::size_t mode) {
    const Dims& dims = obs.dims();
    if (mode >= dims.size()) throw ShapeError("unfold_observations: mode out of range");
    std::size_t left = 1;
    for (std::size_t k = 0; k < mode; ++k) left *= dims[k];
    const std::size_t extent = dims[mode];
    const std::size_t total = num_elements(dims);
    // lin = a + L*(i + I*b)  ->  row i, column a + L*b
    return remap_observations(obs, Dims{extent, total / extent}, [&](std::size_t lin) {
        const std::size_t a = lin % left;
        const std::size_t i = (lin / left) % extent;
        const std::size_t b = lin / (left * extent);
        return i + extent * (a + left * b);
    });
}

SolveResult matcomp(const ObservationSet& obs, const SolverConfig& cfg) {
    const std::size_t mode = obs.dims().size() - 1;
    const ObservationSet unfolded = unfold_observations(obs, mode);
    SolveResult res = solve(unfolded, single_factorization_config(cfg, mode));
    Matrix m = Eigen::Map<const Matrix>(res.estimate.data(),
                                        static_cast<Eigen::Index>(unfolded.dims()[0]),
                                        static_cast<Eigen::Index>(unfolded.dims()[1]));
    res.estimate = fold(m, mode, obs.dims());
    return res;
}

SquarePlan square_plan(const Dims& dims) {
    validate_dims(dims);
    const std::size_t n = dims.size();
    if (n < 2) throw ShapeError("square_plan needs at least two modes");
    const std::size_t total = num_elements(dims);

    struct Candidate {
        std::size_t diff;
        std::vector<std::size_t> left_sorted;  // descending
        std::size_t split;
        std::vector<std::size_t> left_modes;
    };
    auto better = [](const Candidate& a, const Candidate& b) {
        if (a.diff != b.diff) return a.diff < b.diff;
        if (a.left_sorted != b.left_sorted)
            return std::lexicographical_compare(a.left_sorted.begin(), a.left_sorted.end(),
                                                b.left_sorted.begin(), b.left_sorted.end());
        if (a.split != b.split) return a.split < b.split;
        return a.left_modes < b.left_modes;
    };

    std::optional<Candidate> best;
    for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
        Candidate c{};
        std::size_t left = 1;
        for (std::size_t k = 0; k < n; ++k) {
            if (mask & (std::size_t{1} << k)) {
                c.left_modes.push_back(k);
                c.left_sorted.push_back(dims[k]);
                left *= dims[k];
            }
        }
        const std::size_t right = total / left;
        c.diff = left > right ? left - right : right - left;
        c.split = c.left_modes.size();
        std::sort(c.left_sorted.begin(), c.left_sorted.end(), std::greater<>());
        if (!best || better(c, *best)) best = std::move(c);
    }

    SquarePlan plan;
    plan.perm = best->left_modes;
    for (std::size_t k = 0; k < n; ++k)
        if (std::find(plan.perm.begin(), plan.perm.end(), k) == plan.perm.end())
            plan.perm.push_back(k);
    plan.split = best->split;
    plan.left_dim = 1;
    for (std::size_t k = 0; k < plan.split; ++k) plan.left_dim *= dims[plan.perm[k]];
    plan.right_dim = total / plan.left_dim;
    return plan;
}

namespace {

void check_plan(const SquarePlan& plan, const Dims& dims) {
    const std::size_t n = dims.size();
    if (plan.perm.size() != n) throw ShapeError("square plan has the wrong order");
    std::vector<bool> seen(n, false);
    for (auto p : plan.perm) {
        if (p >= n || seen[p]) throw ShapeError("square plan permutation is invalid");
        seen[p] = true;
    }
    std::size_t left = 1;
    for (std::size_t k = 0; k < plan.split; ++k) left *= dims[plan.perm[k]];
    if (plan.split > n || left != plan.left_dim || left * plan.right_dim != num_elements(dims))
        throw ShapeError("square plan does not match dims");
}

}  // namespace

ObservationSet reshape_observations(const ObservationSet& obs, const SquarePlan& plan) {
    const Dims& dims = obs.dims();
    check_plan(plan, dims);
    const std::size_t n = dims.size();
    Dims permuted(n);
    for (std::size_t k = 0; k < n; ++k) permuted[k] = dims[plan.perm[k]];
    return remap_observations(obs, Dims{plan.left_dim, plan.right_dim}, [&](std::size_t lin) {
        const auto idx = multi_index(dims, lin);
        std::size_t out = 0;
        for (std::size_t k = n; k-- > 0;) out = out * permuted[k] + idx[plan.perm[k]];
        return out;
    });
}

DenseTensor unreshape(const DenseTensor& matrix, const SquarePlan& plan, const Dims& dims) {
    check_plan(plan, dims);
    if (matrix.size() != num_elements(dims)) throw ShapeError("unreshape: size mismatch");
    Dims permuted(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) permuted[k] = dims[plan.perm[k]];
    const DenseTensor p(std::move(permuted),
                        std::vector<double>(matrix.values().begin(), matrix.values().end()));
    return inverse_permute(p, plan.perm);
}

SolveResult square_solve(const ObservationSet& obs, const SquarePlan& plan, const SolverConfig& cfg) {
    const ObservationSet reshaped = reshape_observations(obs, plan);
    SolveResult res = solve(reshaped, single_factorization_config(cfg, 0));
    res.estimate = unreshape(res.estimate, plan, obs.dims());
    return res;
}

}  // namespace tmac
