#pragma once

#include <vector>

#include "tmac/solver.hpp"

namespace tmac {

/// Rank and scheme settings for a single matrix factorization. Per-mode vectors
/// in a SolverConfig are reduced to this by taking the entry of the mode that
/// gets factorized.
SolverConfig single_factorization_config(const SolverConfig& cfg, std::size_t source_mode);

/// Observations of the mode-`mode` unfolding, as a 2-way problem.
ObservationSet unfold_observations(const ObservationSet& obs, std::size_t mode);

/// Matrix completion of the last-mode unfolding by one low-rank factorization,
/// folded back to the tensor shape.
SolveResult matcomp(const ObservationSet& obs, const SolverConfig& cfg);

/// Mode permutation and split that make the reshaped matrix as square as possible.
struct SquarePlan {
    std::vector<std::size_t> perm;  // perm[k] = original mode placed at position k
    std::size_t split = 0;          // number of leading modes in the row group
    std::size_t left_dim = 0;
    std::size_t right_dim = 0;
};

/// Exhaustive search over row groups. Ties in |left - right| go to the row
/// group whose dims, sorted descending, are lexicographically smallest, then
/// to the smaller split, then to the smaller mode indices.
SquarePlan square_plan(const Dims& dims);

/// Observations of the permuted tensor reshaped to left_dim x right_dim.
ObservationSet reshape_observations(const ObservationSet& obs, const SquarePlan& plan);
/// Inverse of the reshape applied to a left_dim x right_dim result.
DenseTensor unreshape(const DenseTensor& matrix, const SquarePlan& plan, const Dims& dims);

/// Completion of the square reshape by one low-rank factorization.
SolveResult square_solve(const ObservationSet& obs, const SquarePlan& plan, const SolverConfig& cfg);

}  // namespace tmac
