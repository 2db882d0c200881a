#pragma once

#include <random>

#include "tmac/tensor.hpp"

namespace tmac::linalg {

// Relative cutoff used for numerical rank: singular values at or below
// rtol * s_max * max(rows, cols) are treated as zero.
inline constexpr double kDefaultRankRtol = 1e-12;

/// a == u * diag(s) * vt with only the numerically nonzero singular values kept.
struct CompactSVD {
    Matrix u;   // m x k, orthonormal columns
    Vector s;   // k values, positive, nonincreasing
    Matrix vt;  // k x n, orthonormal rows

    Eigen::Index rank() const noexcept { return s.size(); }
};

/// Eigenvalues of a Gram matrix, nonincreasing.
struct EigenSpectrum {
    Vector values;
};

double rank_cutoff(double s_max, Eigen::Index rows, Eigen::Index cols, double rtol);

/// Throws NumericalError on non-finite input.
CompactSVD compact_svd(const Matrix& a, double rtol = kDefaultRankRtol);

/// Eigenvalues of x^T x (equal to the squared singular values of x). Tiny
/// negative round-off is clamped to zero.
EigenSpectrum gram_eigenvalues(const Matrix& x);

/// Moore-Penrose pseudo-inverse through the compact SVD.
Matrix pinv(const Matrix& a, double rtol = kDefaultRankRtol);

/// X-update of the factorization: z_unfold * y^T.
Matrix solve_xstep(const Matrix& z_unfold, const Matrix& y);

/// Minimum-norm least-squares Y for || x Y - z_unfold ||_F, i.e.
/// (x^T x)^+ x^T z_unfold, evaluated through the compact SVD of x.
Matrix solve_ystep(const Matrix& x, const Matrix& z_unfold, double rtol = kDefaultRankRtol);

/// Returns (y.rows() + extra) x y.cols() with orthonormal rows whose row space
/// contains that of y. The extra directions are standard-normal draws from
/// `rng` orthonormalized against the existing ones. Throws ShapeError when
/// y.cols() < y.rows() + extra.
Matrix orthonormalize_rows_augmented(const Matrix& y, Eigen::Index extra, std::mt19937_64& rng);

/// Fills an m x n matrix with i.i.d. standard normals, column by column.
Matrix random_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

}  // namespace tmac::linalg
