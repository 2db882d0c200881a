#include "tmac/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tmac/error.hpp"

namespace tmac::linalg {

namespace {

void require_finite(const Matrix& a, const char* what) {
    if (!a.allFinite()) throw NumericalError(std::string(what) + ": non-finite input");
}

}  // namespace

double rank_cutoff(double s_max, Eigen::Index rows, Eigen::Index cols, double rtol) {
    return rtol * s_max * static_cast<double>(std::max<Eigen::Index>({rows, cols, 1}));
}

CompactSVD compact_svd(const Matrix& a, double rtol) {
    require_finite(a, "compact_svd");
    CompactSVD out;
    if (a.size() == 0) {
        out.u.resize(a.rows(), 0);
        out.vt.resize(0, a.cols());
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    if (!s.allFinite()) throw NumericalError("compact_svd: iteration produced non-finite values");
    const double cut = rank_cutoff(s.size() ? s(0) : 0.0, a.rows(), a.cols(), rtol);
    Eigen::Index k = 0;
    while (k < s.size() && s(k) > cut) ++k;
    out.u = svd.matrixU().leftCols(k);
    out.s = s.head(k);
    out.vt = svd.matrixV().leftCols(k).transpose();
    return out;
}

EigenSpectrum gram_eigenvalues(const Matrix& x) {
    require_finite(x, "gram_eigenvalues");
    EigenSpectrum out;
    if (x.cols() == 0) return out;
    const Matrix gram = x.transpose() * x;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success)
        throw NumericalError("gram_eigenvalues: eigen solver did not converge");
    // Eigen returns them ascending.
    out.values = eig.eigenvalues().reverse();
    for (auto& v : out.values) v = std::max(v, 0.0);
    return out;
}

Matrix pinv(const Matrix& a, double rtol) {
    const CompactSVD svd = compact_svd(a, rtol);
    return svd.vt.transpose() * svd.s.cwiseInverse().asDiagonal() * svd.u.transpose();
}

Matrix solve_xstep(const Matrix& z_unfold, const Matrix& y) {
    if (z_unfold.cols() != y.cols())
        throw ShapeError("solve_xstep: z has " + std::to_string(z_unfold.cols()) +
                         " columns, y has " + std::to_string(y.cols()));
    return z_unfold * y.transpose();
}

Matrix solve_ystep(const Matrix& x, const Matrix& z_unfold, double rtol) {
    if (x.rows() != z_unfold.rows())
        throw ShapeError("solve_ystep: x has " + std::to_string(x.rows()) + " rows, z has " +
                         std::to_string(z_unfold.rows()));
    const CompactSVD svd = compact_svd(x, rtol);
    if (svd.rank() == 0) return Matrix::Zero(x.cols(), z_unfold.cols());
    const Matrix scaled = svd.s.cwiseInverse().asDiagonal() * (svd.u.transpose() * z_unfold);
    return svd.vt.transpose() * scaled;
}

Matrix random_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

Matrix orthonormalize_rows_augmented(const Matrix& y, Eigen::Index extra, std::mt19937_64& rng) {
    if (y.rows() < 1) throw ShapeError("orthonormalize_rows_augmented: y has no rows");
    if (extra < 0) throw ShapeError("orthonormalize_rows_augmented: negative extra count");
    const Eigen::Index k = y.rows() + extra;
    if (y.cols() < k)
        throw ShapeError("orthonormalize_rows_augmented: cannot fit " + std::to_string(k) +
                         " orthonormal rows in " + std::to_string(y.cols()) + " columns");
    require_finite(y, "orthonormalize_rows_augmented");

    Matrix basis(y.cols(), k);
    basis.leftCols(y.rows()) = y.transpose();
    if (extra > 0) basis.rightCols(extra) = random_normal(y.cols(), extra, rng);

    // With A = QR and R upper triangular, the leading columns of Q span the
    // leading columns of A, so the row space of y is kept.
    Eigen::HouseholderQR<Matrix> qr(basis);
    const Matrix q = qr.householderQ() * Matrix::Identity(y.cols(), k);
    return q.transpose();
}

}  // namespace tmac::linalg
