#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace tmac {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Dims = std::vector<std::size_t>;

inline constexpr std::size_t kMaxOrder = 8;

// Product of all entries of `dims`.
std::size_t num_elements(const Dims& dims);

// Throws ShapeError unless 1 <= dims.size() <= kMaxOrder and every dim >= 1.
void validate_dims(const Dims& dims);

/// Dense N-way array of doubles in generalized column-major order: the
/// first index varies fastest, so entry (i_0, ..., i_{N-1}) lives at
/// i_0 + I_0 * (i_1 + I_1 * (i_2 + ...)).
///
/// Mode numbers and multi-indices are 0-based throughout the C++ API; the
/// file formats and the CLI are 1-based.
class DenseTensor {
public:
    /// Zero tensor of the given shape.
    explicit DenseTensor(Dims dims);
    DenseTensor(Dims dims, std::vector<double> values);

    std::size_t order() const noexcept { return dims_.size(); }
    const Dims& dims() const noexcept { return dims_; }
    std::size_t dim(std::size_t mode) const { return dims_.at(mode); }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    const double* data() const noexcept { return values_.data(); }
    double* data() noexcept { return values_.data(); }

    double operator[](std::size_t linear) const noexcept { return values_[linear]; }
    double& operator[](std::size_t linear) noexcept { return values_[linear]; }

    double at(std::span<const std::size_t> index) const;

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    Dims dims_;
    std::vector<double> values_;
};

// Linear offset of a 0-based multi-index.
std::size_t linear_index(const Dims& dims, std::span<const std::size_t> index);
// Inverse of linear_index.
std::vector<std::size_t> multi_index(const Dims& dims, std::size_t linear);

/// The observed index set together with the observed values.
///
/// `indices` are 0-based linear offsets, strictly increasing; `observed[k]`
/// is the value at `indices[k]`.
class ObservationSet {
public:
    ObservationSet(Dims dims, std::vector<std::size_t> indices, std::vector<double> observed);

    /// Observe `t` at `indices`.
    static ObservationSet sample(const DenseTensor& t, std::vector<std::size_t> indices);
    /// Every entry of `t` observed.
    static ObservationSet full(const DenseTensor& t);

    const Dims& dims() const noexcept { return dims_; }
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    const std::vector<double>& observed() const noexcept { return observed_; }
    std::size_t count() const noexcept { return indices_.size(); }
    bool empty() const noexcept { return indices_.empty(); }

    /// Observed values as a dense tensor with zeros off the index set.
    DenseTensor to_dense() const;

    /// Frobenius norm of the observed values.
    double norm() const;

private:
    Dims dims_;
    std::vector<std::size_t> indices_;
    std::vector<double> observed_;
};

/// Mode-`mode` matricization: I_mode rows, prod_{j != mode} I_j columns,
/// columns are the mode fibers with smaller remaining indices varying fastest.
Matrix unfold(const DenseTensor& t, std::size_t mode);
void unfold_into(const DenseTensor& t, std::size_t mode, Matrix& out);

/// Inverse of unfold.
DenseTensor fold(const Matrix& m, std::size_t mode, const Dims& dims);

/// acc += scale * fold(m, mode, acc.dims()).
void fold_accumulate(const Matrix& m, std::size_t mode, double scale, DenseTensor& acc);

/// fold(a * unfold(t, mode), mode, dims with mode replaced by a.rows()).
DenseTensor mode_product(const DenseTensor& t, const Matrix& a, std::size_t mode);

/// Tensor with modes relabelled: result.dim(k) == t.dim(perm[k]).
DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm);
DenseTensor inverse_permute(const DenseTensor& t, std::span<const std::size_t> perm);

double inner(const DenseTensor& a, const DenseTensor& b);
double fro_norm(const DenseTensor& t);
double max_abs(const DenseTensor& t);

/// Keeps entries in the observed set, zeros elsewhere.
DenseTensor project(const ObservationSet& obs, const DenseTensor& t);
/// `t` off the observed set, the observed values on it.
DenseTensor fill_unobserved(const ObservationSet& obs, const DenseTensor& t);

/// ||estimate - truth||_F / ||truth||_F.
double relerr(const DenseTensor& estimate, const DenseTensor& truth);

}  // namespace tmac
