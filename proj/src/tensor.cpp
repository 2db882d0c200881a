#include "tmac/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tmac/error.hpp"

namespace tmac {

namespace {

std::string dims_str(const Dims& dims) {
    std::string s = "(";
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (k) s += ",";
        s += std::to_string(dims[k]);
    }
    return s + ")";
}

void require_same_dims(const Dims& a, const Dims& b, const char* what) {
    if (a != b)
        throw ShapeError(std::string(what) + ": dims " + dims_str(a) + " vs " + dims_str(b));
}

// Sizes of the index blocks before and after `mode`.
struct ModeSplit {
    std::size_t left;
    std::size_t extent;
    std::size_t right;
};

ModeSplit split_at(const Dims& dims, std::size_t mode) {
    if (mode >= dims.size())
        throw ShapeError("mode " + std::to_string(mode) + " out of range for order " +
                         std::to_string(dims.size()));
    ModeSplit s{1, dims[mode], 1};
    for (std::size_t k = 0; k < mode; ++k) s.left *= dims[k];
    for (std::size_t k = mode + 1; k < dims.size(); ++k) s.right *= dims[k];
    return s;
}

}  // namespace

std::size_t num_elements(const Dims& dims) {
    std::size_t n = 1;
    for (auto d : dims) {
        if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d)
            throw ShapeError("tensor size overflows: " + dims_str(dims));
        n *= d;
    }
    return n;
}

void validate_dims(const Dims& dims) {
    if (dims.empty() || dims.size() > kMaxOrder)
        throw ShapeError("tensor order must be in [1, 8], got " + std::to_string(dims.size()));
    for (auto d : dims)
        if (d == 0) throw ShapeError("zero dimension in " + dims_str(dims));
    (void)num_elements(dims);
}

DenseTensor::DenseTensor(Dims dims) : dims_(std::move(dims)) {
    validate_dims(dims_);
    values_.assign(num_elements(dims_), 0.0);
}

DenseTensor::DenseTensor(Dims dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
    validate_dims(dims_);
    if (values_.size() != num_elements(dims_))
        throw ShapeError("value count " + std::to_string(values_.size()) +
                         " does not match dims " + dims_str(dims_));
}

double DenseTensor::at(std::span<const std::size_t> index) const {
    return values_[linear_index(dims_, index)];
}

std::size_t linear_index(const Dims& dims, std::span<const std::size_t> index) {
    if (index.size() != dims.size()) throw ShapeError("multi-index has wrong order");
    std::size_t lin = 0;
    for (std::size_t k = dims.size(); k-- > 0;) {
        if (index[k] >= dims[k]) throw ShapeError("multi-index out of range");
        lin = lin * dims[k] + index[k];
    }
    return lin;
}

std::vector<std::size_t> multi_index(const Dims& dims, std::size_t linear) {
    std::vector<std::size_t> idx(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
        idx[k] = linear % dims[k];
        linear /= dims[k];
    }
    return idx;
}

// ---------------------------------------------------------------------------

ObservationSet::ObservationSet(Dims dims, std::vector<std::size_t> indices,
                               std::vector<double> observed)
    : dims_(std::move(dims)), indices_(std::move(indices)), observed_(std::move(observed)) {
    validate_dims(dims_);
    if (indices_.size() != observed_.size())
        throw ShapeError("observation count mismatch: " + std::to_string(indices_.size()) +
                         " indices, " + std::to_string(observed_.size()) + " values");
    const std::size_t total = num_elements(dims_);
    for (std::size_t k = 0; k < indices_.size(); ++k) {
        if (indices_[k] >= total) throw ShapeError("observed index out of range");
        if (k > 0 && indices_[k] <= indices_[k - 1])
            throw InputError("observed indices must be strictly increasing");
    }
}

ObservationSet ObservationSet::sample(const DenseTensor& t, std::vector<std::size_t> indices) {
    std::vector<double> vals;
    vals.reserve(indices.size());
    for (auto i : indices) {
        if (i >= t.size()) throw ShapeError("observed index out of range");
        vals.push_back(t[i]);
    }
    return ObservationSet(t.dims(), std::move(indices), std::move(vals));
}

ObservationSet ObservationSet::full(const DenseTensor& t) {
    std::vector<std::size_t> idx(t.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return sample(t, std::move(idx));
}

DenseTensor ObservationSet::to_dense() const {
    DenseTensor b(dims_);
    for (std::size_t k = 0; k < indices_.size(); ++k) b[indices_[k]] = observed_[k];
    return b;
}

double ObservationSet::norm() const {
    double s = 0.0;
    for (double v : observed_) s += v * v;
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------

void unfold_into(const DenseTensor& t, std::size_t mode, Matrix& out) {
    const auto [left, extent, right] = split_at(t.dims(), mode);
    out.resize(static_cast<Eigen::Index>(extent), static_cast<Eigen::Index>(left * right));
    const double* src = t.data();
    double* dst = out.data();
    if (left == 1) {
        std::copy(src, src + t.size(), dst);
        return;
    }
    // t[a + L*(i + I*b)] -> out(i, a + L*b)
    for (std::size_t b = 0; b < right; ++b) {
        for (std::size_t i = 0; i < extent; ++i) {
            const double* s = src + left * (i + extent * b);
            double* d = dst + i + extent * left * b;
            for (std::size_t a = 0; a < left; ++a) d[a * extent] = s[a];
        }
    }
}

Matrix unfold(const DenseTensor& t, std::size_t mode) {
    Matrix m;
    unfold_into(t, mode, m);
    return m;
}

void fold_accumulate(const Matrix& m, std::size_t mode, double scale, DenseTensor& acc) {
    const auto [left, extent, right] = split_at(acc.dims(), mode);
    if (static_cast<std::size_t>(m.rows()) != extent ||
        static_cast<std::size_t>(m.cols()) != left * right)
        throw ShapeError("fold: matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", dims " + dims_str(acc.dims()) +
                         " need " + std::to_string(extent) + "x" + std::to_string(left * right));
    const double* src = m.data();
    double* dst = acc.data();
    for (std::size_t b = 0; b < right; ++b) {
        for (std::size_t i = 0; i < extent; ++i) {
            double* d = dst + left * (i + extent * b);
            const double* s = src + i + extent * left * b;
            for (std::size_t a = 0; a < left; ++a) d[a] += scale * s[a * extent];
        }
    }
}

DenseTensor fold(const Matrix& m, std::size_t mode, const Dims& dims) {
    validate_dims(dims);
    const auto [left, extent, right] = split_at(dims, mode);
    if (static_cast<std::size_t>(m.rows()) != extent ||
        static_cast<std::size_t>(m.cols()) != left * right)
        throw ShapeError("fold: matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", dims " + dims_str(dims) + " need " +
                         std::to_string(extent) + "x" + std::to_string(left * right));
    std::vector<double> vals(num_elements(dims));
    const double* src = m.data();
    for (std::size_t b = 0; b < right; ++b) {
        for (std::size_t i = 0; i < extent; ++i) {
            double* d = vals.data() + left * (i + extent * b);
            const double* s = src + i + extent * left * b;
            for (std::size_t a = 0; a < left; ++a) d[a] = s[a * extent];
        }
    }
    return DenseTensor(dims, std::move(vals));
}

DenseTensor mode_product(const DenseTensor& t, const Matrix& a, std::size_t mode) {
    if (mode >= t.order())
        throw ShapeError("mode " + std::to_string(mode) + " out of range");
    if (static_cast<std::size_t>(a.cols()) != t.dim(mode))
        throw ShapeError("mode_product: matrix has " + std::to_string(a.cols()) +
                         " columns, tensor mode has extent " + std::to_string(t.dim(mode)));
    if (a.rows() == 0) throw ShapeError("mode_product: matrix has no rows");
    Dims out = t.dims();
    out[mode] = static_cast<std::size_t>(a.rows());
    const Matrix prod = a * unfold(t, mode);
    return fold(prod, mode, out);
}

DenseTensor permute(const DenseTensor& t, std::span<const std::size_t> perm) {
    const std::size_t n = t.order();
    if (perm.size() != n) throw ShapeError("permutation has wrong length");
    std::vector<bool> seen(n, false);
    for (auto p : perm) {
        if (p >= n || seen[p]) throw ShapeError("not a permutation");
        seen[p] = true;
    }
    Dims out_dims(n);
    for (std::size_t k = 0; k < n; ++k) out_dims[k] = t.dim(perm[k]);

    // Stride in the source for each destination mode.
    std::vector<std::size_t> src_stride(n), stride(n);
    std::size_t s = 1;
    for (std::size_t k = 0; k < n; ++k) {
        stride[k] = s;
        s *= t.dim(k);
    }
    for (std::size_t k = 0; k < n; ++k) src_stride[k] = stride[perm[k]];

    std::vector<double> vals(t.size());
    std::vector<std::size_t> idx(n, 0);
    std::size_t src = 0;
    for (std::size_t lin = 0; lin < vals.size(); ++lin) {
        vals[lin] = t[src];
        for (std::size_t k = 0; k < n; ++k) {
            src += src_stride[k];
            if (++idx[k] < out_dims[k]) break;
            src -= src_stride[k] * out_dims[k];
            idx[k] = 0;
        }
    }
    return DenseTensor(std::move(out_dims), std::move(vals));
}

DenseTensor inverse_permute(const DenseTensor& t, std::span<const std::size_t> perm) {
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) {
        if (perm[k] >= perm.size()) throw ShapeError("not a permutation");
        inv[perm[k]] = k;
    }
    return permute(t, inv);
}

double inner(const DenseTensor& a, const DenseTensor& b) {
    require_same_dims(a.dims(), b.dims(), "inner");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double fro_norm(const DenseTensor& t) { return std::sqrt(inner(t, t)); }

double max_abs(const DenseTensor& t) {
    double m = 0.0;
    for (double v : t.values()) m = std::max(m, std::abs(v));
    return m;
}

DenseTensor project(const ObservationSet& obs, const DenseTensor& t) {
    require_same_dims(obs.dims(), t.dims(), "project");
    DenseTensor out(t.dims());
    for (auto i : obs.indices()) out[i] = t[i];
    return out;
}

DenseTensor fill_unobserved(const ObservationSet& obs, const DenseTensor& t) {
    require_same_dims(obs.dims(), t.dims(), "fill_unobserved");
    DenseTensor out = t;
    const auto& idx = obs.indices();
    const auto& val = obs.observed();
    for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = val[k];
    return out;
}

double relerr(const DenseTensor& estimate, const DenseTensor& truth) {
    require_same_dims(estimate.dims(), truth.dims(), "relerr");
    const double denom = fro_norm(truth);
    if (denom == 0.0) throw NumericalError("relerr: truth has zero norm");
    double s = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const double d = estimate[k] - truth[k];
        s += d * d;
    }
    return std::sqrt(s) / denom;
}

}  // namespace tmac
