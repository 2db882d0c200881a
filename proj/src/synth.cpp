#include "tmac/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tmac/error.hpp"
#include "tmac/linalg.hpp"
#include "tmac/seed.hpp"

namespace tmac {

namespace {

enum Stream : std::uint64_t { kTruthStream = 1, kNoiseStream = 2, kMaskStream = 3 };

Matrix draw(Eigen::Index rows, Eigen::Index cols, Family family, bool core, std::mt19937_64& rng) {
    switch (family) {
        case Family::Gaussian:
            return linalg::random_normal(rows, cols, rng);
        case Family::UniformCentered: {
            std::uniform_real_distribution<double> u(-0.5, 0.5);
            Matrix m(rows, cols);
            for (Eigen::Index j = 0; j < cols; ++j)
                for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
            return m;
        }
        case Family::PowerLaw: {
            if (core) {
                std::uniform_real_distribution<double> u(0.0, 1.0);
                Matrix m(rows, cols);
                for (Eigen::Index j = 0; j < cols; ++j)
                    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
                return m;
            }
            const Matrix g = linalg::random_normal(rows, cols, rng);
            Eigen::HouseholderQR<Matrix> qr(g);
            Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
            for (Eigen::Index j = 0; j < cols; ++j) q.col(j) *= 1.0 / std::sqrt(static_cast<double>(j + 1));
            return q;
        }
    }
    throw InputError("unknown family");
}

}  // namespace

std::string_view to_string(Family f) {
    switch (f) {
        case Family::Gaussian: return "gaussian";
        case Family::UniformCentered: return "uniform_centered";
        case Family::PowerLaw: return "power_law";
    }
    return "gaussian";
}

Family parse_family(std::string_view s) {
    if (s == "gaussian") return Family::Gaussian;
    if (s == "uniform_centered") return Family::UniformCentered;
    if (s == "power_law") return Family::PowerLaw;
    throw InputError("unknown family '" + std::string(s) +
                     "' (expected gaussian, uniform_centered or power_law)");
}

void validate(const SynthSpec& spec) {
    try {
        validate_dims(spec.dims);
    } catch (const ShapeError& e) {
        throw InputError(e.what());
    }
    const std::size_t min_dim = *std::min_element(spec.dims.begin(), spec.dims.end());
    if (spec.rank < 1 || spec.rank > min_dim)
        throw InputError("rank " + std::to_string(spec.rank) + " must be in [1, " +
                         std::to_string(min_dim) + "]");
    if (!(spec.sr > 0.0 && spec.sr <= 1.0)) throw InputError("sr must be in (0, 1]");
    if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) throw InputError("sigma must be >= 0");
}

DenseTensor low_rank_tensor(const Dims& dims, std::size_t rank, Family family, std::mt19937_64& rng) {
    const auto r = static_cast<Eigen::Index>(rank);
    Dims core_dims(dims.size(), rank);
    const Matrix core_flat = draw(static_cast<Eigen::Index>(num_elements(core_dims)), 1, family, true, rng);
    DenseTensor t(core_dims, std::vector<double>(core_flat.data(), core_flat.data() + core_flat.size()));
    std::vector<Matrix> factors;
    factors.reserve(dims.size());
    for (std::size_t n = 0; n < dims.size(); ++n)
        factors.push_back(draw(static_cast<Eigen::Index>(dims[n]), r, family, false, rng));
    for (std::size_t n = 0; n < dims.size(); ++n) t = mode_product(t, factors[n], n);
    return t;
}

DenseTensor add_noise(const DenseTensor& truth, double sigma, std::mt19937_64& rng) {
    if (!(sigma >= 0.0)) throw InputError("sigma must be >= 0");
    if (sigma == 0.0) return truth;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> noise(truth.size());
    double peak = 0.0;
    for (auto& v : noise) {
        v = normal(rng);
        peak = std::max(peak, std::abs(v));
    }
    if (peak == 0.0) return truth;
    const double scale = sigma * max_abs(truth) / peak;
    DenseTensor out = truth;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += scale * noise[k];
    return out;
}

std::size_t sample_count(std::size_t total, double sr) {
    const double raw = std::round(sr * static_cast<double>(total));
    if (raw < 1.0) return 1;
    if (raw >= static_cast<double>(total)) return total;
    return static_cast<std::size_t>(raw);
}

std::vector<std::size_t> sample_indices(std::size_t total, std::size_t count, std::mt19937_64& rng) {
    if (count > total) throw InputError("cannot sample more indices than entries");
    std::vector<std::size_t> pool(total);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `count` slots end up a uniform subset.
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, total - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

SynthData generate(const SynthSpec& spec) {
    validate(spec);
    std::mt19937_64 truth_rng(derive_seed(spec.seed, {kTruthStream}));
    std::mt19937_64 noise_rng(derive_seed(spec.seed, {kNoiseStream}));
    std::mt19937_64 mask_rng(derive_seed(spec.seed, {kMaskStream}));

    DenseTensor truth = low_rank_tensor(spec.dims, spec.rank, spec.family, truth_rng);
    const DenseTensor noisy = add_noise(truth, spec.sigma, noise_rng);
    const std::size_t total = truth.size();
    auto indices = sample_indices(total, sample_count(total, spec.sr), mask_rng);
    ObservationSet obs = ObservationSet::sample(noisy, std::move(indices));
    return {std::move(truth), std::move(obs)};
}

}  // namespace tmac
