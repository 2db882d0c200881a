#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "tmac/tensor.hpp"

namespace tmac {

/// Distribution of the core and factor matrices of a synthetic low-rank tensor.
///   gaussian          core and factors i.i.d. N(0, 1)
///   uniform_centered  core and factors i.i.d. U[-0.5, 0.5]
///   power_law         core i.i.d. U[0, 1]; factors Q * diag(1, 2^-1/2, ..., r^-1/2)
///                     with Q an orthonormal basis of a Gaussian draw
enum class Family { Gaussian, UniformCentered, PowerLaw };

std::string_view to_string(Family f);
Family parse_family(std::string_view s);

struct SynthSpec {
    Dims dims{20, 20, 20};
    std::size_t rank = 2;
    Family family = Family::Gaussian;
    double sr = 0.5;     // sample ratio |Omega| / prod(dims)
    double sigma = 0.0;  // relative noise level
    std::uint64_t seed = 0;
};

/// Throws InputError on an invalid spec.
void validate(const SynthSpec& spec);

struct SynthData {
    DenseTensor truth;    // noiseless
    ObservationSet obs;   // samples of the (possibly noisy) tensor
};

/// Deterministic in the spec. Truth, noise and the sample set come from
/// independent streams derived from `spec.seed`, so changing sigma leaves the
/// truth and the index set unchanged.
SynthData generate(const SynthSpec& spec);

/// The rank-r tensor core x_1 A_1 ... x_N A_N drawn from `family`.
DenseTensor low_rank_tensor(const Dims& dims, std::size_t rank, Family family, std::mt19937_64& rng);

/// truth + sigma * (max|truth| / max|noise|) * noise with noise i.i.d. N(0, 1).
DenseTensor add_noise(const DenseTensor& truth, double sigma, std::mt19937_64& rng);

/// round(sr * total), half away from zero, clamped to [1, total].
std::size_t sample_count(std::size_t total, double sr);

/// `count` distinct indices from [0, total), uniformly, returned sorted.
std::vector<std::size_t> sample_indices(std::size_t total, std::size_t count, std::mt19937_64& rng);

}  // namespace tmac
