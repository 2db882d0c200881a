#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "tmac/tensor.hpp"

namespace tmac::io {

// TNSR1: "TNSR", 0x01, u32 N, N x u64 dims, prod(dims) x f64 values.
// MASK1: "MASK", 0x01, u32 N, N x u64 dims, u64 count, count x u64 indices.
// Everything little-endian; mask indices are 1-based and strictly increasing.

void write_tensor(std::ostream& out, const DenseTensor& t);
DenseTensor read_tensor(std::istream& in);

void write_tensor(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor read_tensor(const std::filesystem::path& path);

struct Mask {
    Dims dims;
    std::vector<std::size_t> indices;  // 0-based in memory
};

void write_mask(std::ostream& out, const Dims& dims, const std::vector<std::size_t>& indices);
Mask read_mask(std::istream& in);

void write_mask(const std::filesystem::path& path, const Dims& dims,
                const std::vector<std::size_t>& indices);
Mask read_mask(const std::filesystem::path& path);

/// Unfolding as CSV, one matrix row per line, shortest round-trip formatting.
void write_csv(std::ostream& out, const Matrix& m);

}  // namespace tmac::io
