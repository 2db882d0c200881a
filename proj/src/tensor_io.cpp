#include "tmac/tensor_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "tmac/error.hpp"

namespace tmac::io {

namespace {

constexpr std::uint8_t kVersion = 0x01;

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(std::is_unsigned_v<T>);
    std::array<char, sizeof(T)> buf{};
    for (std::size_t k = 0; k < sizeof(T); ++k)
        buf[k] = static_cast<char>((value >> (8 * k)) & 0xFF);
    out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in, const char* what) {
    std::array<unsigned char, sizeof(T)> buf{};
    in.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
        throw InputError(std::string("truncated file while reading ") + what);
    T v = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) v |= static_cast<T>(buf[k]) << (8 * k);
    return v;
}

void put_header(std::ostream& out, const char (&magic)[5], const Dims& dims) {
    out.write(magic, 4);
    out.put(static_cast<char>(kVersion));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) put_le<std::uint64_t>(out, d);
}

Dims get_header(std::istream& in, const char (&magic)[5]) {
    char got[4] = {};
    in.read(got, 4);
    if (in.gcount() != 4 || std::memcmp(got, magic, 4) != 0)
        throw InputError(std::string("bad magic, expected ") + magic);
    const int version = in.get();
    if (version != kVersion)
        throw InputError("unsupported " + std::string(magic) + " version " + std::to_string(version));
    const auto order = get_le<std::uint32_t>(in, "order");
    if (order == 0 || order > kMaxOrder)
        throw InputError("tensor order " + std::to_string(order) + " outside [1, 8]");
    Dims dims(order);
    for (auto& d : dims) {
        const auto v = get_le<std::uint64_t>(in, "dims");
        if (v == 0) throw InputError("zero dimension in header");
        d = static_cast<std::size_t>(v);
    }
    try {
        validate_dims(dims);
    } catch (const ShapeError& e) {
        throw InputError(e.what());
    }
    return dims;
}

void expect_eof(std::istream& in) {
    if (in.peek() != std::char_traits<char>::eof()) throw InputError("trailing bytes after payload");
}

template <typename Fn>
auto with_ifstream(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return fn(in);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

template <typename Fn>
void with_ofstream(const std::filesystem::path& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    fn(out);
    out.flush();
    if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace

void write_tensor(std::ostream& out, const DenseTensor& t) {
    put_header(out, "TNSR", t.dims());
    for (double v : t.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

DenseTensor read_tensor(std::istream& in) {
    Dims dims = get_header(in, "TNSR");
    std::vector<double> vals(num_elements(dims));
    for (auto& v : vals) v = std::bit_cast<double>(get_le<std::uint64_t>(in, "values"));
    expect_eof(in);
    return DenseTensor(std::move(dims), std::move(vals));
}

void write_tensor(const std::filesystem::path& path, const DenseTensor& t) {
    with_ofstream(path, [&](std::ostream& out) { write_tensor(out, t); });
}

DenseTensor read_tensor(const std::filesystem::path& path) {
    return with_ifstream(path, [](std::istream& in) { return read_tensor(in); });
}

void write_mask(std::ostream& out, const Dims& dims, const std::vector<std::size_t>& indices) {
    put_header(out, "MASK", dims);
    put_le<std::uint64_t>(out, indices.size());
    for (auto i : indices) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(i) + 1);
}

Mask read_mask(std::istream& in) {
    Mask m;
    m.dims = get_header(in, "MASK");
    const std::size_t total = num_elements(m.dims);
    const auto count = get_le<std::uint64_t>(in, "count");
    if (count > total) throw InputError("mask count exceeds tensor size");
    m.indices.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        const auto one_based = get_le<std::uint64_t>(in, "indices");
        if (one_based == 0 || one_based > total)
            throw InputError("mask index " + std::to_string(one_based) + " outside [1, " +
                             std::to_string(total) + "]");
        const std::size_t idx = one_based - 1;
        if (!m.indices.empty() && idx <= m.indices.back())
            throw InputError("mask indices are not strictly increasing");
        m.indices.push_back(idx);
    }
    expect_eof(in);
    return m;
}

void write_mask(const std::filesystem::path& path, const Dims& dims,
                const std::vector<std::size_t>& indices) {
    with_ofstream(path, [&](std::ostream& out) { write_mask(out, dims, indices); });
}

Mask read_mask(const std::filesystem::path& path) {
    return with_ifstream(path, [](std::istream& in) { return read_mask(in); });
}

void write_csv(std::ostream& out, const Matrix& m) {
    std::array<char, 64> buf{};
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out.put(',');
            auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), m(i, j));
            out.write(buf.data(), end - buf.data());
        }
        out.put('\n');
    }
}

}  // namespace tmac::io
