#pragma once

#include <cstdint>
#include <initializer_list>

namespace tmac {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Child seed for a stream identified by `path` under `base`. Distinct paths
/// give unrelated seeds; the same path always gives the same seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(base);
    for (auto p : path) h = mix64(h ^ mix64(p + 0x632BE59BD9B4E019ULL));
    return h;
}

}  // namespace tmac
