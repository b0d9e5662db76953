#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tfs {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent, order-free seeds for
// sub-streams (per round, per candidate, per split).
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = mix64(base);
    for (auto t : tags) h = mix64(h ^ mix64(t));
    return h;
}

}  // namespace tfs
