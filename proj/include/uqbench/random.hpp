#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace uqbench {

using Engine = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) noexcept {
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

// Seed split scheme: child = mix64(parent ^ fnv1a(tag)) ^ mix64(index).
// Every stochastic stage of an experiment derives its seed from the master
// seed through a fixed tag, so results never depend on evaluation order.
constexpr std::uint64_t split_seed(std::uint64_t parent, std::string_view tag,
                                   std::uint64_t index = 0) noexcept {
    return mix64(parent ^ fnv1a(tag)) ^ mix64(index + 0x632be59bd9b4e019ull);
}

inline Engine make_engine(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Engine(seq);
}

}  // namespace uqbench
