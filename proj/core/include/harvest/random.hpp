#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace harvest {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a path of stream labels.
/// The same (seed, path) always yields the same stream, independent of how
/// work is scheduled across threads.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t s = mix64(seed);
    for (auto label : path) s = mix64(s ^ mix64(label + 0x632be59bd9b4e019ULL));
    return s;
}

inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
    return Rng(derive_seed(seed, path));
}

// Stream labels shared by the evaluation harness and the session service.
namespace stream {
inline constexpr std::uint64_t kHistory = 1;
inline constexpr std::uint64_t kTruth = 2;
inline constexpr std::uint64_t kPlanner = 3;
inline constexpr std::uint64_t kSetup = 4;
}  // namespace stream

}  // namespace harvest
