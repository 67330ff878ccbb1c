#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace censrank {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent sub-seeds from a master seed.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a seed from a master seed and a path of counters, e.g.
/// derive_seed(master, {kFoldStream, fold, grid_point}). Order matters.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(master);
    for (auto p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

/// Fisher-Yates with an explicit bounded draw so the permutation only depends on
/// the (fully specified) mt19937_64 stream, not on the library's shuffle.
template <class T>
void shuffle_in_place(std::span<T> v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::uint64_t bound = i;
        const std::uint64_t limit = Rng::max() - (Rng::max() % bound);
        std::uint64_t r;
        do { r = rng(); } while (r >= limit);
        std::swap(v[i - 1], v[r % bound]);
    }
}

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    shuffle_in_place(std::span<std::size_t>(p), rng);
    return p;
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace censrank
