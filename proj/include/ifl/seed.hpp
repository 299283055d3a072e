#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ifl {

// splitmix64 finalizer; good avalanche, cheap, stable across platforms.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a root seed and a tag path,
// e.g. derive_seed(master, {run_index, client_id, stream_tag}).
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(root);
    for (std::uint64_t p : path) h = mix64(h ^ mix64(p));
    return h;
}

inline std::mt19937_64 make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    return std::mt19937_64(derive_seed(root, path));
}

// Stream tags. Keeping them in one place guards against accidental reuse.
namespace stream {
inline constexpr std::uint64_t run = 1;
inline constexpr std::uint64_t partition = 2;
inline constexpr std::uint64_t init = 3;
inline constexpr std::uint64_t sampler = 4;
inline constexpr std::uint64_t synthetic_train = 5;
inline constexpr std::uint64_t synthetic_test = 6;
inline constexpr std::uint64_t label_flip = 7;
}  // namespace stream

}  // namespace ifl
