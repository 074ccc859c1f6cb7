#include "curation/random.hpp"

#include <algorithm>
#include <iterator>

namespace curation {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    // splitmix64 finalizer over the combined state
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t cap, Rng& rng) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) {
        all[i] = i;
    }
    if (n <= cap) {
        return all;
    }
    std::vector<std::size_t> picked;
    picked.reserve(cap);
    std::sample(all.begin(), all.end(), std::back_inserter(picked), cap, rng);
    return picked;
}

}  // namespace curation
