#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace curation {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a run seed, so that sub-tasks
/// (per-group subsampling, per-class splits) never share a generator state.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Uniform sample without replacement of min(n, cap) indices from [0, n),
/// returned in ascending order. Returns all indices when n <= cap.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t cap, Rng& rng);

}  // namespace curation
