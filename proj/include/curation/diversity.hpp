#pragma once

#include <cstdint>
#include <span>

#include "curation/feature_store.hpp"
#include "curation/matrix.hpp"

namespace curation {

struct DiversityConfig {
    double t = 2.0;
    std::size_t exact_threshold = 4096;
    std::size_t pair_samples = 200000;
    std::uint64_t seed = 0;
};

/// Uniformity-based diversity: 1 / E[exp(-t |u - v|^2)] over ordered pairs of
/// distinct samples. Exact for up to `exact_threshold` points, Monte-Carlo over
/// `pair_samples` seeded pairs above that.
double diversity(const FeatureMatrix& features, const DiversityConfig& cfg);

/// Diversity of the given store rows, read directly from the store.
double diversity(const FeatureStore& store, std::span<const std::size_t> rows, const DiversityConfig& cfg);

}  // namespace curation
