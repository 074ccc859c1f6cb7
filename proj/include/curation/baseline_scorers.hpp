#pragma once

// Alternative proximity measurements: mean feature-space distance to the
// target set, target-conditioned perplexity, and perplexity change between a
// target-adapted and a base model. Log-probabilities come in as precomputed
// aux channels of the store.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "curation/feature_store.hpp"
#include "curation/matrix.hpp"
#include "curation/score_table.hpp"

namespace curation {

inline constexpr std::string_view kAuxLogprobTarget = "logprob_sum_target";
inline constexpr std::string_view kAuxLogprobBase = "logprob_sum_base";
inline constexpr std::string_view kAuxTokenCount = "token_count";

struct BaselineConfig {
    std::size_t target_cap = 2000;
    std::uint64_t seed = 0;
};

/// Mean Euclidean distance from `x` to every row of `targets`.
double avg_distance_score(std::span<const double> x, const FeatureMatrix& targets);

/// Same, after drawing a seeded subsample of at most `cap` targets.
double avg_distance_score(std::span<const double> x, const FeatureMatrix& targets, std::size_t cap,
                          std::uint64_t seed);

/// exp(-logprob_sum / token_count).
double perplexity(double logprob_sum, double token_count);

double delta_perplexity(double ppl_target, double ppl_base);

/// Scores every row of `store` with a baseline scorer. `target` is required for
/// avg_distance; the perplexity scorers read the aux channels above.
ScoreTable score_store_baseline(const FeatureStore& store, ScorerKind kind, const FeatureStore* target,
                                const BaselineConfig& cfg);

}  // namespace curation
