#pragma once

// Linear domain classifier on frozen features. Trained with target samples as
// positives and candidate-pool samples as negatives; its sigmoid output is the
// per-sample proximity score used for ranking.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "curation/feature_store.hpp"
#include "curation/matrix.hpp"
#include "curation/score_table.hpp"

namespace curation {

struct Standardization {
    std::vector<double> mean;
    std::vector<double> scale;
};

struct ProximityEstimator {
    std::vector<double> weights;
    double bias = 0.0;
    std::optional<Standardization> standardize;

    [[nodiscard]] std::size_t dim() const noexcept { return weights.size(); }

    /// Features after the stored standardization (identity when absent).
    template <typename T>
    [[nodiscard]] std::vector<double> transform(std::span<const T> x) const;

    template <typename T>
    [[nodiscard]] double logit(std::span<const T> x) const;
};

struct TrainConfig {
    std::size_t batch_size = 128;
    std::size_t max_steps = 1000;
    double step_size = 0.1;
    double momentum = 0.9;
    double early_stop_accuracy = 0.90;
    double val_fraction = 0.1;
    std::size_t eval_every = 5;
    bool standardize_features = false;
    std::uint64_t seed = 0;
};

struct TrainHistory {
    std::size_t steps_run = 0;
    std::vector<double> loss_curve;
    std::vector<double> val_acc_curve;
    bool stopped_early = false;
};

struct TrainResult {
    ProximityEstimator estimator;
    TrainHistory history;
};

struct Gradient {
    std::vector<double> weights;
    double bias = 0.0;
};

inline constexpr double kLossClamp = 1e-12;

/// Logistic function, evaluated on the branch that cannot overflow.
double sigmoid(double z) noexcept;

double score_sample(const ProximityEstimator& est, std::span<const double> x);
double score_sample(const ProximityEstimator& est, std::span<const float> x);

/// Mean binary cross-entropy with probabilities clamped to [1e-12, 1 - 1e-12].
double bce_loss(std::span<const double> scores, std::span<const int> labels);

/// Mean of (s(x) - y) * x~ and (s(x) - y) over the batch, where x~ is the
/// standardized feature vector.
Gradient bce_gradient(const ProximityEstimator& est, const FeatureMatrix& batch, std::span<const int> labels);

/// Observes every training batch; used by tests to check balance.
using BatchObserver = std::function<void(std::span<const int> labels)>;

/// Momentum SGD on balanced batches (half target, half pool, sampled with
/// replacement) with a seeded held-out split and accuracy-based early stop.
TrainResult train_estimator(const FeatureStore& target, const FeatureStore& pool, const TrainConfig& cfg,
                            const BatchObserver& observer = {});

/// One score per store row, in row order.
ScoreTable score_store(const ProximityEstimator& est, const FeatureStore& store);

// Template definitions.

template <typename T>
std::vector<double> ProximityEstimator::transform(std::span<const T> x) const {
    std::vector<double> out(x.begin(), x.end());
    if (standardize) {
        for (std::size_t d = 0; d < out.size(); ++d) {
            out[d] = (out[d] - standardize->mean[d]) / standardize->scale[d];
        }
    }
    return out;
}

template <typename T>
double ProximityEstimator::logit(std::span<const T> x) const {
    double z = bias;
    if (standardize) {
        for (std::size_t d = 0; d < weights.size(); ++d) {
            z += weights[d] * ((static_cast<double>(x[d]) - standardize->mean[d]) / standardize->scale[d]);
        }
    } else {
        for (std::size_t d = 0; d < weights.size(); ++d) {
            z += weights[d] * static_cast<double>(x[d]);
        }
    }
    return z;
}

}  // namespace curation
