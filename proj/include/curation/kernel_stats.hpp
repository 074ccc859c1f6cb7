#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "curation/matrix.hpp"

namespace curation {

enum class MmdEstimator { biased_v_statistic, unbiased_u_statistic };

std::string to_string(MmdEstimator kind);
MmdEstimator parse_mmd_estimator(const std::string& name);

struct MMDConfig {
    MmdEstimator estimator = MmdEstimator::biased_v_statistic;
    std::size_t subsample_cap = 2000;
    std::size_t bandwidth_cap = 1000;
    std::uint64_t seed = 0;
};

struct MMDMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> raw;
    std::vector<std::vector<double>> normalized;
    double sigma = 0.0;
};

/// exp(-|x - y|^2 / (2 sigma^2)).
double rbf_kernel(std::span<const double> x, std::span<const double> y, double sigma);

/// Median of the non-zero pairwise Euclidean distances over a seeded
/// subsample of at most `cap` points. Throws `degenerate_bandwidth` when every
/// sampled pair coincides.
double median_bandwidth(const FeatureMatrix& points, std::size_t cap, std::uint64_t seed);

/// Squared MMD between two samples under an RBF kernel.
///
/// The biased estimator is the V-statistic (self-pairs included), which is
/// non-negative and exactly zero for identical inputs. The unbiased estimator
/// drops self-pairs from the within-sample terms and can dip below zero.
/// The result is bit-identical under swapping `p` and `q`.
double mmd_squared(const FeatureMatrix& p, const FeatureMatrix& q, double sigma, MmdEstimator kind);

struct NamedGroup {
    std::string label;
    FeatureMatrix points;
};

/// Pairwise squared MMD across all groups with one pooled bandwidth, plus the
/// off-diagonal min-max normalization used for heat maps.
MMDMatrix pairwise_mmd_matrix(std::span<const NamedGroup> groups, const MMDConfig& config);

}  // namespace curation
