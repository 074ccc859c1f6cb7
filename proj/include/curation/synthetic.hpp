#pragma once

// Gaussian-mixture benchmark pools with a planted target-aligned subset, the
// closed-form posterior that an ideal domain classifier would output, and
// precision/recall of a selection against the planted ground truth.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "curation/feature_store.hpp"
#include "curation/selection.hpp"

namespace curation {

struct MixtureComponent {
    std::vector<double> mean;
    double std = 1.0;
    std::size_t count = 1;
    std::string dataset;
    bool aligned = false;
};

struct MixtureSpec {
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    std::uint64_t id_offset = 0;
    std::vector<MixtureComponent> components;
};

struct TruthEntry {
    std::uint64_t id = 0;
    bool aligned = false;
    std::size_t component = 0;
};

struct SyntheticSet {
    std::vector<FeatureRecord> records;
    std::vector<TruthEntry> truth;
};

/// Throws `invalid_argument` on a malformed spec.
void check_spec(const MixtureSpec& spec);

/// Samples the components in order; ids are id_offset, id_offset + 1, ...
SyntheticSet gen_mixture(const MixtureSpec& spec);

/// "dir/pool.fst" -> "dir/pool.truth.jsonl".
std::filesystem::path truth_path_for(const std::filesystem::path& store_path);

/// Writes the store, its metadata sidecar, and the truth sidecar.
StoreSummary write_synthetic(const SyntheticSet& set, const std::filesystem::path& store_path);

void write_truth(std::span<const TruthEntry> truth, const std::filesystem::path& path);
std::vector<TruthEntry> read_truth(const std::filesystem::path& path);

/// log of the mixture density at x (weights proportional to counts).
double mixture_log_density(std::span<const double> x, const MixtureSpec& spec);

/// p_target(x) / (p_target(x) + p_pool(x)) in closed form.
double analytic_posterior(std::span<const double> x, const MixtureSpec& target, const MixtureSpec& pool);

struct RecoveryReport {
    double precision_at_k = 0.0;
    double recall_at_k = 0.0;
    std::size_t k = 0;
    std::size_t planted_count = 0;
    std::size_t hits = 0;
};

RecoveryReport recovery_eval(const SelectionManifest& manifest, std::span<const TruthEntry> truth);

struct Benchmark {
    MixtureSpec target;
    MixtureSpec pool;
    std::size_t k = 0;
};

/// The standard planted-subset benchmark: 32-d, target of 2,000 points
/// (std 0.5), pool of four far components (distance 8, std 1, 4,500 each) plus
/// 2,000 planted points at distance 1 from the target mean (std 0.5); K = 2,000.
Benchmark standard_benchmark(std::uint64_t seed = 7);

/// Like the standard benchmark, but the 2,000 planted points are split over
/// four tighter sub-modes around the target mean. Used to check that selection
/// keeps the spread of the aligned region.
Benchmark multimode_benchmark(std::uint64_t seed = 7);

}  // namespace curation
