#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "curation/score_table.hpp"

namespace curation {

struct ManifestEntry {
    std::size_t rank = 0;
    std::uint64_t id = 0;
    std::string dataset;
    double value = 0.0;
};

struct SelectionManifest {
    std::size_t k_requested = 0;
    std::size_t pool_size = 0;
    ScorerKind scorer = ScorerKind::learned_estimator;
    Direction direction = Direction::higher_is_closer;
    std::vector<ManifestEntry> entries;
    /// Resolved configuration of the run that produced the manifest, as a JSON
    /// object text. Empty when produced in-process without provenance.
    std::string config_json;

    [[nodiscard]] bool truncated() const noexcept { return k_requested > entries.size(); }
};

/// Best `k` entries of `table` in its direction, ties broken by ascending id.
/// Memory is O(k) per worker; the table is never sorted as a whole.
SelectionManifest top_k_select(const ScoreTable& table, std::size_t k);

struct CompositionShare {
    std::string dataset;
    std::size_t count = 0;
    double percentage = 0.0;
};

struct CompositionReport {
    std::vector<CompositionShare> shares;  // descending by count, then by name
    std::size_t total = 0;
};

CompositionReport mixture_composition(const SelectionManifest& manifest);

struct Histogram {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<std::size_t> counts;
};

struct HistogramReport {
    Histogram overall;
    std::map<std::string, Histogram> by_dataset;
};

/// Equal-width histogram. Learned scores use [0, 1]; other scorers use the
/// observed value range.
HistogramReport score_histogram(const ScoreTable& table, std::size_t bins, bool group_by_dataset);

/// Histogram of `values` over fixed edges [lo, hi]; values outside are clamped
/// into the first or last bin.
Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

struct SummaryStats {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double p10 = 0.0;
    double p25 = 0.0;
    double p75 = 0.0;
    double p90 = 0.0;
};

SummaryStats summarize(std::span<const double> values);

struct ShiftReport {
    SummaryStats pool;
    SummaryStats selected;
    Histogram pool_histogram;
    Histogram selected_histogram;
    /// Share of selected values beyond the pool's 90th percentile in the
    /// scorer's direction.
    double selected_beyond_pool_p90 = 0.0;
};

ShiftReport selection_shift_report(const ScoreTable& pool_table, const SelectionManifest& manifest,
                                   std::size_t bins = 50);

}  // namespace curation
