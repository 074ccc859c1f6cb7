#include "curation/selection.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "curation/error.hpp"
#include "curation/parallel.hpp"

namespace curation {

namespace {

constexpr std::size_t kSelectBlock = 1 << 16;

// Bounded best-k buffer. The heap top is the worst kept entry.
class TopK {
  public:
    TopK(std::size_t k, Direction direction) : k_(k), direction_(direction) { heap_.reserve(k); }

    void offer(const ScoreEntry& e) {
        if (k_ == 0) {
            return;
        }
        if (heap_.size() < k_) {
            heap_.push_back(e);
            std::push_heap(heap_.begin(), heap_.end(), order());
        } else if (ranks_before(direction_, e, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), order());
            heap_.back() = e;
            std::push_heap(heap_.begin(), heap_.end(), order());
        }
    }

    std::vector<ScoreEntry> take_sorted() && {
        std::sort_heap(heap_.begin(), heap_.end(), order());
        return std::move(heap_);
    }

  private:
    struct Order {
        Direction d;
        bool operator()(const ScoreEntry& a, const ScoreEntry& b) const { return ranks_before(d, a, b); }
    };

    Order order() const { return {direction_}; }

    std::size_t k_;
    Direction direction_;
    std::vector<ScoreEntry> heap_;
};

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) {
        return 0.0;
    }
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::pair<double, double> value_range(const ScoreTable& table) {
    if (table.scorer == ScorerKind::learned_estimator || table.entries.empty()) {
        return {0.0, 1.0};
    }
    double lo = table.entries.front().value;
    double hi = lo;
    for (const auto& e : table.entries) {
        lo = std::min(lo, e.value);
        hi = std::max(hi, e.value);
    }
    return {lo, hi};
}

}  // namespace

SelectionManifest top_k_select(const ScoreTable& table, std::size_t k) {
    SelectionManifest manifest;
    manifest.k_requested = k;
    manifest.pool_size = table.size();
    manifest.scorer = table.scorer;
    manifest.direction = table.direction;

    const std::size_t n = table.size();
    const std::size_t nblocks = (n + kSelectBlock - 1) / kSelectBlock;
    std::vector<std::vector<ScoreEntry>> partial(nblocks);
    parallel::for_blocks(n, kSelectBlock, [&](std::size_t begin, std::size_t end) {
        TopK best(k, table.direction);
        for (std::size_t i = begin; i < end; ++i) {
            best.offer(table.entries[i]);
        }
        partial[begin / kSelectBlock] = std::move(best).take_sorted();
    });

    TopK merged(k, table.direction);
    for (const auto& block : partial) {
        for (const auto& e : block) {
            merged.offer(e);
        }
    }
    auto best = std::move(merged).take_sorted();
    manifest.entries.reserve(best.size());
    for (std::size_t r = 0; r < best.size(); ++r) {
        manifest.entries.push_back({r + 1, best[r].id, std::move(best[r].dataset), best[r].value});
    }
    return manifest;
}

CompositionReport mixture_composition(const SelectionManifest& manifest) {
    std::map<std::string, std::size_t> counts;
    for (const auto& e : manifest.entries) {
        ++counts[e.dataset];
    }
    CompositionReport report;
    report.total = manifest.entries.size();
    for (const auto& [name, count] : counts) {
        report.shares.push_back(
            {name, count, 100.0 * static_cast<double>(count) / static_cast<double>(report.total)});
    }
    std::stable_sort(report.shares.begin(), report.shares.end(),
                     [](const CompositionShare& a, const CompositionShare& b) { return a.count > b.count; });
    return report;
}

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
    if (bins == 0) {
        throw Error(ErrorCode::invalid_argument, "histogram needs at least one bin");
    }
    Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        std::size_t idx = 0;
        if (width > 0.0) {
            const double pos = std::floor((v - lo) / width);
            idx = pos <= 0.0 ? 0 : std::min(static_cast<std::size_t>(pos), bins - 1);
        }
        ++h.counts[idx];
    }
    return h;
}

HistogramReport score_histogram(const ScoreTable& table, std::size_t bins, bool group_by_dataset) {
    const auto [lo, hi] = value_range(table);
    std::vector<double> values;
    values.reserve(table.size());
    std::map<std::string, std::vector<double>> grouped;
    for (const auto& e : table.entries) {
        values.push_back(e.value);
        if (group_by_dataset) {
            grouped[e.dataset].push_back(e.value);
        }
    }
    HistogramReport report;
    report.overall = histogram(values, bins, lo, hi);
    for (const auto& [name, vs] : grouped) {
        report.by_dataset.emplace(name, histogram(vs, bins, lo, hi));
    }
    return report;
}

SummaryStats summarize(std::span<const double> values) {
    SummaryStats s;
    s.count = values.size();
    if (values.empty()) {
        return s;
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (double v : sorted) {
        total += v;
    }
    s.mean = total / static_cast<double>(sorted.size());
    s.median = quantile_sorted(sorted, 0.5);
    s.p10 = quantile_sorted(sorted, 0.10);
    s.p25 = quantile_sorted(sorted, 0.25);
    s.p75 = quantile_sorted(sorted, 0.75);
    s.p90 = quantile_sorted(sorted, 0.90);
    return s;
}

ShiftReport selection_shift_report(const ScoreTable& pool_table, const SelectionManifest& manifest,
                                   std::size_t bins) {
    std::unordered_map<std::uint64_t, double> value_of;
    value_of.reserve(pool_table.size());
    std::vector<double> pool_values;
    pool_values.reserve(pool_table.size());
    for (const auto& e : pool_table.entries) {
        value_of.emplace(e.id, e.value);
        pool_values.push_back(e.value);
    }
    std::vector<double> selected;
    selected.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        const auto it = value_of.find(e.id);
        if (it == value_of.end()) {
            throw Error(ErrorCode::unknown_id, "manifest id " + std::to_string(e.id) + " is not in the score table");
        }
        selected.push_back(it->second);
    }

    ShiftReport report;
    report.pool = summarize(pool_values);
    report.selected = summarize(selected);
    const auto [lo, hi] = value_range(pool_table);
    report.pool_histogram = histogram(pool_values, bins, lo, hi);
    report.selected_histogram = histogram(selected, bins, lo, hi);

    if (!selected.empty()) {
        const bool higher = pool_table.direction == Direction::higher_is_closer;
        const double cut = higher ? report.pool.p90 : report.pool.p10;
        std::size_t beyond = 0;
        for (double v : selected) {
            beyond += static_cast<std::size_t>(higher ? v > cut : v < cut);
        }
        report.selected_beyond_pool_p90 = static_cast<double>(beyond) / static_cast<double>(selected.size());
    }
    return report;
}

}  // namespace curation
