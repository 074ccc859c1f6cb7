#include "curation/diversity.hpp"

#include <cmath>

#include "curation/error.hpp"
#include "curation/parallel.hpp"
#include "curation/random.hpp"

namespace curation {

namespace {

// `row_at(i)` yields row i as a span of float or double.
template <typename RowAt>
double diversity_impl(std::size_t n, RowAt&& row_at, const DiversityConfig& cfg) {
    if (n < 2) {
        throw Error(ErrorCode::empty_input, "diversity needs at least two points");
    }
    if (!(cfg.t > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "diversity temperature must be positive");
    }
    if (cfg.pair_samples == 0) {
        throw Error(ErrorCode::invalid_argument, "diversity needs at least one sampled pair");
    }

    if (n <= cfg.exact_threshold) {
        // Each unordered pair stands for both ordered pairs.
        std::vector<double> row_sums(n, 0.0);
        parallel::for_blocks(n, 64, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const auto u = row_at(i);
                double s = 0.0;
                for (std::size_t j = i + 1; j < n; ++j) {
                    s += std::exp(-cfg.t * squared_distance(u, row_at(j)));
                }
                row_sums[i] = s;
            }
        });
        double total = 0.0;
        for (double s : row_sums) {
            total += s;
        }
        const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
        return pairs / total;
    }

    Rng rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::uniform_int_distribution<std::size_t> second(0, n - 2);
    std::vector<std::pair<std::size_t, std::size_t>> pairs(cfg.pair_samples);
    for (auto& p : pairs) {
        p.first = first(rng);
        p.second = second(rng);
        if (p.second >= p.first) {
            ++p.second;
        }
    }
    std::vector<double> terms(pairs.size());
    parallel::for_blocks(pairs.size(), 4096, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            terms[k] = std::exp(-cfg.t * squared_distance(row_at(pairs[k].first), row_at(pairs[k].second)));
        }
    });
    double total = 0.0;
    for (double v : terms) {
        total += v;
    }
    return static_cast<double>(pairs.size()) / total;
}

}  // namespace

double diversity(const FeatureMatrix& features, const DiversityConfig& cfg) {
    return diversity_impl(features.rows(), [&](std::size_t i) { return features.row(i); }, cfg);
}

double diversity(const FeatureStore& store, std::span<const std::size_t> rows, const DiversityConfig& cfg) {
    return diversity_impl(rows.size(), [&](std::size_t i) { return store.row(rows[i]); }, cfg);
}

}  // namespace curation
