#include "curation/baseline_scorers.hpp"

#include <cmath>
#include <string>

#include "curation/error.hpp"
#include "curation/parallel.hpp"
#include "curation/random.hpp"

namespace curation {

namespace {

template <typename T>
double mean_distance(std::span<const T> x, const FeatureMatrix& targets) {
    if (targets.empty()) {
        throw Error(ErrorCode::empty_input, "average distance needs a non-empty target set");
    }
    if (x.size() != targets.cols()) {
        throw Error(ErrorCode::dimension_mismatch, "sample dimension " + std::to_string(x.size()) +
                                                       " differs from target dimension " +
                                                       std::to_string(targets.cols()));
    }
    double total = 0.0;
    for (std::size_t j = 0; j < targets.rows(); ++j) {
        total += std::sqrt(squared_distance(x, targets.row(j)));
    }
    return total / static_cast<double>(targets.rows());
}

FeatureMatrix subsample(const FeatureMatrix& targets, std::size_t cap, std::uint64_t seed) {
    if (targets.rows() <= cap) {
        return targets;
    }
    Rng rng(seed);
    const auto rows = subsample_indices(targets.rows(), cap, rng);
    FeatureMatrix out(rows.size(), targets.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = targets.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

std::size_t require_aux(const FeatureStore& store, std::string_view name) {
    const int idx = store.aux_index(std::string(name));
    if (idx < 0) {
        throw Error(ErrorCode::missing_aux, "store has no aux channel '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(idx);
}

}  // namespace

double avg_distance_score(std::span<const double> x, const FeatureMatrix& targets) {
    return mean_distance(x, targets);
}

double avg_distance_score(std::span<const double> x, const FeatureMatrix& targets, std::size_t cap,
                          std::uint64_t seed) {
    if (targets.rows() <= cap) {
        return mean_distance(x, targets);
    }
    return mean_distance(x, subsample(targets, cap, seed));
}

double perplexity(double logprob_sum, double token_count) {
    if (!(token_count >= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "perplexity needs at least one token");
    }
    if (!std::isfinite(logprob_sum)) {
        throw Error(ErrorCode::non_finite, "log-probability sum is not finite");
    }
    if (logprob_sum > 0.0) {
        throw Error(ErrorCode::invalid_argument, "log-probability sum must not be positive");
    }
    return std::exp(-logprob_sum / token_count);
}

double delta_perplexity(double ppl_target, double ppl_base) {
    if (!(ppl_target >= 1.0) || !(ppl_base >= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "perplexities must be at least 1");
    }
    return ppl_target - ppl_base;
}

ScoreTable score_store_baseline(const FeatureStore& store, ScorerKind kind, const FeatureStore* target,
                                const BaselineConfig& cfg) {
    if (kind == ScorerKind::learned_estimator) {
        throw Error(ErrorCode::invalid_argument, "learned_estimator is not a baseline scorer");
    }
    ScoreTable table;
    table.scorer = kind;
    table.direction = direction_of(kind);
    table.entries.resize(store.size());

    FeatureMatrix targets;
    std::size_t lp_target = 0;
    std::size_t lp_base = 0;
    std::size_t tokens = 0;
    if (kind == ScorerKind::avg_distance) {
        if (target == nullptr) {
            throw Error(ErrorCode::invalid_argument, "avg_distance needs a target store");
        }
        if (target->empty()) {
            throw Error(ErrorCode::empty_input, "average distance needs a non-empty target set");
        }
        if (target->dim() != store.dim() && !store.empty()) {
            throw Error(ErrorCode::dimension_mismatch, "target dimension " + std::to_string(target->dim()) +
                                                           " differs from pool dimension " +
                                                           std::to_string(store.dim()));
        }
        Rng rng(cfg.seed);
        const auto rows = subsample_indices(target->size(), cfg.target_cap, rng);
        targets = FeatureMatrix::gather(*target, rows);
    } else {
        lp_target = require_aux(store, kAuxLogprobTarget);
        tokens = require_aux(store, kAuxTokenCount);
        if (kind == ScorerKind::delta_ppl) {
            lp_base = require_aux(store, kAuxLogprobBase);
        }
    }
    if (store.empty()) {
        return table;
    }

    (void)store.dataset(0);
    parallel::for_blocks(store.size(), 1024, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double value = 0.0;
            if (kind == ScorerKind::avg_distance) {
                value = mean_distance(store.row(i), targets);
            } else {
                const auto aux = store.aux(i);
                const double ppl_target = perplexity(aux[lp_target], aux[tokens]);
                value = kind == ScorerKind::target_ppl
                            ? ppl_target
                            : delta_perplexity(ppl_target, perplexity(aux[lp_base], aux[tokens]));
            }
            table.entries[i] = {store.id(i), store.dataset(i), value};
        }
    });
    return table;
}

}  // namespace curation
