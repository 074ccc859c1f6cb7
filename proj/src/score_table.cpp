#include "curation/score_table.hpp"

#include <cmath>

#include "curation/error.hpp"

namespace curation {

std::string to_string(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::learned_estimator: return "learned_estimator";
        case ScorerKind::avg_distance: return "avg_distance";
        case ScorerKind::target_ppl: return "target_ppl";
        case ScorerKind::delta_ppl: return "delta_ppl";
    }
    return "unknown";
}

std::string to_string(Direction direction) {
    return direction == Direction::higher_is_closer ? "higher_is_closer" : "lower_is_closer";
}

ScorerKind parse_scorer_kind(const std::string& name) {
    if (name == "learned_estimator" || name == "learned") {
        return ScorerKind::learned_estimator;
    }
    if (name == "avg_distance" || name == "avgdist") {
        return ScorerKind::avg_distance;
    }
    if (name == "target_ppl" || name == "ppl") {
        return ScorerKind::target_ppl;
    }
    if (name == "delta_ppl" || name == "dppl") {
        return ScorerKind::delta_ppl;
    }
    throw Error(ErrorCode::invalid_argument, "unknown scorer '" + name + "'");
}

Direction parse_direction(const std::string& name) {
    if (name == "higher_is_closer") {
        return Direction::higher_is_closer;
    }
    if (name == "lower_is_closer") {
        return Direction::lower_is_closer;
    }
    throw Error(ErrorCode::invalid_argument, "unknown direction '" + name + "'");
}

Direction direction_of(ScorerKind kind) noexcept {
    return kind == ScorerKind::learned_estimator ? Direction::higher_is_closer : Direction::lower_is_closer;
}

void check_finite(const ScoreTable& table) {
    for (const auto& e : table.entries) {
        if (!std::isfinite(e.value)) {
            throw Error(ErrorCode::non_finite, "score for id " + std::to_string(e.id) + " is not finite");
        }
    }
}

}  // namespace curation
