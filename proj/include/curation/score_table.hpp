#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace curation {

enum class ScorerKind { learned_estimator, avg_distance, target_ppl, delta_ppl };
enum class Direction { higher_is_closer, lower_is_closer };

std::string to_string(ScorerKind kind);
std::string to_string(Direction direction);
ScorerKind parse_scorer_kind(const std::string& name);
Direction parse_direction(const std::string& name);

/// The ranking direction each scorer uses.
Direction direction_of(ScorerKind kind) noexcept;

struct ScoreEntry {
    std::uint64_t id = 0;
    std::string dataset;
    double value = 0.0;
};

struct ScoreTable {
    ScorerKind scorer = ScorerKind::learned_estimator;
    Direction direction = Direction::higher_is_closer;
    std::vector<ScoreEntry> entries;

    [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
};

/// True when `a` ranks strictly before `b`: better value in `direction`, then
/// smaller id.
inline bool ranks_before(Direction direction, const ScoreEntry& a, const ScoreEntry& b) noexcept {
    if (a.value != b.value) {
        return direction == Direction::higher_is_closer ? a.value > b.value : a.value < b.value;
    }
    return a.id < b.id;
}

/// Throws `non_finite` on the first NaN or infinite value.
void check_finite(const ScoreTable& table);

}  // namespace curation
