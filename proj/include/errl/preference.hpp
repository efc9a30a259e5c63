#ifndef ERRL_PREFERENCE_HPP
#define ERRL_PREFERENCE_HPP

#include <array>
#include <string_view>
#include <utility>

#include "errl/elo.hpp"
#include "errl/env.hpp"

namespace errl::preference {

enum class Outcome { a_wins, b_wins, draw };

/// Scripted judging rules. The first five follow the Pong expert settings; length_first and
/// score_plus_length are the invaders- and beam-rider-style rules applied to toy summaries.
enum class Mode {
  normal,
  reward_only,
  ball_control,
  aggressive,
  sudden_death,
  length_first,
  score_plus_length,
};

inline constexpr std::array<Mode, 7> kAllModes = {
    Mode::normal,     Mode::reward_only,  Mode::ball_control,      Mode::aggressive,
    Mode::sudden_death, Mode::length_first, Mode::score_plus_length};

std::string_view to_string(Mode mode);
std::string_view to_string(Outcome outcome);
/// Throws env::ConfigError for unknown names.
Mode parse_mode(std::string_view name);

/// Compares two summaries under the ordered criteria of `mode`.
/// Throws std::domain_error when the summaries come from different environments.
Outcome judge(const env::TrajectorySummary& a, const env::TrajectorySummary& b, Mode mode);

/// (S_A, S_B): a_wins -> (1, 0), b_wins -> (0, 1), draw -> (0.5, 0.5).
std::pair<elo::MatchScore, elo::MatchScore> outcome_score(Outcome outcome);

/// The same judgment seen from the other side.
constexpr Outcome mirror(Outcome o) {
  return o == Outcome::a_wins ? Outcome::b_wins : o == Outcome::b_wins ? Outcome::a_wins : o;
}

}  // namespace errl::preference

#endif  // ERRL_PREFERENCE_HPP
