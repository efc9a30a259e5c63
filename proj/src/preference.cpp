#include "errl/preference.hpp"

#include <string>

namespace errl::preference {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::normal: return "normal";
    case Mode::reward_only: return "reward_only";
    case Mode::ball_control: return "ball_control";
    case Mode::aggressive: return "aggressive";
    case Mode::sudden_death: return "sudden_death";
    case Mode::length_first: return "length_first";
    case Mode::score_plus_length: return "score_plus_length";
  }
  return "unknown";
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::a_wins: return "A_wins";
    case Outcome::b_wins: return "B_wins";
    case Outcome::draw: return "Draw";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : kAllModes) {
    if (to_string(m) == name) return m;
  }
  throw env::ConfigError("unknown preference mode '" + std::string(name) + "'");
}

namespace {

// Larger value wins; ties fall through.
template <typename T>
bool decide(T a, T b, Outcome& out) {
  if (a > b) {
    out = Outcome::a_wins;
    return true;
  }
  if (a < b) {
    out = Outcome::b_wins;
    return true;
  }
  return false;
}

Outcome by_return_then(const env::TrajectorySummary& a, const env::TrajectorySummary& b,
                       Mode mode) {
  Outcome out = Outcome::draw;
  if (decide(a.hidden_return, b.hidden_return, out)) return out;
  const double r = a.hidden_return;  // equal on both sides from here on
  switch (mode) {
    case Mode::reward_only:
      return Outcome::draw;
    case Mode::ball_control:
      decide(a.length, b.length, out);
      return out;
    case Mode::aggressive:
      if (r > 0) {
        decide(b.length, a.length, out);  // shorter wins
      } else if (r < 0) {
        decide(a.length, b.length, out);
      }
      return out;
    default:  // normal, sudden_death
      if (r > 0) return Outcome::draw;
      decide(a.length, b.length, out);
      return out;
  }
}

}  // namespace

Outcome judge(const env::TrajectorySummary& a, const env::TrajectorySummary& b, Mode mode) {
  if (a.env != b.env) throw std::domain_error("judge: summaries from different environments");
  Outcome out = Outcome::draw;
  switch (mode) {
    case Mode::length_first:
      if (decide(a.length, b.length, out)) return out;
      decide(a.hidden_return, b.hidden_return, out);
      return out;
    case Mode::score_plus_length:
      // raw score and step count share one scale, as the rule prescribes
      decide(a.hidden_return + static_cast<double>(a.length),
             b.hidden_return + static_cast<double>(b.length), out);
      return out;
    default:
      return by_return_then(a, b, mode);
  }
}

std::pair<elo::MatchScore, elo::MatchScore> outcome_score(Outcome outcome) {
  switch (outcome) {
    case Outcome::a_wins: return {elo::MatchScore::win(), elo::MatchScore::loss()};
    case Outcome::b_wins: return {elo::MatchScore::loss(), elo::MatchScore::win()};
    case Outcome::draw: break;
  }
  return {elo::MatchScore::draw(), elo::MatchScore::draw()};
}

}  // namespace errl::preference
