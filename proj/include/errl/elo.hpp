#ifndef ERRL_ELO_HPP
#define ERRL_ELO_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include <Eigen/Core>

namespace errl::elo {

/// Ratings are unanchored reals. Only differences carry meaning.
using Rating = double;

/// Outcome of one match from the rated side's point of view: 1 win, 0.5 draw, 0 loss.
class MatchScore {
 public:
  static constexpr MatchScore win() { return MatchScore(1.0); }
  static constexpr MatchScore draw() { return MatchScore(0.5); }
  static constexpr MatchScore loss() { return MatchScore(0.0); }

  /// Throws std::domain_error unless value is exactly 0, 0.5 or 1.
  static MatchScore from_value(double value);

  constexpr double value() const { return value_; }
  constexpr MatchScore complement() const { return MatchScore(1.0 - value_); }

  friend constexpr bool operator==(MatchScore, MatchScore) = default;

 private:
  constexpr explicit MatchScore(double v) : value_(v) {}
  double value_;
};

/// Logistic scale of the win-probability curve and the per-match update size.
struct EloParams {
  double scale = 400.0;
  double k_factor = 16.0;

  /// k_factor = ratio * scale; ratio 0.04 reproduces the classic 400/16 pairing.
  static EloParams from_scale(double scale, double k_factor_ratio = 0.04);
  void validate() const;
};

/// Probability that a player rated r_a beats one rated r_b: 1 / (1 + 10^((r_b - r_a) / scale)).
double expected_score(Rating r_a, Rating r_b, double scale);

/// r + K (s - e).
Rating elo_update(Rating r, MatchScore s, double expected, const EloParams& params);

/// Uniform per-step shift K (s - e) / length that spreads one rating update over a trajectory.
double redistribute_delta(MatchScore s, double expected, std::size_t length,
                          const EloParams& params);

/// eta * mean trajectory length, the logistic scale actually used when rating trajectories.
double effective_scale(double eta, double mean_length);

/// sum_t ln(1 + e^{delta_t}); minimized under a fixed sum by the uniform split.
template <typename Derived>
double redistribution_objective(const Eigen::DenseBase<Derived>& deltas) {
  if (deltas.size() == 0) {
    throw std::domain_error("redistribution_objective: empty delta sequence");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < deltas.size(); ++i) {
    const double d = static_cast<double>(deltas(i));
    // softplus, stable for large |d|
    total += d > 0.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d));
  }
  return total;
}

}  // namespace errl::elo

#endif  // ERRL_ELO_HPP
