#ifndef ERRL_STATS_HPP
#define ERRL_STATS_HPP

#include <span>

namespace errl::stats {

struct MeanCi {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> values);

/// mean +- 1.96 * sd / sqrt(n). A single value gives a zero-width interval.
/// Throws std::domain_error on empty input.
MeanCi mean_ci95(std::span<const double> values);

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  /// P(T >= t) under equal means: small when mean(a) > mean(b).
  double p_greater = 1.0;
};

/// Unequal-variance two-sample t-test of mean(a) > mean(b). Needs two values per side.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace errl::stats

#endif  // ERRL_STATS_HPP
