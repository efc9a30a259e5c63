#ifndef ERRL_GRADIENT_CHECK_HPP
#define ERRL_GRADIENT_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Core>

namespace errl {

/// Compares an analytic gradient with central differences on `trials` random coordinates
/// and returns the largest relative error |a - n| / max(|a|, |n|, floor).
///
/// The floor keeps coordinates whose true derivative is zero from dividing rounding noise
/// by zero. Callers evaluating ReLU networks must keep inputs away from kinks.
inline double finite_difference_check(const std::function<double(const Eigen::VectorXd&)>& loss,
                                      const Eigen::VectorXd& params,
                                      const Eigen::VectorXd& analytic, int trials,
                                      std::mt19937_64& rng, double step = 1e-5,
                                      double floor = 1e-6) {
  std::uniform_int_distribution<Eigen::Index> pick(0, params.size() - 1);
  Eigen::VectorXd probe = params;
  double worst = 0.0;
  const bool exhaustive = trials >= params.size();
  const Eigen::Index count = exhaustive ? params.size() : trials;
  for (Eigen::Index n = 0; n < count; ++n) {
    const Eigen::Index i = exhaustive ? n : pick(rng);
    probe(i) = params(i) + step;
    const double up = loss(probe);
    probe(i) = params(i) - step;
    const double down = loss(probe);
    probe(i) = params(i);
    const double numeric = (up - down) / (2.0 * step);
    const double scale = std::max({std::abs(analytic(i)), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic(i) - numeric) / scale);
  }
  return worst;
}

}  // namespace errl

#endif  // ERRL_GRADIENT_CHECK_HPP
