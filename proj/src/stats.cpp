#include "errl/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace errl::stats {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double x : values) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

MeanCi mean_ci95(std::span<const double> values) {
  if (values.empty()) throw std::domain_error("mean_ci95: no values");
  const double m = mean_of(values);
  const double half = 1.96 * sample_sd(values) / std::sqrt(static_cast<double>(values.size()));
  return {m, m - half, m + half};
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::domain_error("welch_t_test: need two values per side");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = std::pow(sample_sd(a), 2) / na;
  const double vb = std::pow(sample_sd(b), 2) / nb;
  const double diff = mean_of(a) - mean_of(b);
  WelchResult r;
  if (va + vb == 0.0) {
    // Both samples constant: the difference is exact.
    r.t = diff > 0 ? std::numeric_limits<double>::infinity()
                   : (diff < 0 ? -std::numeric_limits<double>::infinity() : 0.0);
    r.dof = na + nb - 2.0;
    r.p_greater = diff > 0 ? 0.0 : (diff < 0 ? 1.0 : 0.5);
    return r;
  }
  r.t = diff / std::sqrt(va + vb);
  r.dof = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t dist(r.dof);
  r.p_greater = boost::math::cdf(boost::math::complement(dist, r.t));
  return r;
}

}  // namespace errl::stats
