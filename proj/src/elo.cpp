#include "errl/elo.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace errl::elo {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::domain_error(std::string(what) + " must be finite");
  }
}

void require_probability(double e) {
  if (!(e > 0.0 && e < 1.0)) {
    throw std::domain_error("expected score must lie in (0, 1)");
  }
}

}  // namespace

MatchScore MatchScore::from_value(double value) {
  if (value == 1.0) return win();
  if (value == 0.5) return draw();
  if (value == 0.0) return loss();
  throw std::domain_error("match score must be 0, 0.5 or 1");
}

EloParams EloParams::from_scale(double scale, double k_factor_ratio) {
  EloParams p{scale, k_factor_ratio * scale};
  p.validate();
  return p;
}

void EloParams::validate() const {
  require_finite(scale, "scale");
  require_finite(k_factor, "k_factor");
  if (scale <= 0.0) throw std::domain_error("scale must be positive");
  if (k_factor <= 0.0) throw std::domain_error("k_factor must be positive");
}

double expected_score(Rating r_a, Rating r_b, double scale) {
  require_finite(r_a, "rating");
  require_finite(r_b, "rating");
  require_finite(scale, "scale");
  if (scale <= 0.0) throw std::domain_error("scale must be positive");
  return 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / scale));
}

Rating elo_update(Rating r, MatchScore s, double expected, const EloParams& params) {
  require_finite(r, "rating");
  require_probability(expected);
  params.validate();
  return r + params.k_factor * (s.value() - expected);
}

double redistribute_delta(MatchScore s, double expected, std::size_t length,
                          const EloParams& params) {
  if (length == 0) throw std::domain_error("redistribute_delta: length must be >= 1");
  // saturated ratings can round the expectation to exactly 0 or 1
  if (!(expected >= 0.0 && expected <= 1.0)) {
    throw std::domain_error("expected score must lie in [0, 1]");
  }
  params.validate();
  return params.k_factor * (s.value() - expected) / static_cast<double>(length);
}

double effective_scale(double eta, double mean_length) {
  require_finite(eta, "eta");
  require_finite(mean_length, "mean_length");
  if (eta <= 0.0 || mean_length <= 0.0) {
    throw std::domain_error("effective_scale: inputs must be positive");
  }
  return eta * mean_length;
}

}  // namespace errl::elo
