// Random instances and finite-difference oracles shared by the unit and acceptance tests.
#ifndef ERRL_TESTS_ORACLES_HPP
#define ERRL_TESTS_ORACLES_HPP

#include <cmath>
#include <random>
#include <vector>

#include "errl/agent.hpp"
#include "errl/gradient_check.hpp"
#include "errl/mlp.hpp"

namespace oracles {

using errl::Mat;
using errl::Mlp;
using Rng = std::mt19937_64;

inline errl::env::Trajectory random_trajectory(Rng& rng, int obs, int actions, int length) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::uniform_int_distribution<int> a(0, actions - 1);
  errl::env::Trajectory t;
  t.states.resize(obs, length);
  for (Eigen::Index j = 0; j < t.states.cols(); ++j)
    for (Eigen::Index i = 0; i < t.states.rows(); ++i) t.states(i, j) = u(rng);
  for (int s = 0; s < length; ++s) {
    t.actions.push_back(a(rng));
    t.events.push_back(errl::env::Event::none);
  }
  return t;
}

/// Random weights and biases so that no unit sits on a symmetric zero.
inline Mlp<double> random_net(Rng& rng, std::vector<int> sizes) {
  Mlp<double> net(std::move(sizes));
  std::normal_distribution<double> g(0.0, 0.5);
  for (Eigen::Index i = 0; i < net.parameter_count(); ++i) net.parameters()(i) = g(rng);
  return net;
}

/// True when some hidden pre-activation lies within `margin` of the ReLU kink.
template <typename Derived>
bool near_kink(const Mlp<double>& net, const Eigen::MatrixBase<Derived>& inputs, double margin = 1e-3) {
  Mat<double> a = inputs.template cast<double>();
  for (std::size_t l = 0; l + 1 < net.layer_count(); ++l) {
    Mat<double> z = net.weight(l) * a;
    z.colwise() += net.bias(l);
    if ((z.array().abs() < margin).any()) return true;
    a = z.cwiseMax(0.0);
  }
  return false;
}

/// Evaluates `loss(net)` with the parameter vector replaced.
template <typename F>
std::function<double(const Eigen::VectorXd&)> by_params(Mlp<double> net, F loss) {
  return [net, loss](const Eigen::VectorXd& p) mutable {
    net.parameters() = p;
    return loss(net);
  };
}

/// A random small net with trajectories that keep clear of ReLU kinks.
struct Instance {
  Mlp<double> net;
  std::vector<errl::env::Trajectory> trajectories;
};

inline Instance random_instance(Rng& rng, int obs, int outputs, int count) {
  std::uniform_int_distribution<int> len(1, 6);
  std::uniform_int_distribution<int> hidden(2, 6);
  for (;;) {
    Instance inst{random_net(rng, {obs, hidden(rng), hidden(rng), outputs}), {}};
    bool ok = true;
    for (int i = 0; i < count && ok; ++i) {
      inst.trajectories.push_back(random_trajectory(rng, obs, outputs, len(rng)));
      ok = !near_kink(inst.net, inst.trajectories.back().states);
    }
    if (ok) return inst;
  }
}

inline double pbrl_gradient_error(Rng& rng) {
  const Instance inst = random_instance(rng, 3, 2, 2);
  const auto outcome = static_cast<errl::preference::Outcome>(std::uniform_int_distribution<int>(0, 2)(rng));
  const auto& a = inst.trajectories[0];
  const auto& b = inst.trajectories[1];
  const auto lg = errl::agent::pbrl_loss(inst.net, a, b, outcome);
  auto f = by_params(inst.net, [&](const Mlp<double>& n) { return errl::agent::pbrl_loss(n, a, b, outcome).loss; });
  return errl::finite_difference_check(f, inst.net.parameters(), lg.gradient, 1 << 20, rng);
}

inline double lsq_gradient_error(Rng& rng) {
  const Instance inst = random_instance(rng, 3, 2, 1);
  const double ret = std::uniform_real_distribution<double>(-5, 5)(rng);
  const auto& t = inst.trajectories[0];
  const auto lg = errl::agent::lsq_decomposition_loss(inst.net, t, ret);
  auto f = by_params(inst.net, [&](const Mlp<double>& n) { return errl::agent::lsq_decomposition_loss(n, t, ret).loss; });
  return errl::finite_difference_check(f, inst.net.parameters(), lg.gradient, 1 << 20, rng);
}

inline double critic_gradient_error(Rng& rng, bool weighted) {
  const Instance inst = random_instance(rng, 3, 3, 3);
  std::vector<const errl::env::Trajectory*> ts;
  std::vector<Eigen::VectorXd> targets, weights;
  std::uniform_real_distribution<double> u(-1, 1), w(1, 20);
  for (const auto& t : inst.trajectories) {
    ts.push_back(&t);
    Eigen::VectorXd target(static_cast<Eigen::Index>(t.length()));
    Eigen::VectorXd weight(target.size());
    for (Eigen::Index i = 0; i < target.size(); ++i) {
      target(i) = u(rng);
      weight(i) = w(rng);
    }
    targets.push_back(target);
    weights.push_back(weight);
  }
  const std::span<const Eigen::VectorXd> wspan =
      weighted ? std::span<const Eigen::VectorXd>(weights) : std::span<const Eigen::VectorXd>();
  const auto lg = errl::agent::critic_regression<double>(inst.net, ts, targets, wspan);
  auto f = by_params(inst.net, [&](const Mlp<double>& n) {
    return errl::agent::critic_regression<double>(n, ts, targets, wspan).loss;
  });
  return errl::finite_difference_check(f, inst.net.parameters(), lg.gradient, 1 << 20, rng);
}

/// Samples whose probability ratio stays clear of the clip boundaries.
inline double policy_gradient_error(Rng& rng) {
  const double clip = 0.2;
  const double entropy_coef = std::uniform_real_distribution<double>(0.0, 0.1)(rng);
  const Instance inst = random_instance(rng, 3, 3, 2);
  errl::agent::PolicySamples s;
  const int n = static_cast<int>(inst.trajectories[0].length() + inst.trajectories[1].length());
  s.states.resize(3, n);
  int col = 0;
  for (const auto& t : inst.trajectories) {
    s.states.middleCols(col, t.states.cols()) = t.states;
    col += static_cast<int>(t.states.cols());
    s.actions.insert(s.actions.end(), t.actions.begin(), t.actions.end());
  }
  const Mat<double> logits = errl::forward(inst.net, s.states);
  s.old_log_probs.resize(n);
  s.advantages.resize(n);
  std::uniform_real_distribution<double> shift(-0.5, 0.5), adv(-2, 2);
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd z = logits.col(j);
    const double lse = z.maxCoeff() + std::log((z.array() - z.maxCoeff()).exp().sum());
    const double logp = z(s.actions[j]) - lse;
    double ratio = 0.0;
    do {
      s.old_log_probs(j) = logp + shift(rng);
      ratio = std::exp(logp - s.old_log_probs(j));
    } while (std::abs(ratio - (1 - clip)) < 1e-3 || std::abs(ratio - (1 + clip)) < 1e-3);
    s.advantages(j) = adv(rng);
  }
  const auto lg = errl::agent::clipped_policy_loss<double>(inst.net, s, clip, entropy_coef);
  auto f = by_params(inst.net, [&](const Mlp<double>& net) {
    return errl::agent::clipped_policy_loss<double>(net, s, clip, entropy_coef).loss;
  });
  return errl::finite_difference_check(f, inst.net.parameters(), lg.gradient, 1 << 20, rng);
}

inline double network_gradient_error(Rng& rng) {
  const Instance inst = random_instance(rng, 4, 2, 1);
  const auto& x = inst.trajectories[0].states;
  Mat<double> up(2, x.cols());
  std::uniform_real_distribution<double> u(-1, 1);
  for (Eigen::Index i = 0; i < up.size(); ++i) up(i) = u(rng);
  errl::Tape<double> tape;
  errl::forward(inst.net, x, &tape);
  const Eigen::VectorXd analytic = errl::backward(inst.net, tape, up);
  auto f = by_params(inst.net, [&](const Mlp<double>& n) {
    return (errl::forward(n, x).array() * up.array()).sum();
  });
  return errl::finite_difference_check(f, inst.net.parameters(), analytic, 1 << 20, rng);
}

}  // namespace oracles

#endif  // ERRL_TESTS_ORACLES_HPP
