#ifndef ERRL_AGENT_HPP
#define ERRL_AGENT_HPP

#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include "errl/adam.hpp"
#include "errl/elo.hpp"
#include "errl/env.hpp"
#include "errl/mlp.hpp"
#include "errl/preference.hpp"

namespace errl::agent {

using Rng = std::mt19937_64;

struct StoredTrajectory {
  std::uint64_t id = 0;  // global episode index within a run
  env::Trajectory trajectory;
  env::TrajectorySummary summary;
  /// Probability the collecting policy gave each taken action; empty when unknown.
  Eigen::VectorXd behavior_probs;
};

/// Bounded FIFO of finished episodes.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(StoredTrajectory item);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  /// Index 0 is the oldest entry.
  const StoredTrajectory& operator[](std::size_t i) const { return items_[i]; }

  /// n distinct entries drawn uniformly; throws std::domain_error if n > size().
  std::vector<const StoredTrajectory*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<StoredTrajectory> items_;
};

/// partner[i] is the opponent of batch member i; never i itself.
using PairingList = std::vector<std::size_t>;

/// Reshuffles until the permutation has no fixed point. Throws for n < 2.
PairingList pair_batch(std::size_t n, Rng& rng);

/// G(s_t, a_t) along the trajectory, for the actions actually taken.
template <typename Scalar>
Eigen::VectorXd taken_action_values(const Mlp<Scalar>& critic, const env::Trajectory& t) {
  const Mat<Scalar> q = forward(critic, t.states);
  Eigen::VectorXd out(static_cast<Eigen::Index>(t.length()));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = static_cast<double>(q(t.actions[i], i));
  return out;
}

/// sum_t [G_t - gamma G_{t+1}] with the value past the final step taken as zero.
double trajectory_elo(const Eigen::VectorXd& taken_values, double gamma);

template <typename Scalar>
double trajectory_elo(const Mlp<Scalar>& critic, const env::Trajectory& t, double gamma) {
  if (t.length() == 0) throw std::domain_error("trajectory_elo: empty trajectory");
  return trajectory_elo(taken_action_values(critic, t), gamma);
}

struct ShiftParams {
  double eta = 0.01;
  double k_factor_ratio = 0.04;
  double gamma = 0.99;
  preference::Mode mode = preference::Mode::normal;
};

struct TrajectoryShift {
  std::size_t partner = 0;
  double rating = 0.0;
  double partner_rating = 0.0;
  double expected = 0.5;
  double score = 0.5;
  double delta = 0.0;  // applied to every step of the trajectory
  preference::Outcome outcome = preference::Outcome::draw;
  Eigen::VectorXd estimates;  // G(s_t, a_t) before the update
};

struct CriticTargetBatch {
  double effective_scale = 0.0;
  double k_factor = 0.0;
  std::vector<TrajectoryShift> shifts;
};

/// Rates every batch member against its partner and spreads the rating change uniformly
/// over its steps. The logistic scale is eta times the batch's mean length and the
/// K-factor is k_factor_ratio times that scale.
CriticTargetBatch compute_shifts(std::span<const StoredTrajectory* const> batch,
                                 const Mlp<float>& critic, const ShiftParams& params,
                                 const PairingList& pairing);

template <typename Scalar>
struct LossAndGradient {
  double loss = 0.0;
  Vec<Scalar> gradient;
};

/// sum over all steps of w_t (G(s_t, a_t) - target_t)^2, targets frozen. Empty weights
/// mean w = 1 everywhere.
template <typename Scalar>
LossAndGradient<Scalar> critic_regression(const Mlp<Scalar>& critic,
                                          std::span<const env::Trajectory* const> trajectories,
                                          std::span<const Eigen::VectorXd> targets,
                                          std::span<const Eigen::VectorXd> weights = {});

/// min(cap, 1 / p) per step.
Eigen::VectorXd inverse_probability_weights(const Eigen::VectorXd& probs, double cap);

/// `steps` optimizer steps of the critic toward the frozen targets G + delta, with optional
/// per-step weights (one vector per batch member). Returns the loss before the first step,
/// which is the sum of squared shifts when unweighted. Throws std::domain_error on a
/// non-finite loss.
double critic_update(Mlp<float>& critic, std::span<const StoredTrajectory* const> batch,
                     const CriticTargetBatch& targets, Adam<float>& opt, int steps = 1,
                     std::span<const Eigen::VectorXd> weights = {});

struct PolicySamples {
  Mat<float> states;             // observation x samples
  std::vector<int> actions;
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;
};

struct PpoParams {
  double clip = 0.2;
  double entropy_coef = 0.01;
  int epochs = 4;
};

/// Clipped-ratio surrogate, negated and averaged, minus the entropy bonus.
template <typename Scalar>
LossAndGradient<Scalar> clipped_policy_loss(const Mlp<Scalar>& actor, const PolicySamples& s,
                                            double clip, double entropy_coef);

/// Stacks the states and actions of a batch into one sample set (advantages left empty).
PolicySamples stack_samples(std::span<const env::Trajectory* const> trajectories);

/// log pi(a_j | s_j) for every sample.
Eigen::VectorXd action_log_probs(const Mlp<float>& actor, const Mat<float>& states,
                                 const std::vector<int>& actions);

/// (x - mean) / std over the batch; all zeros when the spread is at rounding level.
Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& advantages);

/// G(s, a) - sum_a' pi(a'|s) G(s, a') for each sample's taken action.
Eigen::VectorXd critic_advantages(const Mlp<float>& actor, const Mlp<float>& critic,
                                  const Mat<float>& states, const std::vector<int>& actions);

struct PolicyUpdateStats {
  double loss = 0.0;
  double entropy = 0.0;
  bool skipped = false;
};

/// Runs `epochs` clipped policy-gradient steps on pre-computed, normalized advantages.
PolicyUpdateStats policy_update(Mlp<float>& actor, PolicySamples samples, const PpoParams& params,
                                Adam<float>& opt);

/// pi(a_t | s_t) under `actor` for the actions taken in `t`.
Eigen::VectorXd taken_action_probs(const Mlp<float>& actor, const env::Trajectory& t);

/// ERRL actor step: advantages from the critic, normalized over the batch.
PolicyUpdateStats actor_update(Mlp<float>& actor, const Mlp<float>& critic,
                               std::span<const StoredTrajectory* const> batch,
                               const PpoParams& params, Adam<float>& opt);

/// Cross-entropy of the softmax preference model over summed proxy rewards.
/// Draws contribute 0.5 / 0.5 targets.
template <typename Scalar>
LossAndGradient<Scalar> pbrl_loss(const Mlp<Scalar>& reward_net, const env::Trajectory& a,
                                  const env::Trajectory& b, preference::Outcome outcome);

/// (hidden_return - sum_t r(s_t, a_t))^2.
template <typename Scalar>
LossAndGradient<Scalar> lsq_decomposition_loss(const Mlp<Scalar>& reward_net,
                                               const env::Trajectory& t, double hidden_return);

/// Discounted reward-to-go.
Eigen::VectorXd discounted_returns(const Eigen::VectorXd& rewards, double gamma);

}  // namespace errl::agent

#endif  // ERRL_AGENT_HPP
