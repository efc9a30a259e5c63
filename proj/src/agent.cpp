#include "errl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace errl::agent {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::domain_error("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(StoredTrajectory item) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(item));
}

std::vector<const StoredTrajectory*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (n > items_.size()) throw std::domain_error("ReplayBuffer::sample: not enough entries");
  std::vector<std::size_t> index(items_.size());
  std::iota(index.begin(), index.end(), std::size_t{0});
  // partial Fisher-Yates
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, index.size() - 1);
    std::swap(index[i], index[pick(rng)]);
  }
  std::vector<const StoredTrajectory*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[index[i]]);
  return out;
}

PairingList pair_batch(std::size_t n, Rng& rng) {
  if (n < 2) throw std::domain_error("pair_batch: need at least two trajectories");
  PairingList y(n);
  std::iota(y.begin(), y.end(), std::size_t{0});
  auto has_fixed_point = [&] {
    for (std::size_t i = 0; i < n; ++i)
      if (y[i] == i) return true;
    return false;
  };
  do {
    std::shuffle(y.begin(), y.end(), rng);
  } while (has_fixed_point());
  return y;
}

double trajectory_elo(const Eigen::VectorXd& g, double gamma) {
  if (g.size() == 0) throw std::domain_error("trajectory_elo: empty trajectory");
  const Eigen::Index k = g.size();
  // sum_{t=1..k} G_t - gamma sum_{t=2..k} G_t; the step past the end contributes nothing
  return g.sum() - gamma * g.tail(k - 1).sum();
}

CriticTargetBatch compute_shifts(std::span<const StoredTrajectory* const> batch,
                                 const Mlp<float>& critic, const ShiftParams& params,
                                 const PairingList& pairing) {
  const std::size_t n = batch.size();
  if (n < 2) throw std::domain_error("compute_shifts: batch needs at least two trajectories");
  if (pairing.size() != n) throw std::domain_error("compute_shifts: pairing size mismatch");

  CriticTargetBatch out;
  out.shifts.resize(n);
  double total_length = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const env::Trajectory& t = batch[i]->trajectory;
    if (t.length() == 0) throw std::domain_error("compute_shifts: empty trajectory in batch");
    out.shifts[i].estimates = taken_action_values(critic, t);
    out.shifts[i].rating = trajectory_elo(out.shifts[i].estimates, params.gamma);
    total_length += static_cast<double>(t.length());
  }
  out.effective_scale = elo::effective_scale(params.eta, total_length / static_cast<double>(n));
  const elo::EloParams elo_params =
      elo::EloParams::from_scale(out.effective_scale, params.k_factor_ratio);
  out.k_factor = elo_params.k_factor;

  for (std::size_t i = 0; i < n; ++i) {
    TrajectoryShift& s = out.shifts[i];
    const std::size_t j = pairing[i];
    if (j >= n || j == i) throw std::domain_error("compute_shifts: invalid pairing");
    s.partner = j;
    s.partner_rating = out.shifts[j].rating;
    s.expected = elo::expected_score(s.rating, s.partner_rating, out.effective_scale);
    s.outcome = preference::judge(batch[i]->summary, batch[j]->summary, params.mode);
    const elo::MatchScore score = preference::outcome_score(s.outcome).first;
    s.score = score.value();
    s.delta = elo::redistribute_delta(score, s.expected, batch[i]->trajectory.length(), elo_params);
  }
  return out;
}

template <typename Scalar>
LossAndGradient<Scalar> critic_regression(const Mlp<Scalar>& critic,
                                          std::span<const env::Trajectory* const> trajectories,
                                          std::span<const Eigen::VectorXd> targets,
                                          std::span<const Eigen::VectorXd> weights) {
  if (trajectories.size() != targets.size() ||
      (!weights.empty() && weights.size() != targets.size())) {
    throw std::domain_error("critic_regression: targets do not match trajectories");
  }
  LossAndGradient<Scalar> out{0.0, Vec<Scalar>::Zero(critic.parameter_count())};
  Tape<Scalar> tape;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const env::Trajectory& t = *trajectories[i];
    const Mat<Scalar> q = forward(critic, t.states, &tape);
    Mat<Scalar> upstream = Mat<Scalar>::Zero(q.rows(), q.cols());
    for (Eigen::Index s = 0; s < q.cols(); ++s) {
      const double residual = static_cast<double>(q(t.actions[s], s)) - targets[i](s);
      const double w = weights.empty() ? 1.0 : weights[i](s);
      out.loss += w * residual * residual;
      upstream(t.actions[s], s) = static_cast<Scalar>(2.0 * w * residual);
    }
    out.gradient += backward(critic, tape, upstream);
  }
  return out;
}

double critic_update(Mlp<float>& critic, std::span<const StoredTrajectory* const> batch,
                     const CriticTargetBatch& targets, Adam<float>& opt, int steps,
                     std::span<const Eigen::VectorXd> weights) {
  if (batch.size() != targets.shifts.size()) {
    throw std::domain_error("critic_update: targets do not match batch");
  }
  if (steps < 1) throw std::domain_error("critic_update: steps must be positive");
  std::vector<const env::Trajectory*> trajectories;
  std::vector<Eigen::VectorXd> frozen;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const TrajectoryShift& s = targets.shifts[i];
    if (!std::isfinite(s.delta) || !s.estimates.allFinite()) {
      throw std::domain_error("critic_update: non-finite target");
    }
    trajectories.push_back(&batch[i]->trajectory);
    frozen.push_back(s.estimates.array() + s.delta);
  }
  double first_loss = 0.0;
  for (int step = 0; step < steps; ++step) {
    const LossAndGradient<float> lg = critic_regression<float>(critic, trajectories, frozen, weights);
    if (!std::isfinite(lg.loss)) throw std::domain_error("critic_update: non-finite loss");
    if (step == 0) first_loss = lg.loss;
    adam_step(opt, critic.parameters(), lg.gradient);
  }
  return first_loss;
}

Eigen::VectorXd inverse_probability_weights(const Eigen::VectorXd& probs, double cap) {
  return probs.cwiseMax(1e-12).cwiseInverse().cwiseMin(cap);
}

Eigen::VectorXd taken_action_probs(const Mlp<float>& actor, const env::Trajectory& t) {
  return action_log_probs(actor, t.states, t.actions).array().exp();
}

template <typename Scalar>
LossAndGradient<Scalar> clipped_policy_loss(const Mlp<Scalar>& actor, const PolicySamples& s,
                                            double clip, double entropy_coef) {
  const Eigen::Index n = s.states.cols();
  if (n == 0) throw std::domain_error("clipped_policy_loss: empty batch");
  if (static_cast<Eigen::Index>(s.actions.size()) != n || s.advantages.size() != n ||
      s.old_log_probs.size() != n) {
    throw std::domain_error("clipped_policy_loss: sample arrays disagree in length");
  }
  Tape<Scalar> tape;
  const Mat<Scalar> logits = forward(actor, s.states, &tape);
  const Mat<Scalar> probs = softmax_columns(logits);
  Mat<Scalar> upstream(logits.rows(), n);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const int a = s.actions[j];
    Eigen::VectorXd p = probs.col(j).template cast<double>();
    Eigen::VectorXd logp(p.size());
    {
      const Eigen::VectorXd z = logits.col(j).template cast<double>();
      const double m = z.maxCoeff();
      const double lse = m + std::log((z.array() - m).exp().sum());
      logp = z.array() - lse;
    }
    const double ratio = std::exp(logp(a) - s.old_log_probs(j));
    const double adv = s.advantages(j);
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv;
    const double entropy = -(p.array() * logp.array()).sum();
    loss += (-std::min(unclipped, clipped) - entropy_coef * entropy) * inv_n;

    Eigen::VectorXd g = Eigen::VectorXd::Zero(p.size());
    if (unclipped <= clipped) {  // the ratio term is the active branch
      g = -adv * ratio * (-p);
      g(a) += -adv * ratio;
    }
    // d(-c H)/dz_k = c p_k (log p_k + H)
    g.array() += entropy_coef * p.array() * (logp.array() + entropy);
    upstream.col(j) = (g * inv_n).template cast<Scalar>();
  }
  return {loss, backward(actor, tape, upstream)};
}

PolicySamples stack_samples(std::span<const env::Trajectory* const> trajectories) {
  PolicySamples s;
  Eigen::Index total = 0;
  for (const env::Trajectory* t : trajectories) total += static_cast<Eigen::Index>(t->length());
  if (trajectories.empty()) return s;
  s.states.resize(trajectories.front()->states.rows(), total);
  s.actions.reserve(static_cast<std::size_t>(total));
  Eigen::Index col = 0;
  for (const env::Trajectory* t : trajectories) {
    s.states.middleCols(col, t->states.cols()) = t->states;
    col += t->states.cols();
    s.actions.insert(s.actions.end(), t->actions.begin(), t->actions.end());
  }
  return s;
}

Eigen::VectorXd action_log_probs(const Mlp<float>& actor, const Mat<float>& states,
                                 const std::vector<int>& actions) {
  const Mat<float> logits = forward(actor, states);
  Eigen::VectorXd out(logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const Eigen::VectorXd z = logits.col(j).cast<double>();
    const double m = z.maxCoeff();
    out(j) = z(actions[j]) - (m + std::log((z.array() - m).exp().sum()));
  }
  return out;
}

Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& advantages) {
  if (advantages.size() == 0) return advantages;
  const double mean = advantages.mean();
  const Eigen::ArrayXd centered = advantages.array() - mean;
  const double sd = std::sqrt(centered.square().mean());
  // Spread at rounding level carries no preference; scaling it up would be noise.
  if (sd < 1e-10) return Eigen::VectorXd::Zero(advantages.size());
  return centered / sd;
}

Eigen::VectorXd critic_advantages(const Mlp<float>& actor, const Mlp<float>& critic,
                                  const Mat<float>& states, const std::vector<int>& actions) {
  const Mat<float> probs = softmax_columns(forward(actor, states));
  const Mat<float> q = forward(critic, states);
  Eigen::VectorXd out(states.cols());
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    const Eigen::VectorXd pj = probs.col(j).cast<double>();
    const double baseline = pj.dot(q.col(j).cast<double>()) / pj.sum();
    out(j) = static_cast<double>(q(actions[j], j)) - baseline;
  }
  return out;
}

PolicyUpdateStats policy_update(Mlp<float>& actor, PolicySamples samples, const PpoParams& params,
                                Adam<float>& opt) {
  PolicyUpdateStats stats;
  if (!samples.advantages.allFinite()) {
    stats.skipped = true;
    return stats;
  }
  samples.old_log_probs = action_log_probs(actor, samples.states, samples.actions);
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    const LossAndGradient<float> lg =
        clipped_policy_loss<float>(actor, samples, params.clip, params.entropy_coef);
    if (epoch == 0) stats.loss = lg.loss;
    adam_step(opt, actor.parameters(), lg.gradient);
  }
  const Mat<float> probs = softmax_columns(forward(actor, samples.states));
  stats.entropy = -(probs.array() * (probs.array() + 1e-12f).log()).colwise().sum().mean();
  return stats;
}

PolicyUpdateStats actor_update(Mlp<float>& actor, const Mlp<float>& critic,
                               std::span<const StoredTrajectory* const> batch,
                               const PpoParams& params, Adam<float>& opt) {
  if (batch.empty()) throw std::domain_error("actor_update: empty batch");
  std::vector<const env::Trajectory*> trajectories;
  for (const StoredTrajectory* s : batch) trajectories.push_back(&s->trajectory);
  PolicySamples samples = stack_samples(trajectories);
  samples.advantages = normalize_advantages(
      critic_advantages(actor, critic, samples.states, samples.actions));
  return policy_update(actor, std::move(samples), params, opt);
}

namespace {

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

template <typename Scalar>
double taken_sum(const Mlp<Scalar>& net, const env::Trajectory& t, Tape<Scalar>& tape,
                 Mat<Scalar>& out) {
  out = forward(net, t.states, &tape);
  double sum = 0.0;
  for (Eigen::Index s = 0; s < out.cols(); ++s) sum += static_cast<double>(out(t.actions[s], s));
  return sum;
}

template <typename Scalar>
Vec<Scalar> taken_gradient(const Mlp<Scalar>& net, const env::Trajectory& t,
                           const Tape<Scalar>& tape, double scale) {
  Mat<Scalar> upstream = Mat<Scalar>::Zero(net.output_size(), t.states.cols());
  for (Eigen::Index s = 0; s < upstream.cols(); ++s)
    upstream(t.actions[s], s) = static_cast<Scalar>(scale);
  return backward(net, tape, upstream);
}

}  // namespace

template <typename Scalar>
LossAndGradient<Scalar> pbrl_loss(const Mlp<Scalar>& reward_net, const env::Trajectory& a,
                                  const env::Trajectory& b, preference::Outcome outcome) {
  Tape<Scalar> tape_a, tape_b;
  Mat<Scalar> out_a, out_b;
  const double sum_a = taken_sum(reward_net, a, tape_a, out_a);
  const double sum_b = taken_sum(reward_net, b, tape_b, out_b);
  const double mu_a = preference::outcome_score(outcome).first.value();
  const double mu_b = 1.0 - mu_a;
  // P(a > b) = exp(sum_a) / (exp(sum_a) + exp(sum_b)) = sigmoid(sum_a - sum_b)
  const double diff = sum_a - sum_b;
  const double loss = -(mu_a * log_sigmoid(diff) + mu_b * log_sigmoid(-diff));
  const double p_a = std::exp(log_sigmoid(diff));
  const double d_diff = p_a - mu_a;
  Vec<Scalar> grad = taken_gradient(reward_net, a, tape_a, d_diff);
  grad += taken_gradient(reward_net, b, tape_b, -d_diff);
  return {loss, std::move(grad)};
}

template <typename Scalar>
LossAndGradient<Scalar> lsq_decomposition_loss(const Mlp<Scalar>& reward_net,
                                               const env::Trajectory& t, double hidden_return) {
  Tape<Scalar> tape;
  Mat<Scalar> out;
  const double residual = hidden_return - taken_sum(reward_net, t, tape, out);
  return {residual * residual, taken_gradient(reward_net, t, tape, -2.0 * residual)};
}

Eigen::VectorXd discounted_returns(const Eigen::VectorXd& rewards, double gamma) {
  Eigen::VectorXd out(rewards.size());
  double running = 0.0;
  for (Eigen::Index t = rewards.size(); t-- > 0;) {
    running = rewards(t) + gamma * running;
    out(t) = running;
  }
  return out;
}

template LossAndGradient<float> critic_regression<float>(
    const Mlp<float>&, std::span<const env::Trajectory* const>, std::span<const Eigen::VectorXd>,
    std::span<const Eigen::VectorXd>);
template LossAndGradient<double> critic_regression<double>(
    const Mlp<double>&, std::span<const env::Trajectory* const>, std::span<const Eigen::VectorXd>,
    std::span<const Eigen::VectorXd>);
template LossAndGradient<float> clipped_policy_loss<float>(const Mlp<float>&, const PolicySamples&,
                                                           double, double);
template LossAndGradient<double> clipped_policy_loss<double>(const Mlp<double>&,
                                                             const PolicySamples&, double, double);
template LossAndGradient<float> pbrl_loss<float>(const Mlp<float>&, const env::Trajectory&,
                                                 const env::Trajectory&, preference::Outcome);
template LossAndGradient<double> pbrl_loss<double>(const Mlp<double>&, const env::Trajectory&,
                                                   const env::Trajectory&, preference::Outcome);
template LossAndGradient<float> lsq_decomposition_loss<float>(const Mlp<float>&,
                                                              const env::Trajectory&, double);
template LossAndGradient<double> lsq_decomposition_loss<double>(const Mlp<double>&,
                                                                const env::Trajectory&, double);

}  // namespace errl::agent
