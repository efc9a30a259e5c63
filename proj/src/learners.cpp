#include "errl/learners.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

#include "errl/checkpoint.hpp"

namespace errl::agent {

std::string_view to_string(Algo algo) {
  switch (algo) {
    case Algo::errl: return "errl";
    case Algo::pbrl: return "pbrl";
    case Algo::rrd_lsq: return "rrd_lsq";
    case Algo::ppo_sparse: return "ppo_sparse";
  }
  return "unknown";
}

Algo parse_algo(std::string_view name) {
  for (Algo a : {Algo::errl, Algo::pbrl, Algo::rrd_lsq, Algo::ppo_sparse}) {
    if (to_string(a) == name) return a;
  }
  throw env::ConfigError("unknown algo '" + std::string(name) + "'");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<int> network_shape(const AgentConfig& config, const env::EnvConfig& env, int outputs) {
  std::vector<int> sizes{env.observation_size()};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(outputs);
  return sizes;
}

Algorithm::Algorithm(const AgentConfig& config, const env::EnvConfig& env, std::uint64_t seed)
    : config_(config),
      actor_(make_mlp<float>(network_shape(config, env, env.action_count()), mix_seed(seed, 1))),
      actor_opt_(actor_.parameter_count(), config.lr) {}

void Algorithm::save(const std::filesystem::path& dir) const {
  save_checkpoint(dir / "actor.bin", actor_);
}

int Algorithm::sample_action(const env::Observation& obs, Rng& rng, double* prob) const {
  const Mat<float> probs = softmax_columns(forward(actor_, obs));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  Eigen::Index chosen = probs.rows() - 1;
  for (Eigen::Index a = 0; a < probs.rows(); ++a) {
    x -= static_cast<double>(probs(a, 0));
    if (x < 0.0) {
      chosen = a;
      break;
    }
  }
  if (prob) *prob = static_cast<double>(probs(chosen, 0));
  return static_cast<int>(chosen);
}

int Algorithm::greedy_action(const env::Observation& obs) const {
  const Mat<float> logits = forward(actor_, obs);
  Eigen::Index best = 0;
  logits.col(0).maxCoeff(&best);
  return static_cast<int>(best);
}

namespace {

std::vector<const env::Trajectory*> trajectories_of(std::span<const StoredTrajectory* const> batch) {
  std::vector<const env::Trajectory*> out;
  out.reserve(batch.size());
  for (const StoredTrajectory* s : batch) out.push_back(&s->trajectory);
  return out;
}

class Errl final : public Algorithm {
 public:
  Errl(const AgentConfig& config, const env::EnvConfig& env, std::uint64_t seed)
      : Algorithm(config, env, seed),
        critic_(make_mlp<float>(network_shape(config, env, env.action_count()), mix_seed(seed, 2))),
        critic_opt_(critic_.parameter_count(), config.critic_lr) {}

  UpdateReport update(std::span<const StoredTrajectory* const> batch, Rng& rng) override {
    UpdateReport report;
    const PairingList pairing = pair_batch(batch.size(), rng);
    const ShiftParams params{config_.eta, config_.k_factor_ratio, config_.gamma, config_.mode};
    try {
      const CriticTargetBatch targets = compute_shifts(batch, critic_, params, pairing);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        report.judgments.push_back({batch[i]->id, batch[pairing[i]]->id, targets.shifts[i].outcome});
      }
      std::vector<Eigen::VectorXd> weights;
      if (config_.importance_cap > 0.0) {
        for (const StoredTrajectory* s : batch) {
          const bool recorded = !config_.importance_from_current &&
                                s->behavior_probs.size() == static_cast<Eigen::Index>(s->trajectory.length());
          weights.push_back(inverse_probability_weights(
              recorded ? s->behavior_probs : taken_action_probs(actor_, s->trajectory),
              config_.importance_cap));
        }
      }
      report.critic_loss =
          critic_update(critic_, batch, targets, critic_opt_, config_.critic_steps, weights);
    } catch (const std::domain_error& e) {
      spdlog::warn("errl: skipping batch: {}", e.what());
      report.skipped = true;
      return report;
    }
    const PolicyUpdateStats stats = actor_update(actor_, critic_, batch, config_.ppo, actor_opt_);
    report.policy_entropy = stats.entropy;
    report.skipped = stats.skipped;
    return report;
  }

  const Mlp<float>* critic() const override { return &critic_; }

  void save(const std::filesystem::path& dir) const override {
    Algorithm::save(dir);
    save_checkpoint(dir / "critic.bin", critic_);
  }

 private:
  Mlp<float> critic_;
  Adam<float> critic_opt_;
};

/// Policy gradient on per-step rewards with a learned state-value baseline. The reward is
/// the sparse terminal return, or a proxy learned from preferences or from returns.
class RewardModelPpo final : public Algorithm {
 public:
  RewardModelPpo(const AgentConfig& config, const env::EnvConfig& env, std::uint64_t seed)
      : Algorithm(config, env, seed),
        value_(make_mlp<float>(network_shape(config, env, 1), mix_seed(seed, 3), 1.0)),
        value_opt_(value_.parameter_count(), config.lr),
        reward_(make_mlp<float>(network_shape(config, env, env.action_count()), mix_seed(seed, 4))),
        reward_opt_(reward_.parameter_count(), config.lr) {}

  UpdateReport update(std::span<const StoredTrajectory* const> batch, Rng& rng) override {
    UpdateReport report;
    try {
      if (config_.algo == Algo::pbrl) {
        fit_preferences(batch, rng, report);
      } else if (config_.algo == Algo::rrd_lsq) {
        fit_returns(batch, report);
      }
    } catch (const std::domain_error& e) {
      spdlog::warn("{}: skipping reward-model step: {}", to_string(config_.algo), e.what());
    }

    const std::vector<const env::Trajectory*> trajectories = trajectories_of(batch);
    PolicySamples samples = stack_samples(trajectories);
    Eigen::VectorXd returns(samples.states.cols());
    Eigen::Index col = 0;
    for (const StoredTrajectory* s : batch) {
      const Eigen::VectorXd rewards = step_rewards(*s);
      returns.segment(col, rewards.size()) = discounted_returns(rewards, config_.gamma);
      col += rewards.size();
    }
    const Mat<float> values = forward(value_, samples.states);
    samples.advantages = normalize_advantages(returns - values.row(0).transpose().cast<double>());
    const PolicyUpdateStats stats = policy_update(actor_, std::move(samples), config_.ppo, actor_opt_);
    report.policy_entropy = stats.entropy;
    report.skipped = stats.skipped;
    fit_values(trajectories, returns);
    return report;
  }

  void save(const std::filesystem::path& dir) const override {
    Algorithm::save(dir);
    save_checkpoint(dir / "value.bin", value_);
    if (config_.algo != Algo::ppo_sparse) save_checkpoint(dir / "reward.bin", reward_);
  }

 private:
  void fit_preferences(std::span<const StoredTrajectory* const> batch, Rng& rng,
                       UpdateReport& report) {
    const PairingList pairing = pair_batch(batch.size(), rng);
    Vec<float> grad = Vec<float>::Zero(reward_.parameter_count());
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const StoredTrajectory& a = *batch[i];
      const StoredTrajectory& b = *batch[pairing[i]];
      const preference::Outcome outcome = preference::judge(a.summary, b.summary, config_.mode);
      report.judgments.push_back({a.id, b.id, outcome});
      const LossAndGradient<float> lg = pbrl_loss(reward_, a.trajectory, b.trajectory, outcome);
      loss += lg.loss;
      grad += lg.gradient;
    }
    report.critic_loss = loss;
    adam_step(reward_opt_, reward_.parameters(), grad);
  }

  void fit_returns(std::span<const StoredTrajectory* const> batch, UpdateReport& report) {
    Vec<float> grad = Vec<float>::Zero(reward_.parameter_count());
    double loss = 0.0;
    for (const StoredTrajectory* s : batch) {
      const LossAndGradient<float> lg =
          lsq_decomposition_loss(reward_, s->trajectory, s->summary.hidden_return);
      loss += lg.loss;
      grad += lg.gradient;
    }
    report.critic_loss = loss;
    adam_step(reward_opt_, reward_.parameters(), grad);
  }

  Eigen::VectorXd step_rewards(const StoredTrajectory& s) const {
    const auto k = static_cast<Eigen::Index>(s.trajectory.length());
    if (config_.algo == Algo::ppo_sparse) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(k);
      r(k - 1) = s.summary.hidden_return;
      return r;
    }
    return taken_action_values(reward_, s.trajectory);
  }

  void fit_values(const std::vector<const env::Trajectory*>& trajectories,
                  const Eigen::VectorXd& returns) {
    const PolicySamples samples = stack_samples(trajectories);
    const double inv_n = 1.0 / static_cast<double>(samples.states.cols());
    for (int epoch = 0; epoch < config_.ppo.epochs; ++epoch) {
      Tape<float> tape;
      const Mat<float> v = forward(value_, samples.states, &tape);
      const Mat<float> upstream =
          (2.0 * inv_n * (v.row(0).transpose().cast<double>() - returns)).transpose().cast<float>();
      adam_step(value_opt_, value_.parameters(), backward(value_, tape, upstream));
    }
  }

  Mlp<float> value_;
  Adam<float> value_opt_;
  Mlp<float> reward_;
  Adam<float> reward_opt_;
};

}  // namespace

std::unique_ptr<Algorithm> make_algorithm(const AgentConfig& config, const env::EnvConfig& env,
                                          std::uint64_t seed) {
  if (config.algo == Algo::errl) return std::make_unique<Errl>(config, env, seed);
  return std::make_unique<RewardModelPpo>(config, env, seed);
}

Trainer::Trainer(const AgentConfig& config, const env::EnvConfig& env, std::uint64_t seed)
    : config_(config),
      env_config_(env),
      seed_(seed),
      env_(env::make_environment(env)),
      algorithm_(make_algorithm(config, env, seed)),
      buffer_(config.buffer_cap),
      rng_(mix_seed(seed, 0)) {}

IterationMetrics Trainer::iterate(std::size_t rollouts) {
  IterationMetrics m;
  std::vector<double> probs;
  const env::Policy policy = [this, &probs](const env::Observation& o) {
    double p = 0.0;
    const int a = algorithm_->sample_action(o, rng_, &p);
    probs.push_back(p);
    return a;
  };
  for (std::size_t r = 0; r < rollouts; ++r) {
    StoredTrajectory item;
    item.id = next_episode_;
    probs.clear();
    item.trajectory = env::rollout(*env_, mix_seed(seed_, 1000 + next_episode_), policy);
    item.behavior_probs = Eigen::Map<const Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size()));
    item.summary = env::summarize(item.trajectory);
    ++next_episode_;
    m.collected.push_back(item.summary);
    buffer_.push(std::move(item));
  }
  for (const auto& s : m.collected) {
    m.mean_hidden_return += s.hidden_return;
    m.mean_length += static_cast<double>(s.length);
  }
  if (!m.collected.empty()) {
    m.mean_hidden_return /= static_cast<double>(m.collected.size());
    m.mean_length /= static_cast<double>(m.collected.size());
  }
  if (buffer_.size() < 2) return m;

  const auto batch = buffer_.sample(std::min(config_.batch_n, buffer_.size()), rng_);
  UpdateReport report = algorithm_->update(batch, rng_);
  m.trained = !report.skipped;
  m.critic_loss = report.critic_loss;
  m.policy_entropy = report.policy_entropy;
  m.judgments = std::move(report.judgments);
  return m;
}

std::vector<env::TrajectorySummary> Trainer::greedy_episodes(int count) {
  auto eval_env = env::make_environment(env_config_);
  const env::Policy policy = [this](const env::Observation& o) {
    return algorithm_->greedy_action(o);
  };
  std::vector<env::TrajectorySummary> out;
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = mix_seed(seed_ ^ 0xE7A1ULL, next_eval_episode_++);
    out.push_back(env::summarize(env::rollout(*eval_env, seed, policy)));
  }
  return out;
}

}  // namespace errl::agent
