#ifndef ERRL_LEARNERS_HPP
#define ERRL_LEARNERS_HPP

#include <filesystem>
#include <memory>
#include <string_view>

#include "errl/agent.hpp"

namespace errl::agent {

enum class Algo { errl, pbrl, rrd_lsq, ppo_sparse };

std::string_view to_string(Algo algo);
Algo parse_algo(std::string_view name);

struct AgentConfig {
  Algo algo = Algo::errl;
  std::vector<int> hidden = {64, 64};
  double lr = 1e-4;
  double critic_lr = 3e-4;
  int critic_steps = 4;
  /// Cap on the 1/pi weights of the critic regression; 0 disables weighting.
  double importance_cap = 20.0;
  /// Weight by the current actor's probabilities instead of the recorded ones.
  bool importance_from_current = true;
  double gamma = 0.99;
  double eta = 0.01;
  double k_factor_ratio = 0.04;
  preference::Mode mode = preference::Mode::normal;
  std::size_t batch_n = 32;
  std::size_t buffer_cap = 200;
  std::size_t rollouts_per_iter = 4;
  PpoParams ppo{0.2, 0.01, 1};
};

struct Judgment {
  std::uint64_t episode_a = 0;
  std::uint64_t episode_b = 0;
  preference::Outcome outcome = preference::Outcome::draw;
};

struct UpdateReport {
  double critic_loss = 0.0;
  double policy_entropy = 0.0;
  bool skipped = false;
  std::vector<Judgment> judgments;
};

/// A policy plus whatever it learns its training signal from.
class Algorithm {
 public:
  Algorithm(const AgentConfig& config, const env::EnvConfig& env, std::uint64_t seed);
  virtual ~Algorithm() = default;

  virtual UpdateReport update(std::span<const StoredTrajectory* const> batch, Rng& rng) = 0;
  virtual void save(const std::filesystem::path& dir) const;

  /// Draws from the policy; `prob` receives the chosen action's probability when given.
  int sample_action(const env::Observation& obs, Rng& rng, double* prob = nullptr) const;
  int greedy_action(const env::Observation& obs) const;
  const Mlp<float>& actor() const { return actor_; }
  /// The network the policy is trained against, when the algorithm has one.
  virtual const Mlp<float>* critic() const { return nullptr; }

 protected:
  AgentConfig config_;
  Mlp<float> actor_;
  Adam<float> actor_opt_;
};

std::unique_ptr<Algorithm> make_algorithm(const AgentConfig& config, const env::EnvConfig& env,
                                          std::uint64_t seed);

/// Sizes of a network mapping observations to `outputs` through the configured hidden layers.
std::vector<int> network_shape(const AgentConfig& config, const env::EnvConfig& env, int outputs);

/// Deterministic 64-bit mixing (splitmix64) used to derive per-episode seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

struct IterationMetrics {
  std::vector<env::TrajectorySummary> collected;
  double mean_hidden_return = 0.0;
  double mean_length = 0.0;
  double critic_loss = 0.0;
  double policy_entropy = 0.0;
  bool trained = false;
  std::vector<Judgment> judgments;
};

/// Owns one seed's environment, buffer and learner, and runs the collect/sample/update loop.
class Trainer {
 public:
  Trainer(const AgentConfig& config, const env::EnvConfig& env, std::uint64_t seed);

  /// Collects `rollouts` episodes with the sampling policy, stores them, then trains on a
  /// batch of min(batch_n, buffer size) stored episodes once at least two are available.
  IterationMetrics iterate(std::size_t rollouts);

  /// Deterministic-policy episodes on a held-out seed stream.
  std::vector<env::TrajectorySummary> greedy_episodes(int count);

  const Algorithm& algorithm() const { return *algorithm_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::uint64_t episodes_collected() const { return next_episode_; }

 private:
  AgentConfig config_;
  env::EnvConfig env_config_;
  std::uint64_t seed_;
  std::unique_ptr<env::Environment> env_;
  std::unique_ptr<Algorithm> algorithm_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::uint64_t next_episode_ = 0;
  std::uint64_t next_eval_episode_ = 0;
};

}  // namespace errl::agent

#endif  // ERRL_LEARNERS_HPP
