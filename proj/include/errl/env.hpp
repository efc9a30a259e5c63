#ifndef ERRL_ENV_HPP
#define ERRL_ENV_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace errl::env {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EnvKind { minipong, corridor };

enum class Event : std::uint8_t { none, player_point, opponent_point, ball_return, goal_reached };

std::string_view to_string(EnvKind kind);
std::string_view to_string(Event event);
EnvKind parse_env_kind(std::string_view name);

/// Hidden per-step reward attached to an event. Never shown to preference-driven learners.
double event_reward(Event event);

struct EnvConfig {
  EnvKind kind = EnvKind::minipong;
  int score_limit = 5;
  int max_steps = 600;
  /// Ends a MiniPong episode once self_score - opponent_score <= sudden_death_threshold.
  bool sudden_death = false;
  int sudden_death_threshold = -2;
  int corridor_length = 50;

  static EnvConfig minipong(int score_limit = 5, int max_steps = 600);
  static EnvConfig corridor(int length = 50, int max_steps = 200);

  void validate() const;
  int observation_size() const;
  int action_count() const;
};

using Observation = Eigen::VectorXf;

struct StepResult {
  Observation observation;
  Event event = Event::none;
  bool done = false;
};

class Environment {
 public:
  explicit Environment(EnvConfig config) : config_(config) { config_.validate(); }
  virtual ~Environment() = default;

  virtual Observation reset(std::uint64_t seed) = 0;
  /// Throws std::domain_error for an action index outside [0, action_count).
  virtual StepResult step(int action) = 0;
  virtual Observation observe() const = 0;

  const EnvConfig& config() const { return config_; }
  int steps_taken() const { return steps_; }

 protected:
  void check_action(int action) const;

  EnvConfig config_;
  int steps_ = 0;
};

/// 16x16 court. The learner controls the right paddle; a scripted opponent holds the left.
class MiniPong final : public Environment {
 public:
  static constexpr int kWidth = 16;
  static constexpr int kHeight = 16;
  static constexpr int kPaddleHalf = 1;  // paddles span 3 cells
  static constexpr int kPlayerSpeed = 2;
  /// The opponent drops its dead zone once an incoming ball is within this many columns.
  static constexpr int kOpponentFocusColumn = 5;

  enum Action : int { up = 0, stay = 1, down = 2 };

  struct State {
    int ball_x = kWidth / 2;
    int ball_y = kHeight / 2;
    int ball_vx = 1;
    int ball_vy = 1;
    int paddle_y = kHeight / 2;
    int opponent_y = kHeight / 2;
    int self_score = 0;
    int opponent_score = 0;
  };

  explicit MiniPong(EnvConfig config);

  Observation reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  Observation observe() const override;

  const State& state() const { return state_; }
  /// Overrides the physical state; used to set up scenarios in tests.
  void set_state(const State& state) { state_ = state; }

 private:
  void serve(int direction);
  void move_opponent();
  bool finished() const;

  State state_;
  std::mt19937_64 rng_;
};

/// Positions 0..L. Reaching L is the only feedback-bearing event.
class Corridor final : public Environment {
 public:
  enum Action : int { left = 0, right = 1 };

  explicit Corridor(EnvConfig config);

  Observation reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  Observation observe() const override;

  int position() const { return position_; }
  void set_position(int position);

 private:
  int position_ = 0;
};

std::unique_ptr<Environment> make_environment(const EnvConfig& config);

struct Trajectory {
  EnvKind env = EnvKind::minipong;
  /// Column t holds the observation at which actions[t] was chosen.
  Eigen::MatrixXf states;
  std::vector<int> actions;
  std::vector<Event> events;
  bool terminated = false;
  std::uint64_t seed = 0;

  std::size_t length() const { return actions.size(); }
};

struct TrajectorySummary {
  EnvKind env = EnvKind::minipong;
  double hidden_return = 0.0;
  std::size_t length = 0;
  int self_score = 0;
  int opponent_score = 0;
  std::map<Event, int> event_tallies;
};

/// Throws std::domain_error for an empty trajectory.
TrajectorySummary summarize(const Trajectory& trajectory);

using Policy = std::function<int(const Observation&)>;

/// Plays one episode from reset(seed) until the environment reports done.
Trajectory rollout(Environment& environment, std::uint64_t seed, const Policy& policy);

}  // namespace errl::env

#endif  // ERRL_ENV_HPP
