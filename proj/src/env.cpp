#include "errl/env.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace errl::env {

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::minipong: return "minipong";
    case EnvKind::corridor: return "corridor";
  }
  return "unknown";
}

std::string_view to_string(Event event) {
  switch (event) {
    case Event::none: return "none";
    case Event::player_point: return "player_point";
    case Event::opponent_point: return "opponent_point";
    case Event::ball_return: return "ball_return";
    case Event::goal_reached: return "goal_reached";
  }
  return "unknown";
}

EnvKind parse_env_kind(std::string_view name) {
  if (name == "minipong") return EnvKind::minipong;
  if (name == "corridor") return EnvKind::corridor;
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

double event_reward(Event event) {
  switch (event) {
    case Event::player_point: return 1.0;
    case Event::opponent_point: return -1.0;
    case Event::goal_reached: return 1.0;
    default: return 0.0;
  }
}

EnvConfig EnvConfig::minipong(int score_limit, int max_steps) {
  EnvConfig c;
  c.kind = EnvKind::minipong;
  c.score_limit = score_limit;
  c.max_steps = max_steps;
  return c;
}

EnvConfig EnvConfig::corridor(int length, int max_steps) {
  EnvConfig c;
  c.kind = EnvKind::corridor;
  c.corridor_length = length;
  c.max_steps = max_steps;
  return c;
}

void EnvConfig::validate() const {
  if (max_steps < 1) throw ConfigError("env.max_steps must be >= 1");
  if (kind == EnvKind::minipong) {
    if (score_limit < 1) throw ConfigError("env.score_limit must be >= 1");
    if (sudden_death && sudden_death_threshold >= 0) {
      throw ConfigError("env.sudden_death_threshold must be negative");
    }
  } else if (corridor_length < 1) {
    throw ConfigError("env.length must be >= 1");
  }
}

int EnvConfig::observation_size() const { return kind == EnvKind::minipong ? 6 : 2; }

int EnvConfig::action_count() const { return kind == EnvKind::minipong ? 3 : 2; }

void Environment::check_action(int action) const {
  if (action < 0 || action >= config_.action_count()) {
    throw std::domain_error("invalid action index " + std::to_string(action));
  }
}

// ---------------------------------------------------------------------------
// MiniPong

namespace {

constexpr int sign(int x) { return (x > 0) - (x < 0); }

float normalize(int cell, int extent) {
  return 2.0f * static_cast<float>(cell) / static_cast<float>(extent - 1) - 1.0f;
}

int clamp_paddle(int y) {
  return std::clamp(y, MiniPong::kPaddleHalf, MiniPong::kHeight - 1 - MiniPong::kPaddleHalf);
}

}  // namespace

MiniPong::MiniPong(EnvConfig config) : Environment(config) {
  if (config_.kind != EnvKind::minipong) throw ConfigError("MiniPong needs a minipong config");
}

Observation MiniPong::reset(std::uint64_t seed) {
  rng_.seed(seed);
  steps_ = 0;
  state_ = State{};
  std::bernoulli_distribution coin(0.5);
  state_.ball_vx = coin(rng_) ? 1 : -1;
  state_.ball_vy = coin(rng_) ? 1 : -1;
  return observe();
}

void MiniPong::serve(int direction) {
  std::uniform_int_distribution<int> row(4, kHeight - 5);
  std::bernoulli_distribution coin(0.5);
  state_.ball_x = kWidth / 2;
  state_.ball_y = row(rng_);
  state_.ball_vx = direction;
  state_.ball_vy = coin(rng_) ? 1 : -1;
}

void MiniPong::move_opponent() {
  const bool incoming = state_.ball_vx < 0 && state_.ball_x <= kOpponentFocusColumn;
  const int dead_zone = incoming ? 0 : 1;
  const int gap = state_.ball_y - state_.opponent_y;
  if (std::abs(gap) > dead_zone) state_.opponent_y = clamp_paddle(state_.opponent_y + sign(gap));
}

bool MiniPong::finished() const {
  if (state_.self_score >= config_.score_limit) return true;
  if (state_.opponent_score >= config_.score_limit) return true;
  if (config_.sudden_death &&
      state_.self_score - state_.opponent_score <= config_.sudden_death_threshold) {
    return true;
  }
  return steps_ >= config_.max_steps;
}

StepResult MiniPong::step(int action) {
  check_action(action);
  ++steps_;
  State& s = state_;
  Event event = Event::none;

  // Ball first, against the paddles as they stood when the action was chosen.
  int nx = s.ball_x + s.ball_vx;
  int ny = s.ball_y + s.ball_vy;
  if (ny < 0 || ny >= kHeight) {
    s.ball_vy = -s.ball_vy;
    ny = s.ball_y + s.ball_vy;
  }
  bool scored = false;
  if (nx == kWidth - 1) {
    const int offset = ny - s.paddle_y;
    if (std::abs(offset) <= kPaddleHalf) {
      s.ball_vx = -1;
      nx = kWidth - 2;
      if (offset != 0) s.ball_vy = offset;
      event = Event::ball_return;
    } else {
      ++s.opponent_score;
      event = Event::opponent_point;
      scored = true;
    }
  } else if (nx == 0) {
    const int offset = ny - s.opponent_y;
    if (std::abs(offset) <= kPaddleHalf) {
      s.ball_vx = 1;
      nx = 1;
      if (offset != 0) s.ball_vy = offset;
    } else {
      ++s.self_score;
      event = Event::player_point;
      scored = true;
    }
  }
  if (scored) {
    serve(event == Event::player_point ? -1 : 1);
  } else {
    s.ball_x = nx;
    s.ball_y = ny;
  }

  const int move = action == up ? -1 : action == down ? 1 : 0;
  s.paddle_y = clamp_paddle(s.paddle_y + move * kPlayerSpeed);
  move_opponent();

  return {observe(), event, finished()};
}

Observation MiniPong::observe() const {
  Observation o(6);
  o << normalize(state_.ball_x, kWidth), normalize(state_.ball_y, kHeight),
      static_cast<float>(state_.ball_vx), static_cast<float>(state_.ball_vy),
      normalize(state_.paddle_y, kHeight), normalize(state_.opponent_y, kHeight);
  return o;
}

// ---------------------------------------------------------------------------
// Corridor

Corridor::Corridor(EnvConfig config) : Environment(config) {
  if (config_.kind != EnvKind::corridor) throw ConfigError("Corridor needs a corridor config");
}

Observation Corridor::reset(std::uint64_t /*seed*/) {
  steps_ = 0;
  position_ = 0;
  return observe();
}

void Corridor::set_position(int position) {
  position_ = std::clamp(position, 0, config_.corridor_length);
}

StepResult Corridor::step(int action) {
  check_action(action);
  ++steps_;
  position_ = std::clamp(position_ + (action == right ? 1 : -1), 0, config_.corridor_length);
  const bool goal = position_ == config_.corridor_length;
  return {observe(), goal ? Event::goal_reached : Event::none,
          goal || steps_ >= config_.max_steps};
}

Observation Corridor::observe() const {
  Observation o(2);
  o << static_cast<float>(position_) / static_cast<float>(config_.corridor_length),
      static_cast<float>(steps_) / static_cast<float>(config_.max_steps);
  return o;
}

std::unique_ptr<Environment> make_environment(const EnvConfig& config) {
  config.validate();
  if (config.kind == EnvKind::minipong) return std::make_unique<MiniPong>(config);
  return std::make_unique<Corridor>(config);
}

// ---------------------------------------------------------------------------

TrajectorySummary summarize(const Trajectory& trajectory) {
  if (trajectory.length() == 0) throw std::domain_error("summarize: empty trajectory");
  TrajectorySummary summary;
  summary.env = trajectory.env;
  summary.length = trajectory.length();
  for (Event e : trajectory.events) {
    ++summary.event_tallies[e];
    summary.hidden_return += event_reward(e);
  }
  auto tally = [&](Event e) {
    auto it = summary.event_tallies.find(e);
    return it == summary.event_tallies.end() ? 0 : it->second;
  };
  if (trajectory.env == EnvKind::minipong) {
    summary.self_score = tally(Event::player_point);
    summary.opponent_score = tally(Event::opponent_point);
  } else {
    summary.self_score = tally(Event::goal_reached);
  }
  return summary;
}

Trajectory rollout(Environment& environment, std::uint64_t seed, const Policy& policy) {
  Trajectory t;
  t.env = environment.config().kind;
  t.seed = seed;
  const int cap = environment.config().max_steps;
  t.states.resize(environment.config().observation_size(), cap);
  t.actions.reserve(cap);
  t.events.reserve(cap);

  Observation obs = environment.reset(seed);
  bool done = false;
  while (!done) {
    const int action = policy(obs);
    t.states.col(static_cast<Eigen::Index>(t.actions.size())) = obs;
    StepResult r = environment.step(action);
    t.actions.push_back(action);
    t.events.push_back(r.event);
    obs = std::move(r.observation);
    done = r.done;
  }
  t.states.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(t.actions.size()));
  t.terminated = true;
  return t;
}

}  // namespace errl::env
