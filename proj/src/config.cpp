#include "errl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace errl {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("{}: cannot parse '{}' as a number", key, text));
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, text));
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, trim(item)));
  return out;
}

struct Field {
  std::string key;
  std::string description;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  using S = std::string;
  static const std::vector<Field> table = {
      {"env.name", "minipong or corridor; resets the other env.* keys to that environment's defaults",
       [](C& c, const S& v) {
         c.env = env::parse_env_kind(v) == env::EnvKind::minipong ? env::EnvConfig::minipong()
                                                                  : env::EnvConfig::corridor();
       },
       [](const C& c) { return S(env::to_string(c.env.kind)); }},
      {"env.score_limit", "MiniPong points that end an episode",
       [](C& c, const S& v) { c.env.score_limit = parse_number<int>("env.score_limit", v); },
       [](const C& c) { return fmt::format("{}", c.env.score_limit); }},
      {"env.max_steps", "step cap per episode",
       [](C& c, const S& v) { c.env.max_steps = parse_number<int>("env.max_steps", v); },
       [](const C& c) { return fmt::format("{}", c.env.max_steps); }},
      {"env.sudden_death", "end MiniPong episodes once the deficit reaches the threshold",
       [](C& c, const S& v) { c.env.sudden_death = parse_bool("env.sudden_death", v); },
       [](const C& c) { return fmt_bool(c.env.sudden_death); }},
      {"env.sudden_death_threshold", "negative score difference that ends a sudden-death episode",
       [](C& c, const S& v) {
         c.env.sudden_death_threshold = parse_number<int>("env.sudden_death_threshold", v);
       },
       [](const C& c) { return fmt::format("{}", c.env.sudden_death_threshold); }},
      {"env.length", "Corridor goal distance",
       [](C& c, const S& v) { c.env.corridor_length = parse_number<int>("env.length", v); },
       [](const C& c) { return fmt::format("{}", c.env.corridor_length); }},
      {"algo", "errl, pbrl, rrd_lsq or ppo_sparse",
       [](C& c, const S& v) { c.agent.algo = agent::parse_algo(v); },
       [](const C& c) { return S(agent::to_string(c.agent.algo)); }},
      {"preference.mode", "preference mode used by the judge (errl, pbrl)",
       [](C& c, const S& v) { c.agent.mode = preference::parse_mode(v); },
       [](const C& c) { return S(preference::to_string(c.agent.mode)); }},
      {"seeds", "comma-separated list of seeds",
       [](C& c, const S& v) { c.seeds = parse_list<std::uint64_t>("seeds", v); },
       [](const C& c) { return fmt::format("{}", fmt::join(c.seeds, ",")); }},
      {"eta", "rating temperature per unit of mean trajectory length",
       [](C& c, const S& v) { c.agent.eta = parse_number<double>("eta", v); },
       [](const C& c) { return fmt::format("{}", c.agent.eta); }},
      {"k_factor_ratio", "K-factor as a fraction of the effective rating scale",
       [](C& c, const S& v) { c.agent.k_factor_ratio = parse_number<double>("k_factor_ratio", v); },
       [](const C& c) { return fmt::format("{}", c.agent.k_factor_ratio); }},
      {"gamma", "discount factor",
       [](C& c, const S& v) { c.agent.gamma = parse_number<double>("gamma", v); },
       [](const C& c) { return fmt::format("{}", c.agent.gamma); }},
      {"lr", "actor learning rate (and value/reward nets of the baselines)",
       [](C& c, const S& v) { c.agent.lr = parse_number<double>("lr", v); },
       [](const C& c) { return fmt::format("{}", c.agent.lr); }},
      {"critic_lr", "ERRL critic learning rate",
       [](C& c, const S& v) { c.agent.critic_lr = parse_number<double>("critic_lr", v); },
       [](const C& c) { return fmt::format("{}", c.agent.critic_lr); }},
      {"critic_steps", "ERRL critic optimizer steps per batch",
       [](C& c, const S& v) { c.agent.critic_steps = parse_number<int>("critic_steps", v); },
       [](const C& c) { return fmt::format("{}", c.agent.critic_steps); }},
      {"importance_cap", "cap on 1/pi critic weights; 0 disables weighting",
       [](C& c, const S& v) { c.agent.importance_cap = parse_number<double>("importance_cap", v); },
       [](const C& c) { return fmt::format("{}", c.agent.importance_cap); }},
      {"importance_source", "current (actor at update time) or recorded (at collection)",
       [](C& c, const S& v) {
         if (v != "current" && v != "recorded") {
           throw ConfigError("importance_source: expected current or recorded, got '" + v + "'");
         }
         c.agent.importance_from_current = v == "current";
       },
       [](const C& c) { return S(c.agent.importance_from_current ? "current" : "recorded"); }},
      {"hidden", "comma-separated hidden layer widths",
       [](C& c, const S& v) { c.agent.hidden = parse_list<int>("hidden", v); },
       [](const C& c) { return fmt::format("{}", fmt::join(c.agent.hidden, ",")); }},
      {"batch_n", "trajectories per update batch",
       [](C& c, const S& v) { c.agent.batch_n = parse_number<std::size_t>("batch_n", v); },
       [](const C& c) { return fmt::format("{}", c.agent.batch_n); }},
      {"buffer_cap", "replay buffer capacity in trajectories",
       [](C& c, const S& v) { c.agent.buffer_cap = parse_number<std::size_t>("buffer_cap", v); },
       [](const C& c) { return fmt::format("{}", c.agent.buffer_cap); }},
      {"rollouts_per_iter", "trajectories collected between updates",
       [](C& c, const S& v) {
         c.agent.rollouts_per_iter = parse_number<std::size_t>("rollouts_per_iter", v);
       },
       [](const C& c) { return fmt::format("{}", c.agent.rollouts_per_iter); }},
      {"clip", "policy ratio clip",
       [](C& c, const S& v) { c.agent.ppo.clip = parse_number<double>("clip", v); },
       [](const C& c) { return fmt::format("{}", c.agent.ppo.clip); }},
      {"entropy_coef", "policy entropy bonus",
       [](C& c, const S& v) { c.agent.ppo.entropy_coef = parse_number<double>("entropy_coef", v); },
       [](const C& c) { return fmt::format("{}", c.agent.ppo.entropy_coef); }},
      {"ppo_epochs", "policy optimizer steps per batch",
       [](C& c, const S& v) { c.agent.ppo.epochs = parse_number<int>("ppo_epochs", v); },
       [](const C& c) { return fmt::format("{}", c.agent.ppo.epochs); }},
      {"eval_every", "training trajectories per evaluation point",
       [](C& c, const S& v) { c.eval_every = parse_number<std::size_t>("eval_every", v); },
       [](const C& c) { return fmt::format("{}", c.eval_every); }},
      {"total_trajectories", "training budget per seed",
       [](C& c, const S& v) {
         c.total_trajectories = parse_number<std::size_t>("total_trajectories", v);
       },
       [](const C& c) { return fmt::format("{}", c.total_trajectories); }},
      {"greedy_eval", "add deterministic-policy episodes at every evaluation point",
       [](C& c, const S& v) { c.greedy_eval = parse_bool("greedy_eval", v); },
       [](const C& c) { return fmt_bool(c.greedy_eval); }},
      {"greedy_episodes", "episodes per greedy evaluation",
       [](C& c, const S& v) { c.greedy_episodes = parse_number<int>("greedy_episodes", v); },
       [](const C& c) { return fmt::format("{}", c.greedy_episodes); }},
      {"write_judgments", "write per-seed judgment logs",
       [](C& c, const S& v) { c.write_judgments = parse_bool("write_judgments", v); },
       [](const C& c) { return fmt_bool(c.write_judgments); }},
      {"write_checkpoints", "write final network checkpoints",
       [](C& c, const S& v) { c.write_checkpoints = parse_bool("write_checkpoints", v); },
       [](const C& c) { return fmt_bool(c.write_checkpoints); }},
      {"out", "output directory",
       [](C& c, const S& v) { c.out_dir = v; },
       [](const C& c) { return c.out_dir.string(); }},
  };
  return table;
}

const Field* find_field(const std::string& key) {
  for (const Field& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace

void ExperimentConfig::validate() const {
  env.validate();
  const agent::AgentConfig& a = agent;
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (!(a.eta > 0.0)) throw ConfigError("eta must be positive");
  if (!(a.k_factor_ratio > 0.0)) throw ConfigError("k_factor_ratio must be positive");
  if (!(a.gamma > 0.0 && a.gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(a.lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(a.critic_lr > 0.0)) throw ConfigError("critic_lr must be positive");
  if (a.critic_steps < 1) throw ConfigError("critic_steps must be >= 1");
  if (!(a.importance_cap == 0.0 || a.importance_cap >= 1.0)) {
    throw ConfigError("importance_cap must be 0 or at least 1");
  }
  if (a.hidden.empty()) throw ConfigError("hidden must list at least one layer");
  for (int h : a.hidden) {
    if (h < 1) throw ConfigError("hidden layer widths must be positive");
  }
  if (a.batch_n < 2) throw ConfigError("batch_n must be >= 2");
  if (a.buffer_cap < a.batch_n) throw ConfigError("buffer_cap must be >= batch_n");
  if (a.rollouts_per_iter < 1) throw ConfigError("rollouts_per_iter must be >= 1");
  if (!(a.ppo.clip > 0.0 && a.ppo.clip < 1.0)) throw ConfigError("clip must lie in (0, 1)");
  if (!(a.ppo.entropy_coef >= 0.0)) throw ConfigError("entropy_coef must be >= 0");
  if (a.ppo.epochs < 1) throw ConfigError("ppo_epochs must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (greedy_episodes < 1) throw ConfigError("greedy_episodes must be >= 1");
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("line {}: expected key = value", number));
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", number));
    out[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_key_values(in);
}

std::pair<std::string, std::string> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + text + "'");
  std::string key = trim(std::string_view(text).substr(0, eq));
  if (key.empty()) throw ConfigError("expected key=value, got '" + text + "'");
  return {std::move(key), trim(std::string_view(text).substr(eq + 1))};
}

ExperimentConfig apply_key_values(ExperimentConfig base, const KeyValues& values) {
  for (const auto& [key, value] : values) {
    if (!find_field(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  if (auto it = values.find("env.name"); it != values.end()) find_field("env.name")->set(base, it->second);
  for (const auto& [key, value] : values) {
    if (key != "env.name") find_field(key)->set(base, value);
  }
  return base;
}

KeyValues to_key_values(const ExperimentConfig& config) {
  KeyValues out;
  for (const Field& f : fields()) out[f.key] = f.get(config);
  return out;
}

void write_key_values(std::ostream& out, const KeyValues& values) {
  for (const auto& [key, value] : values) out << key << " = " << value << '\n';
}

const std::vector<std::pair<std::string, std::string>>& config_reference() {
  static const std::vector<std::pair<std::string, std::string>> ref = [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Field& f : fields()) out.emplace_back(f.key, f.description);
    return out;
  }();
  return ref;
}

}  // namespace errl
