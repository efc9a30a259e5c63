#ifndef ERRL_CONFIG_HPP
#define ERRL_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "errl/env.hpp"
#include "errl/learners.hpp"

namespace errl {

using env::ConfigError;

struct ExperimentConfig {
  env::EnvConfig env = env::EnvConfig::minipong();
  agent::AgentConfig agent;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  /// Training trajectories per evaluation point.
  std::size_t eval_every = 60;
  std::size_t total_trajectories = 5000;
  /// Adds deterministic-policy episodes at every evaluation point.
  bool greedy_eval = false;
  int greedy_episodes = 20;
  bool write_judgments = true;
  bool write_checkpoints = true;
  std::filesystem::path out_dir = "runs/latest";

  /// Throws ConfigError naming the first field outside its range.
  void validate() const;
};

/// Ordered so that files and dumps are stable.
using KeyValues = std::map<std::string, std::string>;

/// One `key = value` per line. Blank lines and lines starting with '#' are ignored.
KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const std::filesystem::path& path);

/// Parses a single `key=value` override.
std::pair<std::string, std::string> parse_assignment(const std::string& text);

/// Applies the entries on top of `base`. `env.name` is applied first so that switching
/// environments resets the per-environment defaults before any env.* override.
/// Unknown keys and malformed values throw ConfigError.
ExperimentConfig apply_key_values(ExperimentConfig base, const KeyValues& values);

/// Every key with its current value, in the format parse_key_values reads.
KeyValues to_key_values(const ExperimentConfig& config);
void write_key_values(std::ostream& out, const KeyValues& values);

/// The recognised keys, each with a one-line description.
const std::vector<std::pair<std::string, std::string>>& config_reference();

}  // namespace errl

#endif  // ERRL_CONFIG_HPP
