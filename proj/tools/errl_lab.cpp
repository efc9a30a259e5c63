// errl-lab: train preference-driven agents on the toy environments and write metrics CSVs.

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "errl/config.hpp"
#include "errl/harness.hpp"

namespace {

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::string algo, env, eta, seeds, out, mode;
  bool greedy_eval = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_file, "key = value file");
  cmd->add_option("--set", o.sets, "override any config key, as key=value (repeatable)");
  cmd->add_option("--algo", o.algo, "errl, pbrl, rrd_lsq or ppo_sparse");
  cmd->add_option("--env", o.env, "minipong or corridor");
  cmd->add_option("--eta", o.eta, "rating temperature per unit length");
  cmd->add_option("--seeds", o.seeds, "comma-separated seeds");
  cmd->add_option("--mode", o.mode, "preference mode");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--greedy-eval", o.greedy_eval, "add greedy episodes at each evaluation point");
}

/// defaults < file < command line
errl::ExperimentConfig build_config(const CommonOptions& o) {
  errl::KeyValues kv;
  if (!o.config_file.empty()) kv = errl::load_key_values(o.config_file);
  auto put = [&kv](const char* key, const std::string& v) {
    if (!v.empty()) kv[key] = v;
  };
  put("algo", o.algo);
  put("env.name", o.env);
  put("eta", o.eta);
  put("seeds", o.seeds);
  put("preference.mode", o.mode);
  put("out", o.out);
  if (o.greedy_eval) kv["greedy_eval"] = "true";
  for (const std::string& s : o.sets) {
    auto [key, value] = errl::parse_assignment(s);
    kv[key] = value;
  }
  errl::ExperimentConfig c = errl::apply_key_values(errl::ExperimentConfig{}, kv);
  c.validate();
  return c;
}

template <typename T, typename Parse>
std::vector<T> split(const std::string& text, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse(item));
  }
  return out;
}

void setup_logging() {
  const char* level = std::getenv("ERRL_LOG_LEVEL");
  const std::string name = level ? level : "info";
  if (name != "error" && name != "info" && name != "debug") {
    spdlog::warn("ERRL_LOG_LEVEL '{}' not recognised; using info", name);
    spdlog::set_level(spdlog::level::info);
    return;
  }
  spdlog::set_level(spdlog::level::from_str(name));
}

int exit_code(const std::vector<errl::harness::RunResult>& results) {
  for (const auto& r : results) {
    if (r.failures() > 0) return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Preference-driven reinforcement learning with ELO-rated trajectories"};
  app.require_subcommand(1);

  CommonOptions run_opts, ablate_opts, modes_opts;
  CLI::App* run = app.add_subcommand("run", "train every seed of one configuration");
  add_common(run, run_opts);

  CLI::App* ablate = app.add_subcommand("ablate", "one run per eta value");
  add_common(ablate, ablate_opts);
  std::string eta_list = "0.1,0.05,0.01,0.005,0.001";
  ablate->add_option("--eta-list", eta_list, "comma-separated eta values");

  CLI::App* modes = app.add_subcommand("modes", "one run per preference mode");
  add_common(modes, modes_opts);
  std::string mode_list = "normal,reward_only,ball_control,aggressive,sudden_death";
  modes->add_option("--list", mode_list, "comma-separated preference modes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto config = build_config(run_opts);
      return exit_code({errl::harness::run(config)});
    }
    if (ablate->parsed()) {
      const auto config = build_config(ablate_opts);
      const auto etas = split<double>(eta_list, [](const std::string& s) { return std::stod(s); });
      return exit_code(errl::harness::ablation(config, etas));
    }
    if (modes->parsed()) {
      const auto config = build_config(modes_opts);
      const auto list = split<errl::preference::Mode>(
          mode_list, [](const std::string& s) { return errl::preference::parse_mode(s); });
      return exit_code(errl::harness::modes_study(config, list));
    }
  } catch (const errl::ConfigError& e) {
    spdlog::error("invalid configuration: {}", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    spdlog::error("invalid number in list: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
