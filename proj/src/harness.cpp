#include "errl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/spdlog.h>

#include "errl/stats.hpp"

namespace errl::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string cell(double x) { return std::isfinite(x) ? fmt::format("{:.6f}", x) : std::string(); }

double mean_or_nan(double sum, std::size_t n) { return n ? sum / static_cast<double>(n) : kNaN; }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

/// Episodes per greedy evaluation are summarised as return, length and win rate.
void fill_greedy(agent::Trainer& trainer, int episodes, SeedRow& row) {
  const auto summaries = trainer.greedy_episodes(episodes);
  double r = 0.0, len = 0.0;
  std::size_t wins = 0;
  for (const auto& s : summaries) {
    r += s.hidden_return;
    len += static_cast<double>(s.length);
    wins += s.hidden_return > 0.0;
  }
  row.greedy_return = mean_or_nan(r, summaries.size());
  row.greedy_length = mean_or_nan(len, summaries.size());
  row.greedy_win_rate = mean_or_nan(static_cast<double>(wins), summaries.size());
}

std::string eta_label(double eta) { return fmt::format("{}", eta); }

}  // namespace

SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed, std::ostream* judgments,
                    const std::filesystem::path& checkpoint_dir) {
  SeedResult result;
  result.seed = seed;
  try {
    config.validate();
    agent::Trainer trainer(config.agent, config.env, seed);
    std::size_t collected = 0;
    std::uint64_t timesteps = 0;
    while (collected < config.total_trajectories) {
      const std::size_t window_end =
          std::min(config.total_trajectories, collected + config.eval_every);
      SeedRow row;
      row.eval_index = result.rows.size() + 1;
      double ret = 0.0, len = 0.0, won_len = 0.0, loss = 0.0, entropy = 0.0;
      std::size_t episodes = 0, wins = 0, updates = 0;
      while (collected < window_end) {
        const std::size_t n = std::min(config.agent.rollouts_per_iter, window_end - collected);
        const agent::IterationMetrics m = trainer.iterate(n);
        for (const auto& s : m.collected) {
          ret += s.hidden_return;
          len += static_cast<double>(s.length);
          timesteps += s.length;
          ++episodes;
          if (s.hidden_return > 0.0) {
            ++wins;
            won_len += static_cast<double>(s.length);
          }
        }
        collected += m.collected.size();
        if (m.trained) {
          loss += m.critic_loss;
          entropy += m.policy_entropy;
          ++updates;
        }
        if (judgments) {
          for (const auto& j : m.judgments) {
            fmt::print(*judgments, "{},{},{}\n", j.episode_a, j.episode_b,
                       preference::to_string(j.outcome));
          }
        }
      }
      if (!trainer.algorithm().actor().all_finite()) {
        throw std::runtime_error("actor parameters became non-finite");
      }
      row.trajectories = collected;
      row.timesteps = timesteps;
      row.mean_return = mean_or_nan(ret, episodes);
      row.mean_length = mean_or_nan(len, episodes);
      row.win_rate = mean_or_nan(static_cast<double>(wins), episodes);
      row.won_mean_length = mean_or_nan(won_len, wins);
      row.critic_loss = mean_or_nan(loss, updates);
      row.policy_entropy = mean_or_nan(entropy, updates);
      row.greedy_return = row.greedy_length = row.greedy_win_rate = kNaN;
      if (config.greedy_eval) fill_greedy(trainer, config.greedy_episodes, row);
      spdlog::debug("seed {} eval {}: trajectories {} return {:.3f} length {:.1f}", seed,
                    row.eval_index, row.trajectories, row.mean_return, row.mean_length);
      result.rows.push_back(row);
    }
    if (!checkpoint_dir.empty()) {
      std::filesystem::create_directories(checkpoint_dir);
      trainer.algorithm().save(checkpoint_dir);
    }
  } catch (const std::exception& e) {
    result.failed = true;
    result.error = e.what();
    spdlog::error("seed {} failed: {}", seed, e.what());
  }
  return result;
}

std::vector<EvalPoint> aggregate(std::span<const SeedResult> seeds) {
  std::vector<const SeedResult*> ok;
  for (const SeedResult& s : seeds) {
    if (!s.failed) ok.push_back(&s);
  }
  std::vector<EvalPoint> points;
  if (ok.empty()) return points;
  std::size_t count = ok.front()->rows.size();
  for (const SeedResult* s : ok) count = std::min(count, s->rows.size());
  for (std::size_t i = 0; i < count; ++i) {
    EvalPoint p;
    p.eval_index = ok.front()->rows[i].eval_index;
    p.trajectories = ok.front()->rows[i].trajectories;
    double steps = 0.0, len = 0.0;
    for (const SeedResult* s : ok) {
      const SeedRow& r = s->rows[i];
      p.per_seed_returns.push_back(r.mean_return);
      steps += static_cast<double>(r.timesteps);
      len += r.mean_length;
    }
    const stats::MeanCi ci = stats::mean_ci95(p.per_seed_returns);
    p.timesteps = steps / static_cast<double>(ok.size());
    p.mean_length = len / static_cast<double>(ok.size());
    p.mean_return = ci.mean;
    p.ci95_lo = ci.lo;
    p.ci95_hi = ci.hi;
    points.push_back(std::move(p));
  }
  return points;
}

void write_seed_csv(std::ostream& out, std::span<const SeedRow> rows) {
  out << "eval_index,trajectories,timesteps,mean_return,mean_length,win_rate,won_mean_length,"
         "critic_loss,policy_entropy,greedy_return,greedy_length,greedy_win_rate\n";
  for (const SeedRow& r : rows) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{}\n", r.eval_index, r.trajectories,
               r.timesteps, cell(r.mean_return), cell(r.mean_length), cell(r.win_rate),
               cell(r.won_mean_length), cell(r.critic_loss), cell(r.policy_entropy),
               cell(r.greedy_return), cell(r.greedy_length), cell(r.greedy_win_rate));
  }
}

void write_aggregate_csv(std::ostream& out, std::span<const EvalPoint> points) {
  out << "eval_index,trajectories,timesteps,mean_return,ci95_lo,ci95_hi,mean_length\n";
  for (const EvalPoint& p : points) {
    fmt::print(out, "{},{},{:.2f},{},{},{},{}\n", p.eval_index, p.trajectories, p.timesteps,
               cell(p.mean_return), cell(p.ci95_lo), cell(p.ci95_hi), cell(p.mean_length));
  }
}

void write_judgment_header(std::ostream& out) { out << "episode_a,episode_b,outcome\n"; }

std::size_t RunResult::failures() const {
  return static_cast<std::size_t>(
      std::count_if(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.failed; }));
}

RunResult run(const ExperimentConfig& config) {
  config.validate();
  const auto& dir = config.out_dir;
  std::filesystem::create_directories(dir);
  {
    std::ofstream out = open_out(dir / "config.txt");
    write_key_values(out, to_key_values(config));
  }
  RunResult result;
  for (std::uint64_t seed : config.seeds) {
    spdlog::info("{} on {}: seed {} ({} trajectories)", agent::to_string(config.agent.algo),
                 env::to_string(config.env.kind), seed, config.total_trajectories);
    std::ofstream judgments;
    if (config.write_judgments) {
      judgments = open_out(dir / fmt::format("judgments_seed_{}.csv", seed));
      write_judgment_header(judgments);
    }
    const std::filesystem::path ckpt =
        config.write_checkpoints ? dir / "checkpoints" / fmt::format("seed_{}", seed)
                                 : std::filesystem::path();
    SeedResult s = run_seed(config, seed, config.write_judgments ? &judgments : nullptr, ckpt);
    std::ofstream csv = open_out(dir / fmt::format("seed_{}.csv", seed));
    write_seed_csv(csv, s.rows);
    if (!s.failed && !s.rows.empty()) {
      spdlog::info("seed {} done: final window return {:.3f}", seed, s.rows.back().mean_return);
    }
    result.seeds.push_back(std::move(s));
  }
  result.points = aggregate(result.seeds);
  {
    std::ofstream out = open_out(dir / "aggregate.csv");
    write_aggregate_csv(out, result.points);
  }
  if (result.failures() > 0) {
    std::ofstream out = open_out(dir / "failures.csv");
    out << "seed,error\n";
    for (const SeedResult& s : result.seeds) {
      if (!s.failed) continue;
      std::string msg = s.error;
      std::replace(msg.begin(), msg.end(), '"', '\'');
      fmt::print(out, "{},\"{}\"\n", s.seed, msg);
    }
  }
  return result;
}

std::vector<RunResult> ablation(const ExperimentConfig& config, std::span<const double> etas) {
  if (etas.empty()) throw ConfigError("ablation: eta list is empty");
  std::set<double> seen;
  for (double eta : etas) {
    if (!seen.insert(eta).second) throw ConfigError("ablation: duplicate eta " + eta_label(eta));
  }
  std::vector<RunResult> results;
  std::filesystem::create_directories(config.out_dir);
  std::ofstream combined = open_out(config.out_dir / "ablation.csv");
  combined << "eta,eval_index,trajectories,timesteps,mean_return,ci95_lo,ci95_hi,mean_length\n";
  for (double eta : etas) {
    ExperimentConfig c = config;
    c.agent.eta = eta;
    c.out_dir = config.out_dir / ("eta_" + eta_label(eta));
    results.push_back(run(c));
    std::ostringstream rows;
    write_aggregate_csv(rows, results.back().points);
    std::istringstream lines(rows.str());
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) combined << eta_label(eta) << ',' << line << '\n';
  }
  return results;
}

std::vector<RunResult> modes_study(const ExperimentConfig& config,
                                   std::span<const preference::Mode> modes) {
  if (modes.empty()) throw ConfigError("modes: list is empty");
  std::set<preference::Mode> seen;
  for (preference::Mode m : modes) {
    if (!seen.insert(m).second) {
      throw ConfigError("modes: duplicate mode " + std::string(preference::to_string(m)));
    }
  }
  std::vector<RunResult> results;
  std::filesystem::create_directories(config.out_dir);
  std::ofstream combined = open_out(config.out_dir / "modes.csv");
  combined << "mode,eval_index,trajectories,timesteps,mean_return,ci95_lo,ci95_hi,mean_length\n";
  std::ofstream finals = open_out(config.out_dir / "modes_final.csv");
  finals << "mode,seed,mean_return,mean_length,win_rate,won_mean_length\n";
  for (preference::Mode mode : modes) {
    ExperimentConfig c = config;
    c.agent.mode = mode;
    if (mode == preference::Mode::sudden_death) c.env.sudden_death = true;
    const std::string name(preference::to_string(mode));
    c.out_dir = config.out_dir / ("mode_" + name);
    results.push_back(run(c));
    std::ostringstream rows;
    write_aggregate_csv(rows, results.back().points);
    std::istringstream lines(rows.str());
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) combined << name << ',' << line << '\n';
    for (const SeedResult& s : results.back().seeds) {
      if (s.failed || s.rows.empty()) continue;
      const SeedRow& r = s.rows.back();
      fmt::print(finals, "{},{},{},{},{},{}\n", name, s.seed, cell(r.mean_return),
                 cell(r.mean_length), cell(r.win_rate), cell(r.won_mean_length));
    }
  }
  return results;
}

std::vector<SeedRow> read_seed_csv(std::istream& in) {
  std::vector<SeedRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 12) throw std::runtime_error("seed csv: expected 12 columns");
    auto num = [&](std::size_t i) { return cells[i].empty() ? kNaN : std::stod(cells[i]); };
    SeedRow r;
    r.eval_index = std::stoul(cells[0]);
    r.trajectories = std::stoul(cells[1]);
    r.timesteps = std::stoull(cells[2]);
    r.mean_return = num(3);
    r.mean_length = num(4);
    r.win_rate = num(5);
    r.won_mean_length = num(6);
    r.critic_loss = num(7);
    r.policy_entropy = num(8);
    r.greedy_return = num(9);
    r.greedy_length = num(10);
    r.greedy_win_rate = num(11);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace errl::harness
