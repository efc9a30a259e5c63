// Acceptance checks. Prints one PASS/FAIL line per requested criterion and exits non-zero
// when any of them fails. Learning runs are cached under --work keyed by their full config,
// so criteria that share a configuration train it once.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "errl/agent.hpp"
#include "errl/config.hpp"
#include "errl/elo.hpp"
#include "errl/harness.hpp"
#include "errl/preference.hpp"
#include "errl/stats.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace errl;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path g_work = "acceptance_runs";

// ---------------------------------------------------------------------------------------
// Cached learning runs

std::string dump(const ExperimentConfig& c) {
  std::ostringstream out;
  write_key_values(out, to_key_values(c));
  return out.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Trains `c` into work/name, or reloads the seed CSVs when a completed run with the same
/// config is already there.
harness::RunResult cached_run(ExperimentConfig c, const std::string& name) {
  c.out_dir = g_work / name;
  c.write_judgments = false;
  c.write_checkpoints = false;
  const fs::path marker = c.out_dir / "complete";
  if (fs::exists(marker) && slurp(marker) == dump(c)) {
    harness::RunResult r;
    for (std::uint64_t s : c.seeds) {
      std::ifstream in(c.out_dir / fmt::format("seed_{}.csv", s));
      r.seeds.push_back({s, harness::read_seed_csv(in), false, {}});
    }
    r.points = harness::aggregate(r.seeds);
    spdlog::info("reusing {}", c.out_dir.string());
    return r;
  }
  fs::remove_all(c.out_dir);
  const auto start = Clock::now();
  harness::RunResult r = harness::run(c);
  spdlog::info("{} trained in {:.0f} s", name, seconds_since(start));
  if (r.failures() == 0) std::ofstream(marker, std::ios::binary) << dump(c);
  return r;
}

ExperimentConfig minipong_config(agent::Algo algo, double eta, preference::Mode mode) {
  ExperimentConfig c;
  c.env = env::EnvConfig::minipong(5, 600);
  c.agent.algo = algo;
  c.agent.eta = eta;
  c.agent.mode = mode;
  c.seeds = {1, 2, 3, 4, 5};
  c.total_trajectories = 5000;
  c.eval_every = 60;
  return c;
}

constexpr double kReturnThreshold = 3.0;
constexpr double kNever = std::numeric_limits<double>::infinity();

/// Trajectory count of the first evaluation window whose mean return reaches `threshold`.
double first_reach(const harness::SeedResult& s, double threshold) {
  for (const auto& row : s.rows) {
    if (row.mean_return >= threshold) return static_cast<double>(row.trajectories);
  }
  return kNever;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return kNever;
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string join(const std::vector<double>& v, const char* fmt_spec = "{:.3g}") {
  std::string out;
  for (double x : v) {
    if (!out.empty()) out += ' ';
    out += std::isinf(x) ? std::string("never") : fmt::format(fmt::runtime(fmt_spec), x);
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// 1. ELO arithmetic

Verdict criterion_1() {
  const auto start = Clock::now();
  std::size_t violations = 0;
  const double classic = elo::expected_score(1900, 1500, 400);
  if (std::abs(classic - 10.0 / 11.0) > 1e-12) ++violations;

  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> r(-3000, 3000), sc(0.5, 800), k(0.1, 64);
  const elo::MatchScore scores[] = {elo::MatchScore::win(), elo::MatchScore::draw(),
                                    elo::MatchScore::loss()};
  for (int i = 0; i < 100000; ++i) {
    // Ratings on a 1/64 grid keep a + c and b + c exact.
    auto grid = [](double x) { return std::round(x * 64.0) / 64.0; };
    const double a = grid(r(rng)), b = grid(r(rng)), s = sc(rng), c = grid(r(rng));
    const double e_ab = elo::expected_score(a, b, s);
    const double e_ba = elo::expected_score(b, a, s);
    if (std::abs(e_ab + e_ba - 1.0) > 1e-12) ++violations;
    if (std::abs(elo::expected_score(a + c, b + c, s) - e_ab) > 1e-12) ++violations;
    if (elo::expected_score(a + 1.0, b, s) < e_ab) ++violations;
    if (elo::expected_score(a, b + 1.0, s) > e_ab) ++violations;
    if (e_ab > 0.0 && e_ab < 1.0 && e_ba > 0.0 && e_ba < 1.0) {
      const elo::EloParams p{s, k(rng)};
      const elo::MatchScore sa = scores[i % 3];
      const double da = elo::elo_update(a, sa, e_ab, p) - a;
      const double db = elo::elo_update(b, sa.complement(), e_ba, p) - b;
      if (std::abs(da + db) > 1e-12 * std::max(1.0, std::abs(a) + std::abs(b))) ++violations;
    }
  }
  const double t = seconds_since(start);
  return {violations == 0 && t < 1.0,
          fmt::format("E(1900,1500,400)={:.15f} violations={} runtime={:.3f}s", classic,
                      violations, t)};
}

// ---------------------------------------------------------------------------------------
// 2. The uniform split minimizes sum softplus(delta) under a fixed total

Verdict criterion_2() {
  const auto start = Clock::now();
  std::mt19937_64 rng(202);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> log_scale(std::log(1e-3), std::log(2.0));
  const double totals[] = {-0.64, -0.1, 0.0, 0.02, 0.32, 1.5};
  std::size_t violations = 0, draws = 0;
  for (int k : {2, 5, 50, 500}) {
    for (double total : totals) {
      const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(k, total / k);
      const double best = elo::redistribution_objective(uniform);
      for (int trial = 0; trial < 1000; ++trial) {
        Eigen::VectorXd noise(k);
        for (int i = 0; i < k; ++i) noise(i) = g(rng);
        noise.array() -= noise.mean();
        noise *= std::exp(log_scale(rng)) / std::max(noise.norm(), 1e-300);
        const Eigen::VectorXd candidate = uniform + noise;
        ++draws;
        if (!(elo::redistribution_objective(candidate) > best)) ++violations;
      }
    }
  }
  const double t = seconds_since(start);
  return {violations == 0 && t < 10.0,
          fmt::format("{} constrained vectors, violations={} runtime={:.2f}s", draws, violations, t)};
}

// ---------------------------------------------------------------------------------------
// 3. Telescoping at gamma = 1

Verdict criterion_3() {
  oracles::Rng rng(303);
  std::uniform_int_distribution<int> len(1, 300);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Mlp<double> critic({4, 16, 16, 3});
    std::normal_distribution<double> w(0.0, 0.7);
    for (Eigen::Index j = 0; j < critic.parameter_count(); ++j) critic.parameters()(j) = w(rng);
    const auto t = oracles::random_trajectory(rng, 4, 3, len(rng));
    const double rated = agent::trajectory_elo(critic, t, 1.0);
    const Eigen::VectorXd first = errl::forward(critic, Mat<double>(t.states.col(0).cast<double>()));
    const double g1 = first(t.actions[0]);
    worst = std::max(worst, std::abs(rated - g1));
  }
  return {worst <= 1e-9, fmt::format("max |trajectory_elo - G(s_1,a_1)| = {:.3g}", worst)};
}

// ---------------------------------------------------------------------------------------
// 4. Analytic gradients against central differences

Verdict criterion_4() {
  oracles::Rng rng(404);
  const std::vector<std::pair<const char*, std::function<double()>>> checks = {
      {"pbrl", [&] { return oracles::pbrl_gradient_error(rng); }},
      {"lsq", [&] { return oracles::lsq_gradient_error(rng); }},
      {"critic", [&] { return oracles::critic_gradient_error(rng, false); }},
      {"critic_weighted", [&] { return oracles::critic_gradient_error(rng, true); }},
      {"policy", [&] { return oracles::policy_gradient_error(rng); }},
  };
  bool pass = true;
  std::string detail;
  for (const auto& [name, check] : checks) {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) worst = std::max(worst, check());
    pass = pass && worst < 1e-4;
    detail += fmt::format("{}{}={:.2e}", detail.empty() ? "" : " ", name, worst);
  }
  return {pass, "max relative error " + detail};
}

// ---------------------------------------------------------------------------------------
// 5. Judging rules

/// The rule tables written out independently of the library.
preference::Outcome reference_judge(const env::TrajectorySummary& a,
                                    const env::TrajectorySummary& b, preference::Mode mode) {
  using preference::Mode;
  using preference::Outcome;
  const double ra = a.hidden_return, rb = b.hidden_return;
  const double ka = static_cast<double>(a.length), kb = static_cast<double>(b.length);
  auto higher = [](double x, double y) { return x > y ? Outcome::a_wins : Outcome::b_wins; };
  auto lower = [](double x, double y) { return x < y ? Outcome::a_wins : Outcome::b_wins; };
  switch (mode) {
    case Mode::normal:
    case Mode::sudden_death:
      if (ra != rb) return higher(ra, rb);
      if (ra > 0) return Outcome::draw;
      return ka != kb ? higher(ka, kb) : Outcome::draw;
    case Mode::reward_only:
      return ra != rb ? higher(ra, rb) : Outcome::draw;
    case Mode::ball_control:
      if (ra != rb) return higher(ra, rb);
      return ka != kb ? higher(ka, kb) : Outcome::draw;
    case Mode::aggressive:
      if (ra != rb) return higher(ra, rb);
      if (ra > 0 && ka != kb) return lower(ka, kb);
      if (ra < 0 && ka != kb) return higher(ka, kb);
      return Outcome::draw;
    case Mode::length_first:
      if (ka != kb) return higher(ka, kb);
      return ra != rb ? higher(ra, rb) : Outcome::draw;
    case Mode::score_plus_length:
      return ra + ka != rb + kb ? higher(ra + ka, rb + kb) : Outcome::draw;
  }
  return Outcome::draw;
}

Verdict criterion_5() {
  std::vector<env::TrajectorySummary> grid;
  for (int r = -5; r <= 5; ++r) {
    for (std::size_t k : {1u, 2u, 10u, 11u, 12u, 50u, 299u, 300u, 301u, 600u}) {
      env::TrajectorySummary s;
      s.hidden_return = r;
      s.length = k;
      grid.push_back(s);
    }
  }
  std::size_t pairs = 0, violations = 0;
  for (preference::Mode m : preference::kAllModes) {
    const bool return_first =
        m != preference::Mode::length_first && m != preference::Mode::score_plus_length;
    for (const auto& a : grid) {
      if (preference::judge(a, a, m) != preference::Outcome::draw) ++violations;
      for (const auto& b : grid) {
        ++pairs;
        const auto ab = preference::judge(a, b, m);
        if (ab != reference_judge(a, b, m)) ++violations;
        if (preference::judge(b, a, m) != preference::mirror(ab)) ++violations;
        if (return_first && a.hidden_return > b.hidden_return && ab == preference::Outcome::b_wins)
          ++violations;
      }
    }
  }
  const std::size_t per_mode = pairs / preference::kAllModes.size();
  return {violations == 0 && per_mode >= 10000,
          fmt::format("{} pairs per mode over {} modes, violations={}", per_mode,
                      preference::kAllModes.size(), violations)};
}

// ---------------------------------------------------------------------------------------
// 6. Corridor

Verdict criterion_6() {
  const auto start = Clock::now();
  ExperimentConfig c;
  c.env = env::EnvConfig::corridor(50, 200);
  c.agent.eta = 0.01;
  c.seeds = {1, 2, 3, 4, 5};
  c.total_trajectories = 2000;
  c.eval_every = 40;
  c.greedy_eval = true;
  c.greedy_episodes = 20;

  auto solved = [](const harness::RunResult& r, std::vector<double>& reach) {
    int count = 0;
    for (const auto& s : r.seeds) {
      double at = kNever;
      for (const auto& row : s.rows) {
        if (row.greedy_win_rate >= 0.95) {
          at = static_cast<double>(row.trajectories);
          break;
        }
      }
      reach.push_back(at);
      count += std::isfinite(at) ? 1 : 0;
    }
    return count;
  };

  c.agent.algo = agent::Algo::errl;
  const auto errl_run = cached_run(c, "c6_corridor_errl");
  c.agent.algo = agent::Algo::ppo_sparse;
  const auto ppo_run = cached_run(c, "c6_corridor_ppo_sparse");
  std::vector<double> errl_reach, ppo_reach;
  const int errl_solved = solved(errl_run, errl_reach);
  const int ppo_solved = solved(ppo_run, ppo_reach);
  const double t = seconds_since(start);
  return {errl_solved >= 4 && t < 300.0,
          fmt::format("errl solved {}/5 (first goal-rate>=0.95 at {}); ppo_sparse solved {}/5 "
                      "(at {}); runtime={:.0f}s",
                      errl_solved, join(errl_reach, "{:.0f}"), ppo_solved,
                      join(ppo_reach, "{:.0f}"), t)};
}

// ---------------------------------------------------------------------------------------
// 7. MiniPong against the sparse-reward baseline

Verdict criterion_7() {
  const auto start = Clock::now();
  const auto errl_run =
      cached_run(minipong_config(agent::Algo::errl, 0.01, preference::Mode::normal), "minipong_errl_eta_0.01");
  const auto ppo_run = cached_run(
      minipong_config(agent::Algo::ppo_sparse, 0.01, preference::Mode::normal), "minipong_ppo_sparse");
  std::vector<double> reach;
  int reached = 0;
  for (const auto& s : errl_run.seeds) {
    reach.push_back(first_reach(s, kReturnThreshold));
    reached += std::isfinite(reach.back()) ? 1 : 0;
  }
  const double errl_final = errl_run.points.empty() ? -kNever : errl_run.points.back().mean_return;
  const double ppo_final = ppo_run.points.empty() ? -kNever : ppo_run.points.back().mean_return;
  std::vector<double> ppo_reach;
  for (const auto& s : ppo_run.seeds) ppo_reach.push_back(first_reach(s, kReturnThreshold));
  const double t = seconds_since(start);
  return {reached >= 4 && errl_final > ppo_final,
          fmt::format("errl reached +3 on {}/5 seeds (at {}); final mean return errl={:.3f} "
                      "ppo_sparse={:.3f} (ppo reached at {}); runtime={:.0f}s",
                      reached, join(reach, "{:.0f}"), errl_final, ppo_final,
                      join(ppo_reach, "{:.0f}"), t)};
}

// ---------------------------------------------------------------------------------------
// 8. Eta ablation

Verdict criterion_8() {
  const auto start = Clock::now();
  std::map<double, harness::RunResult> runs;
  for (double eta : {0.1, 0.01, 0.001}) {
    runs[eta] = cached_run(minipong_config(agent::Algo::errl, eta, preference::Mode::normal),
                           fmt::format("minipong_errl_eta_{}", eta));
  }
  // Spread of the learning curve: cross-seed SD at each evaluation point, averaged.
  auto mean_sd = [](const harness::RunResult& r) {
    double total = 0.0;
    for (const auto& p : r.points) total += stats::sample_sd(p.per_seed_returns);
    return r.points.empty() ? 0.0 : total / static_cast<double>(r.points.size());
  };
  auto median_reach = [](const harness::RunResult& r) {
    std::vector<double> v;
    for (const auto& s : r.seeds) v.push_back(first_reach(s, kReturnThreshold));
    return median(v);
  };
  const double sd_high = mean_sd(runs[0.1]), sd_mid = mean_sd(runs[0.01]), sd_low = mean_sd(runs[0.001]);
  const double reach_mid = median_reach(runs[0.01]), reach_low = median_reach(runs[0.001]);
  const bool spread_ok = sd_high > sd_mid;
  const bool slower_ok = std::isfinite(reach_mid) && reach_low > reach_mid;
  const double t = seconds_since(start);
  return {spread_ok && slower_ok,
          fmt::format("mean cross-seed SD eta=0.1:{:.3f} eta=0.01:{:.3f} eta=0.001:{:.3f}; "
                      "median trajectories to +3 eta=0.01:{} eta=0.001:{}; runtime={:.0f}s",
                      sd_high, sd_mid, sd_low, join({reach_mid}, "{:.0f}"),
                      join({reach_low}, "{:.0f}"), t)};
}

// ---------------------------------------------------------------------------------------
// 9. Preference modes

constexpr std::size_t kFinalWindows = 5;

/// Mean length of won episodes over the last evaluation windows, each window weighted by
/// its number of wins. NaN when none of them contains a win.
double final_won_length(const harness::SeedResult& s, std::size_t eval_every) {
  double weighted = 0.0, wins = 0.0;
  const std::size_t from = s.rows.size() > kFinalWindows ? s.rows.size() - kFinalWindows : 0;
  for (std::size_t i = from; i < s.rows.size(); ++i) {
    const auto& row = s.rows[i];
    const double w = row.win_rate * static_cast<double>(eval_every);
    if (w > 0 && std::isfinite(row.won_mean_length)) {
      weighted += w * row.won_mean_length;
      wins += w;
    }
  }
  return wins > 0 ? weighted / wins : std::numeric_limits<double>::quiet_NaN();
}

Verdict criterion_9() {
  const auto start = Clock::now();
  std::map<preference::Mode, std::vector<double>> lengths;
  for (auto mode : {preference::Mode::ball_control, preference::Mode::aggressive}) {
    const auto c = minipong_config(agent::Algo::errl, 0.01, mode);
    const auto r = cached_run(c, fmt::format("minipong_errl_mode_{}", preference::to_string(mode)));
    for (const auto& s : r.seeds) {
      const double v = final_won_length(s, c.eval_every);
      if (std::isfinite(v)) lengths[mode].push_back(v);
    }
  }
  const auto& bc = lengths[preference::Mode::ball_control];
  const auto& ag = lengths[preference::Mode::aggressive];
  const double t = seconds_since(start);
  if (bc.size() < 2 || ag.size() < 2) {
    return {false, fmt::format("too few seeds with won episodes: ball_control {} aggressive {}",
                               bc.size(), ag.size())};
  }
  const auto w = stats::welch_t_test(bc, ag);
  return {w.p_greater < 0.05,
          fmt::format("won-episode length ball_control [{}] vs aggressive [{}]; Welch t={:.3f} "
                      "dof={:.2f} one-sided p={:.4g}; runtime={:.0f}s",
                      join(bc, "{:.1f}"), join(ag, "{:.1f}"), w.t, w.dof, w.p_greater, t)};
}

// ---------------------------------------------------------------------------------------
// 10. Reproducibility

Verdict criterion_10() {
  ExperimentConfig c = minipong_config(agent::Algo::errl, 0.01, preference::Mode::normal);
  c.seeds = {7, 8};
  c.total_trajectories = 360;
  c.write_checkpoints = false;
  std::vector<std::string> names;
  std::map<std::string, std::string> first;
  std::size_t compared = 0, differing = 0;
  for (int pass = 0; pass < 2; ++pass) {
    c.out_dir = g_work / fmt::format("c10_repeat_{}", pass);
    fs::remove_all(c.out_dir);
    harness::run(c);
    for (const auto& entry : fs::directory_iterator(c.out_dir)) {
      if (entry.path().extension() != ".csv") continue;
      const std::string name = entry.path().filename().string();
      const std::string bytes = slurp(entry.path());
      if (pass == 0) {
        first[name] = bytes;
      } else {
        ++compared;
        if (first.count(name) == 0 || first[name] != bytes) ++differing;
      }
    }
  }
  if (compared != first.size()) differing += first.size() > compared ? first.size() - compared : 0;
  return {compared > 0 && differing == 0,
          fmt::format("{} CSV files compared, {} differ", compared, differing)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string criteria = "1,2,3,4,5,6,7,8,9,10";
  std::string work = g_work.string();
  app.add_option("--criteria", criteria, "comma-separated criterion numbers");
  app.add_option("--work", work, "directory for training runs");
  CLI11_PARSE(app, argc, argv);
  g_work = work;
  fs::create_directories(g_work);

  const char* level = std::getenv("ERRL_LOG_LEVEL");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);

  const std::map<int, Verdict (*)()> all = {
      {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4},
      {5, criterion_5}, {6, criterion_6}, {7, criterion_7}, {8, criterion_8},
      {9, criterion_9}, {10, criterion_10}};

  std::set<int> wanted;
  std::stringstream ss(criteria);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    const int n = std::stoi(item);
    if (all.count(n) == 0) {
      std::cerr << "unknown criterion " << n << '\n';
      return 2;
    }
    wanted.insert(n);
  }

  bool all_pass = true;
  for (int n : wanted) {
    Verdict v;
    try {
      v = all.at(n)();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    all_pass = all_pass && v.pass;
    std::cout << fmt::format("criterion {:>2}: {} {}", n, v.pass ? "PASS" : "FAIL", v.detail)
              << std::endl;
  }
  return all_pass ? 0 : 1;
}
