#ifndef ERRL_HARNESS_HPP
#define ERRL_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "errl/config.hpp"

namespace errl::harness {

/// Statistics of one evaluation window of one seed. Fields that do not apply are NaN and
/// are written as empty CSV cells.
struct SeedRow {
  std::size_t eval_index = 0;
  std::size_t trajectories = 0;  // cumulative
  std::uint64_t timesteps = 0;   // cumulative
  double mean_return = 0.0;
  double mean_length = 0.0;
  double win_rate = 0.0;         // share of episodes with positive hidden return
  double won_mean_length = 0.0;  // mean length over those episodes
  double critic_loss = 0.0;      // mean over the window's updates
  double policy_entropy = 0.0;
  double greedy_return = 0.0;
  double greedy_length = 0.0;
  double greedy_win_rate = 0.0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<SeedRow> rows;
  bool failed = false;
  std::string error;
};

struct EvalPoint {
  std::size_t eval_index = 0;
  std::size_t trajectories = 0;
  double timesteps = 0.0;  // mean over seeds
  double mean_return = 0.0;
  double ci95_lo = 0.0;
  double ci95_hi = 0.0;
  double mean_length = 0.0;
  std::vector<double> per_seed_returns;
};

/// Trains one seed. Judgments go to `judgments` when it is non-null. Exceptions are
/// caught and reported through `failed` / `error`.
SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed,
                    std::ostream* judgments = nullptr,
                    const std::filesystem::path& checkpoint_dir = {});

/// Mean and 95% interval across the seeds that completed, per evaluation index.
std::vector<EvalPoint> aggregate(std::span<const SeedResult> seeds);

void write_seed_csv(std::ostream& out, std::span<const SeedRow> rows);
void write_aggregate_csv(std::ostream& out, std::span<const EvalPoint> points);
void write_judgment_header(std::ostream& out);

struct RunResult {
  std::vector<SeedResult> seeds;
  std::vector<EvalPoint> points;
  std::size_t failures() const;
};

/// Runs every seed and writes, under config.out_dir: config.txt, seed_<s>.csv,
/// judgments_seed_<s>.csv, aggregate.csv, failures.csv (when a seed failed) and
/// checkpoints/seed_<s>/.
RunResult run(const ExperimentConfig& config);

/// One full run per eta under out_dir/eta_<eta>, plus out_dir/ablation.csv in long format
/// keyed by eta. Throws ConfigError on an empty list or a repeated value.
std::vector<RunResult> ablation(const ExperimentConfig& config, std::span<const double> etas);

/// One full run per preference mode under out_dir/mode_<mode>, plus out_dir/modes.csv
/// (aggregate rows keyed by mode) and out_dir/modes_final.csv (final window per seed).
/// sudden_death also switches the environment's sudden-death termination on.
std::vector<RunResult> modes_study(const ExperimentConfig& config,
                                   std::span<const preference::Mode> modes);

/// Reads a seed CSV written by write_seed_csv. Empty cells come back as NaN.
std::vector<SeedRow> read_seed_csv(std::istream& in);

}  // namespace errl::harness

#endif  // ERRL_HARNESS_HPP
