#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "specquant/quantizer.hpp"
#include "specquant/spectrum.hpp"

namespace specquant {

enum class SweepKind { ContinuousPower, AtomCount };

/// Placement rules for the models used in the sweeps.
struct ModelTemplate {
  std::vector<double> atom_freqs{-0.4, -0.2};  ///< fixed atoms for the P_c sweep
  Segment band{0.05, 0.15, 0.0};               ///< continuous part; power set per point
  /// Random atoms of the k sweep must be more than separation_scale / N apart.
  double separation_scale = 1.0;
  int max_rejections = 10000;
};

struct SweepConfig {
  SweepKind kind = SweepKind::ContinuousPower;
  Eigen::Index n = 64;
  double snr_db = 20.0;  ///< +inf for noiseless runs
  int trials = 200;
  std::uint64_t master_seed = 7;
  std::vector<double> pc_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<int> k_grid{1, 2, 3, 4, 5};
  double pc = 0.3;  ///< continuous power for the k sweep
  ModelTemplate model;
  double epsilon_scale = 1.0;
  unsigned threads = 0;  ///< 0 = hardware concurrency

  void validate() const;
  std::size_t grid_size() const;
  double grid_value(std::size_t point) const;
};

void to_json(nlohmann::json& j, const SweepConfig& config);
/// Keys absent from `j` keep their values in `config`; unknown keys throw.
void apply_json(const nlohmann::json& j, SweepConfig& config);

/// Atoms share 1 - P_c equally; the band carries P_c.
SpectralModel continuous_power_model(const ModelTemplate& tmpl, double pc);
/// k atoms of power (1 - P_c)/k at random frequencies in [-1/2, 1/2),
/// pairwise circular separation > separation_scale / N.
SpectralModel atom_count_model(const ModelTemplate& tmpl, double pc, int k, Eigen::Index n,
                               std::uint64_t seed);

struct TrialOutcome {
  double e_mmse = 0.0;
  double e_blind = 0.0;
  double e_mmse_expected = 0.0;  ///< analytic window MMSE for the trial's model
  bool converged = false;
  int iterations = 0;
  double max_abs_q = 0.0;
  double min_peak_abs_q = 1.0;
  std::size_t atoms_found = 0;
  double fit_gap = 0.0;
  std::uint64_t seed = 0;
};

struct SweepPoint {
  double value = 0.0;  ///< P_c or k
  double e_mmse_mean = 0.0;
  double e_mmse_se = 0.0;
  double e_blind_mean = 0.0;
  double e_blind_se = 0.0;
  double e_mmse_expected = 0.0;
  int trials = 0;
  int failures = 0;
  std::vector<TrialOutcome> outcomes;
};

struct SweepResult {
  SweepKind kind = SweepKind::ContinuousPower;
  std::vector<SweepPoint> points;

  int total_trials() const;
  int total_failures() const;
};

/// (1/N) |g_hat - g|^2.
double normalized_error(const cvec& g_hat, const cvec& g);

/// Seed for one trial, derived from the master seed, the sweep kind, the
/// grid value (not its index) and the trial index.
std::uint64_t trial_seed(const SweepConfig& config, std::size_t point, int trial_index);

TrialOutcome run_trial(const SweepConfig& config, std::size_t point, int trial_index);

using ProgressFn = std::function<void(const SweepPoint&)>;

/// Runs every (point, trial) pair on a worker pool; the result does not
/// depend on the number of threads.
SweepResult run_sweep(const SweepConfig& config, const ProgressFn& progress = {});
SweepResult sweep_pc(SweepConfig config, const ProgressFn& progress = {});
SweepResult sweep_k(SweepConfig config, const ProgressFn& progress = {});

/// Columns: sweep_var, e_mmse_mean, e_mmse_se, e_blind_mean, e_blind_se, trials, failures.
std::string sweep_csv(const SweepResult& result);

struct ProbePoint {
  long horizon = 0;
  double mmse = 0.0;
  double genie = 0.0;
};

struct Theorem1Probe {
  std::vector<ProbePoint> curve;
  double continuous_power = 0.0;
  bool genie_ordered = true;  ///< genie <= mmse + 1e-8 at every T
};

Theorem1Probe theorem1_probe(const SpectralModel& model, double sigma2, Eigen::Index n,
                             const std::vector<long>& horizons);

/// Columns: T, mmse, genie_mmse.
std::string theorem1_csv(const Theorem1Probe& probe);

/// Sum by recursive halving; bounds rounding growth to O(log n).
double pairwise_sum(const double* data, std::size_t count);

/// Runs fn(i) for i in [0, count) on `threads` workers (0 = all cores).
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace specquant
