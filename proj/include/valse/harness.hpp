#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "valse/core.hpp"
#include "valse/quantizer.hpp"
#include "valse/valse_ep.hpp"

namespace valse {

enum class Algorithm { valse_ep, valse_aqnm };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

struct ScenarioConfig {
  int n = 100;
  int k = 3;
  double snr_db = 20.0;
  std::optional<int> bit_depth = 1;  // nullopt: unquantized
  int trials = 50;
  std::uint64_t seed = 1;
  std::vector<double> fixed_freqs;
  double magnitude_mean = 1.0;
  double magnitude_std = 0.2;
  std::vector<Algorithm> algorithms{Algorithm::valse_ep};
  RunConfig run;
};

void validate(const ScenarioConfig& cfg);
std::string bit_depth_label(const std::optional<int>& bits);

/// Seed for trial i; depends only on (master, i).
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial);

/// Frequencies uniform on [-pi, pi) with all pairwise wrap distances above
/// 2π/N (unless fixed), magnitudes N(mean, std^2), phases uniform.
GroundTruth draw_truth(const ScenarioConfig& cfg, std::mt19937_64& rng);

/// σ² = ||z||^2 / (N 10^{snr/10}).
double noise_variance_for(const CVector& z, double snr_db);

/// Adds CN(0, σ² I) and quantizes when spec is given.
CVector apply_noise_and_quantize(const CVector& z, double snr_db, const QuantizerSpec* spec,
                                 std::mt19937_64& rng, double* sigma2_out = nullptr);

/// Quantizer used for a scenario: uniform with σ_z = sqrt(K).
std::optional<QuantizerSpec> scenario_quantizer(const ScenarioConfig& cfg);

struct TrialRecord {
  int scenario = 0;
  int trial = 0;
  Algorithm algorithm = Algorithm::valse_ep;
  int k = 0;
  int k_hat = 0;
  std::string metric;           // "dnmse" or "nmse"
  double signal_db = 0.0;
  double freq_sq_error = 0.0;   // NaN unless k_hat == k
  double crb_trace = 0.0;       // NaN when the Fisher matrix is singular
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
  bool failed = false;
  std::string error;
};

/// Runs all trials of one scenario on `threads` workers (0 = hardware).
std::vector<TrialRecord> run_scenario(const ScenarioConfig& cfg, int scenario_index, int threads);

struct AggregateRecord {
  int scenario = 0;
  Algorithm algorithm = Algorithm::valse_ep;
  int n = 0;
  int k = 0;
  double snr_db = 0.0;
  std::string bits;
  int trials = 0;
  int failures = 0;
  double success_rate = 0.0;
  std::string metric;
  double signal_db = 0.0;        // 10 log10 of the mean linear error over trials
  int gated = 0;
  double freq_mse_db = 0.0;      // over trials with k_hat == k
  double crb_gated_db = 0.0;     // CRB trace averaged over the same trials
  double crb_db = 0.0;           // CRB trace averaged over all trials
  int joint_gated = 0;
  double freq_mse_joint_db = 0.0;  // trials where every algorithm has k_hat == k
  double median_iterations = 0.0;
  double converged_rate = 0.0;
};

std::vector<AggregateRecord> aggregate(const std::vector<ScenarioConfig>& scenarios,
                                       const std::vector<TrialRecord>& trials);

/// Per-trial results; deterministic for a fixed seed.
void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& rows);
/// Per-trial wall-clock times, kept apart so the result files stay reproducible.
void write_timing_csv(std::ostream& os, const std::vector<TrialRecord>& rows);
void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRecord>& rows);

/// Unknown or malformed configuration entries.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentConfig {
  std::vector<ScenarioConfig> scenarios;
  int threads = 0;
  std::string source;  // normalized JSON of the input
};

/// Parses a JSON experiment description. List-valued N, K, snr_db and
/// bit_depth expand into the cartesian product of scenarios.
ExperimentConfig parse_experiment(const std::string& json_text);

/// Frequency CRB trace averaged over the scenario's `trials` truth draws (the
/// same draws the Monte Carlo trials use).
double scenario_crb_trace(const ScenarioConfig& cfg);

}  // namespace valse
