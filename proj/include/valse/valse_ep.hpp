#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "valse/core.hpp"
#include "valse/mmse.hpp"
#include "valse/valse.hpp"

namespace valse {

struct RunConfig {
  int max_iters = 1000;
  double tol = 1e-6;
  bool learn_noise = true;
  double init_v_ext = 10.0;
  std::uint64_t seed = 0;
  std::optional<double> noise_var;  // known σ²; skips the Toeplitz initialization
};

void validate(const RunConfig& cfg);

struct IterationRecord {
  int iteration = 0;
  std::size_t model_order = 0;
  double sigma2 = 0.0;
  double rho = 0.0;
  double tau = 0.0;
  double rel_change = 0.0;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  bool converged = false;
  int iterations() const { return static_cast<int>(records.size()); }
};

/// Everything computed in one outer iteration, exposed to observers.
struct IterationState {
  int iteration = 0;
  const SupportState* support = nullptr;
  const FrequencyPosterior* freq = nullptr;
  const LsePosterior* post_a = nullptr;
  const GaussianMessage* ext_a = nullptr;
  const GaussianMessage* post_b = nullptr;
  const GaussianMessage* ext_b = nullptr;
  const CVector* pseudo_y = nullptr;    // ỹ used by module A
  const RVector* pseudo_var = nullptr;  // σ̃² used by module A
  double sigma2_used = 0.0;             // σ² in the module-B likelihood
  double sigma2_next = 0.0;
  PriorParams prior;
};

using IterationObserver = std::function<void(const IterationState&)>;

struct InitialState {
  GaussianMessage ext_a;
  GaussianMessage ext_b;
  PriorParams prior;
  double sigma2 = 0.0;
  FrequencyPosterior freq;
};

InitialState initialize(const Observation& obs, const RunConfig& cfg);

struct RunOutput {
  EstimateResult estimate;
  RunTrace trace;
};

RunOutput run(const Observation& obs, const RunConfig& cfg,
              const IterationObserver& observer = {});

struct Property1Values {
  double sigma2_va = 0.0;
  double sigma2_em = 0.0;
};

/// Noise variance from the closed variational form and from the EM form
/// (||y - z_post||^2 + sum v_post)/N, both evaluated on the same module-A
/// posterior.
Property1Values check_property1(const CVector& y, const SupportState& state,
                                const FrequencyPosterior& freq);

}  // namespace valse
