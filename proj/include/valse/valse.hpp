#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "valse/core.hpp"
#include "valse/mmse.hpp"
#include "valse/von_mises.hpp"

namespace valse {

inline constexpr double kTauMin = 1e-12;

/// Per-component von Mises posteriors; column i of a_hat is E[a(theta_i)].
struct FrequencyPosterior {
  RVector mu;
  RVector kappa;
  CMatrix a_hat;

  int size() const { return static_cast<int>(mu.size()); }
  /// N components with kappa = 0.
  static FrequencyPosterior uniform(int n);
  void set(int i, const VonMises& vm);
};

struct PriorParams {
  double rho = 0.5;
  double tau = 1.0;
};

/// ρ ∈ [1/(10N), 1 - 1/(10N)], τ >= kTauMin.
PriorParams clamp_prior(PriorParams p, int n);

/// Active set with the weight posterior CN(w, C) restricted to it. Positions in
/// w and C follow the order of `active`.
struct SupportState {
  CMatrix J;
  CVector h;
  std::vector<int> active;
  std::vector<int> position;  // position[k] in active, -1 when inactive
  CVector w;
  CMatrix C;
  int updates_since_refresh = 0;

  static SupportState empty(CMatrix J, CVector h);
  int size() const { return static_cast<int>(active.size()); }
  bool is_active(int k) const { return position[k] >= 0; }
  int dimension() const { return static_cast<int>(h.size()); }
};

/// J_ij = a_i^H Σ^{-1} a_j (i != j), J_ii = tr(Σ^{-1}), h = A^H Σ^{-1} pseudo_y,
/// with Σ = diag(pseudo_var).
struct JH {
  CMatrix J;
  CVector h;
};
JH compute_jh(const CMatrix& a_hat, const CVector& pseudo_y, const RVector& pseudo_var);

struct Activation {
  double delta = 0.0;
  cplx u;
  double v = 0.0;
  bool valid = false;  // false when v <= 0
};

Activation delta_activate(int k, const SupportState& state, const PriorParams& prior);
double delta_deactivate(int k, const SupportState& state, const PriorParams& prior);

/// Rank-one updates of (w, C).
void apply_activation(SupportState& state, int k, const Activation& act);
void apply_deactivation(SupportState& state, int k);

/// Recomputes (w, C) from (J, h) on the current support by dense inversion.
void refresh_weights(SupportState& state, const PriorParams& prior);

/// Flip search on ln Z(s). Stops when no flip increases ln Z or after
/// max_flips flips.
void greedy_support_search(SupportState& state, const PriorParams& prior, int max_flips);

/// ρ = |S|/N, τ = (w^H w + tr C)/|S|, clamped. Empty support keeps previous.
PriorParams estimate_prior_params(const SupportState& state, const PriorParams& previous);

/// η_i = 2Σ^{-1}[(pseudo_y - Σ_{l∈S\i} a_l w_l) w_i^* - Σ_{l∈S\i} a_l C_{l,i}].
CVector frequency_eta(int i, const SupportState& state, const FrequencyPosterior& freq,
                      const CVector& pseudo_y, const RVector& pseudo_var);

void infer_frequency(int i, const SupportState& state, FrequencyPosterior& freq,
                     const CVector& pseudo_y, const RVector& pseudo_var);

struct LsePosterior {
  CVector z;
  RVector v;
  EstimateResult estimate;
};

LsePosterior posterior_lse(const SupportState& state, const FrequencyPosterior& freq);

GaussianMessage extrinsic_a(const CVector& z_post, const RVector& v_post,
                            const CVector& pseudo_y, const RVector& pseudo_var);

/// Biased-ACF Hermitian Toeplitz matrix of y; returns the mean of its lowest
/// floor(N/4) eigenvalues (at least one), floored at a small positive value.
double toeplitz_noise_init(const CVector& y);

/// Sequential frequency initialization: component i is initialized from the
/// residual after removing components 1..i-1, using the heteroscedastic
/// weighting diag(pseudo_var)^{-1}.
FrequencyPosterior sequential_frequency_init(const CVector& pseudo_y, const RVector& pseudo_var,
                                             const PriorParams& prior);

// ---------------------------------------------------------------------------
// Homogeneous-noise VALSE on linear observations y = z + CN(0, σ² I).

struct ValseConfig {
  int max_iters = 1000;
  double tol = 1e-6;
  std::optional<double> noise_var;  // fixed σ² when set, learned otherwise
};

struct ValseIteration {
  int iteration = 0;
  const CVector* z_hat = nullptr;
  const RVector* v_post = nullptr;
  const EstimateResult* estimate = nullptr;
  double sigma2_used = 0.0;
  double sigma2_next = 0.0;
  PriorParams prior;
};

struct ValseOutcome {
  EstimateResult estimate;
  int iterations = 0;
  bool converged = false;
  double sigma2 = 0.0;
};

using ValseObserver = std::function<void(const ValseIteration&)>;

ValseOutcome run_valse(const CVector& y, const ValseConfig& cfg,
                       const ValseObserver& observer = {});

/// Noise variance in closed variational form:
/// (1/N)||y - A w||^2 + (1/N) tr(J' C) + Σ |w_i|^2 (1 - ||a_i||^2/N),
/// with J'_ii = N and J'_ij = a_i^H a_j.
double sigma2_variational(const CVector& y, const SupportState& state,
                          const FrequencyPosterior& freq);

}  // namespace valse
