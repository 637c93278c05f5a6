#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "valse/valse.hpp"

namespace valse {

double sigma2_variational(const CVector& y, const SupportState& state,
                          const FrequencyPosterior& freq) {
  const int n = static_cast<int>(y.size());
  const int s = state.size();
  CMatrix A(n, s);
  for (int r = 0; r < s; ++r) A.col(r) = freq.a_hat.col(state.active[r]);
  CMatrix Jp = A.adjoint() * A;
  Jp.diagonal().setConstant(static_cast<double>(n));
  double acc = (y - A * state.w).squaredNorm() / n;
  acc += (Jp * state.C).trace().real() / n;
  for (int r = 0; r < s; ++r)
    acc += std::norm(state.w[r]) * (1.0 - A.col(r).squaredNorm() / n);
  return acc;
}

ValseOutcome run_valse(const CVector& y, const ValseConfig& cfg, const ValseObserver& observer) {
  const int n = static_cast<int>(y.size());
  if (n < 2) throw std::invalid_argument("run_valse: need at least two samples");
  if (cfg.max_iters < 1 || !(cfg.tol > 0.0)) throw std::invalid_argument("run_valse: bad config");

  double sigma2 = cfg.noise_var ? *cfg.noise_var : toeplitz_noise_init(y);
  if (!(sigma2 > 0.0)) throw std::invalid_argument("run_valse: noise variance must be > 0");

  PriorParams prior;
  prior.rho = 0.5;
  prior.tau = (y.squaredNorm() / sigma2 - n) / (prior.rho * n * (n / sigma2));
  prior = clamp_prior(prior, n);
  FrequencyPosterior freq = sequential_frequency_init(y, RVector::Constant(n, sigma2), prior);

  ValseOutcome out;
  CVector z_prev = CVector::Zero(n);
  for (int t = 1; t <= cfg.max_iters; ++t) {
    CMatrix J = freq.a_hat.adjoint() * freq.a_hat / sigma2;
    J.diagonal().setConstant(n / sigma2);
    CVector h = freq.a_hat.adjoint() * y / sigma2;
    SupportState state = SupportState::empty(std::move(J), std::move(h));
    greedy_support_search(state, prior, 5 * n);
    out.iterations = t;
    if (state.size() == 0) {
      out.estimate = EstimateResult{};
      out.estimate.spectrum = CVector::Zero(n);
      out.sigma2 = sigma2;
      return out;
    }
    prior = estimate_prior_params(state, prior);

    std::vector<int> order(state.active);
    std::sort(order.begin(), order.end());
    for (int i : order) {
      const int p = state.position[i];
      CVector rest = y;
      CVector cross = CVector::Zero(n);
      for (int r = 0; r < state.size(); ++r) {
        if (r == p) continue;
        rest -= freq.a_hat.col(state.active[r]) * state.w[r];
        cross += freq.a_hat.col(state.active[r]) * state.C(r, p);
      }
      const CVector eta = (2.0 / sigma2) * (rest * std::conj(state.w[p]) - cross);
      freq.set(i, project_von_mises(eta));
    }

    LsePosterior post = posterior_lse(state, freq);
    const double sigma2_next = cfg.noise_var ? sigma2 : sigma2_variational(y, state, freq);
    if (observer) {
      ValseIteration it;
      it.iteration = t;
      it.z_hat = &post.z;
      it.v_post = &post.v;
      it.estimate = &post.estimate;
      it.sigma2_used = sigma2;
      it.sigma2_next = sigma2_next;
      it.prior = prior;
      observer(it);
    }
    const double znorm = post.z.norm();
    const double change = znorm > 0.0 ? (post.z - z_prev).norm() / znorm : 0.0;
    out.estimate = std::move(post.estimate);
    sigma2 = sigma2_next;
    z_prev = post.z;
    if (change < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.sigma2 = sigma2;
  return out;
}

}  // namespace valse
