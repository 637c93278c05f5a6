#include "valse/valse_ep.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace valse {

namespace {

// With a single zero threshold the likelihood depends on z / sigma only.
bool scale_invariant(const Observation& obs) {
  if (!obs.is_quantized()) return false;
  const auto& t = obs.quantizer().thresholds;
  return t.size() == 3 && t[1] == 0.0;
}

}  // namespace

void validate(const RunConfig& cfg) {
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (!(cfg.init_v_ext > 0.0)) throw std::invalid_argument("init_v_ext must be > 0");
  if (cfg.noise_var && !(*cfg.noise_var > 0.0))
    throw std::invalid_argument("noise_var must be > 0");
}

InitialState initialize(const Observation& obs, const RunConfig& cfg) {
  validate(cfg);
  const int n = obs.size();
  if (n < 2) throw std::invalid_argument("initialize: need at least two samples");
  const CVector yq =
      obs.is_quantized() ? dequantize_aqnm(obs.quantizer(), obs.samples()) : obs.samples();

  InitialState init;
  init.sigma2 = cfg.noise_var ? *cfg.noise_var : toeplitz_noise_init(yq);
  init.ext_a = {CVector::Zero(n), RVector::Constant(n, cfg.init_v_ext)};
  const GaussianMessage post = posterior_moments(init.ext_a, obs, init.sigma2);
  init.ext_b = extrinsic_b(post, init.ext_a);

  const RVector precision = init.ext_b.var.cwiseInverse();
  const double energy = (init.ext_b.mean.cwiseAbs2().cwiseProduct(precision)).sum();
  init.prior.rho = 0.5;
  init.prior.tau = (energy - n) / (init.prior.rho * n * precision.sum());
  init.prior = clamp_prior(init.prior, n);
  init.freq = sequential_frequency_init(init.ext_b.mean, init.ext_b.var, init.prior);
  return init;
}

RunOutput run(const Observation& obs, const RunConfig& cfg, const IterationObserver& observer) {
  InitialState init = initialize(obs, cfg);
  const int n = obs.size();
  CVector pseudo_y = std::move(init.ext_b.mean);
  RVector pseudo_var = std::move(init.ext_b.var);
  double sigma2 = init.sigma2;
  PriorParams prior = init.prior;
  FrequencyPosterior freq = std::move(init.freq);

  RunOutput out;
  out.estimate.spectrum = CVector::Zero(n);
  CVector z_prev = CVector::Zero(n);
  const bool rescale = cfg.learn_noise && scale_invariant(obs);
  for (int t = 1; t <= cfg.max_iters; ++t) {
    JH jh = compute_jh(freq.a_hat, pseudo_y, pseudo_var);
    SupportState state = SupportState::empty(std::move(jh.J), std::move(jh.h));
    greedy_support_search(state, prior, 5 * n);
    if (state.size() == 0) {
      out.estimate = EstimateResult{};
      out.estimate.spectrum = CVector::Zero(n);
      out.trace.records.push_back({t, 0, sigma2, prior.rho, prior.tau, 0.0});
      out.trace.converged = false;
      return out;
    }
    prior = estimate_prior_params(state, prior);

    std::vector<int> order(state.active);
    std::sort(order.begin(), order.end());
    for (int i : order) infer_frequency(i, state, freq, pseudo_y, pseudo_var);

    LsePosterior post_a = posterior_lse(state, freq);
    const GaussianMessage ext_a = extrinsic_a(post_a.z, post_a.v, pseudo_y, pseudo_var);
    const GaussianMessage post_b = posterior_moments(ext_a, obs, sigma2);
    GaussianMessage ext_b = extrinsic_b(post_b, ext_a);
    double sigma2_next = cfg.learn_noise ? em_noise_update(pseudo_y, post_b, n) : sigma2;

    if (observer) {
      IterationState s;
      s.iteration = t;
      s.support = &state;
      s.freq = &freq;
      s.post_a = &post_a;
      s.ext_a = &ext_a;
      s.post_b = &post_b;
      s.ext_b = &ext_b;
      s.pseudo_y = &pseudo_y;
      s.pseudo_var = &pseudo_var;
      s.sigma2_used = sigma2;
      s.sigma2_next = sigma2_next;
      s.prior = prior;
      observer(s);
    }

    const double znorm = post_a.z.norm();
    const double change = znorm > 0.0 ? (post_a.z - z_prev).norm() / znorm : 0.0;
    out.trace.records.push_back(
        {t, post_a.estimate.model_order, sigma2, prior.rho, prior.tau, change});
    out.estimate = std::move(post_a.estimate);
    z_prev = post_a.z;
    pseudo_y = std::move(ext_b.mean);
    pseudo_var = std::move(ext_b.var);
    if (rescale) {
      // Same iterate up to a global scale: shrink the module-A side instead
      // of inflating sigma^2.
      const double c2 = sigma2_next / sigma2;
      const double c = std::sqrt(c2);
      pseudo_y /= c;
      pseudo_var /= c2;
      prior.tau /= c2;
      sigma2_next = sigma2;
    }
    sigma2 = sigma2_next;
    if (change < cfg.tol) {
      out.trace.converged = true;
      break;
    }
  }
  return out;
}

Property1Values check_property1(const CVector& y, const SupportState& state,
                                const FrequencyPosterior& freq) {
  const int n = static_cast<int>(y.size());
  const LsePosterior post = posterior_lse(state, freq);
  Property1Values v;
  v.sigma2_va = sigma2_variational(y, state, freq);
  v.sigma2_em = ((y - post.z).squaredNorm() + post.v.sum()) / n;
  return v;
}

}  // namespace valse
