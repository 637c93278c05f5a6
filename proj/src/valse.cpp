#include "valse/valse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace valse {

FrequencyPosterior FrequencyPosterior::uniform(int n) {
  FrequencyPosterior f;
  f.mu = RVector::Zero(n);
  f.kappa = RVector::Zero(n);
  f.a_hat = CMatrix::Zero(n, n);
  if (n > 0) f.a_hat.row(0).setOnes();
  return f;
}

void FrequencyPosterior::set(int i, const VonMises& vm) {
  mu[i] = vm.mu;
  kappa[i] = vm.kappa;
  a_hat.col(i) = vm_moments(vm.mu, vm.kappa, static_cast<int>(a_hat.rows()));
}

PriorParams clamp_prior(PriorParams p, int n) {
  const double rho_min = 1.0 / (10.0 * n);
  p.rho = std::clamp(p.rho, rho_min, 1.0 - rho_min);
  if (!(p.tau >= kTauMin)) p.tau = kTauMin;
  return p;
}

SupportState SupportState::empty(CMatrix J, CVector h) {
  SupportState s;
  s.position.assign(h.size(), -1);
  s.J = std::move(J);
  s.h = std::move(h);
  s.w = CVector(0);
  s.C = CMatrix(0, 0);
  return s;
}

JH compute_jh(const CMatrix& a_hat, const CVector& pseudo_y, const RVector& pseudo_var) {
  if ((pseudo_var.array() <= 0.0).any())
    throw std::invalid_argument("compute_jh: pseudo variances must be positive");
  const RVector precision = pseudo_var.cwiseInverse();
  const CMatrix weighted = precision.asDiagonal() * a_hat;
  JH out;
  out.J = a_hat.adjoint() * weighted;
  out.J.diagonal().setConstant(precision.sum());
  out.h = weighted.adjoint() * pseudo_y;
  return out;
}

namespace {

double log_odds(const PriorParams& p) { return std::log(p.rho / (1.0 - p.rho)); }

CVector coupling(const SupportState& s, int k) {
  CVector j(s.size());
  for (int r = 0; r < s.size(); ++r) j[r] = s.J(s.active[r], k);
  return j;
}

CVector h_active(const SupportState& s) {
  CVector h(s.size());
  for (int r = 0; r < s.size(); ++r) h[r] = s.h[s.active[r]];
  return h;
}

}  // namespace

Activation delta_activate(int k, const SupportState& state, const PriorParams& prior) {
  if (state.is_active(k)) throw std::logic_error("delta_activate: component already active");
  const CVector j = coupling(state, k);
  const CVector cj = state.C * j;
  const double denom = state.J(k, k).real() + 1.0 / prior.tau - j.dot(cj).real();
  Activation a;
  if (!(denom > 0.0)) return a;
  a.v = 1.0 / denom;
  a.u = a.v * (state.h[k] - j.dot(state.w));
  a.delta = std::log(a.v / prior.tau) + std::norm(a.u) / a.v + log_odds(prior);
  a.valid = true;
  return a;
}

double delta_deactivate(int k, const SupportState& state, const PriorParams& prior) {
  const int p = state.position.at(k);
  if (p < 0) throw std::logic_error("delta_deactivate: component not active");
  const double ckk = state.C(p, p).real();
  return -std::log(ckk / prior.tau) - std::norm(state.w[p]) / ckk - log_odds(prior);
}

void apply_activation(SupportState& state, int k, const Activation& act) {
  const int s = state.size();
  const CVector cj = state.C * coupling(state, k);
  CMatrix C(s + 1, s + 1);
  C.topLeftCorner(s, s) = state.C + act.v * cj * cj.adjoint();
  C.topRightCorner(s, 1) = -act.v * cj;
  C.bottomLeftCorner(1, s) = -act.v * cj.adjoint();
  C(s, s) = act.v;
  CVector w(s + 1);
  w.head(s) = state.w - act.u * cj;
  w[s] = act.u;
  state.C = std::move(C);
  state.w = std::move(w);
  state.active.push_back(k);
  state.position[k] = s;
  ++state.updates_since_refresh;
}

void apply_deactivation(SupportState& state, int k) {
  const int p = state.position.at(k);
  if (p < 0) throw std::logic_error("apply_deactivation: component not active");
  const int s = state.size();
  const CVector c = state.C.col(p);
  const cplx ckk = state.C(p, p);
  const CMatrix full = state.C - c * c.adjoint() / ckk;
  const CVector wfull = state.w - (state.w[p] / ckk) * c;

  std::vector<int> keep;
  keep.reserve(s - 1);
  for (int r = 0; r < s; ++r)
    if (r != p) keep.push_back(r);
  state.C.resize(s - 1, s - 1);
  state.w.resize(s - 1);
  for (int a = 0; a < s - 1; ++a) {
    state.w[a] = wfull[keep[a]];
    for (int b = 0; b < s - 1; ++b) state.C(a, b) = full(keep[a], keep[b]);
  }
  state.active.erase(state.active.begin() + p);
  state.position[k] = -1;
  for (int r = p; r < s - 1; ++r) state.position[state.active[r]] = r;
  ++state.updates_since_refresh;
}

void refresh_weights(SupportState& state, const PriorParams& prior) {
  const int s = state.size();
  state.updates_since_refresh = 0;
  if (s == 0) {
    state.C.resize(0, 0);
    state.w.resize(0);
    return;
  }
  CMatrix M(s, s);
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b) M(a, b) = state.J(state.active[a], state.active[b]);
  M.diagonal().array() += 1.0 / prior.tau;
  Eigen::LDLT<CMatrix> ldlt(M);
  state.C = ldlt.solve(CMatrix::Identity(s, s));
  state.C = 0.5 * (state.C + state.C.adjoint()).eval();
  state.w = state.C * h_active(state);
}

void greedy_support_search(SupportState& state, const PriorParams& prior, int max_flips) {
  constexpr int kRefreshEvery = 100;
  const int n = state.dimension();
  const double lo = log_odds(prior);
  std::vector<double> delta(n);
  std::vector<Activation> acts(n);

  for (int flip = 0; flip < max_flips; ++flip) {
    bool retried = false;
    for (;;) {
      const int s = state.size();
      CMatrix js(s, n);
      for (int r = 0; r < s; ++r) js.row(r) = state.J.row(state.active[r]);
      const CMatrix cjs = state.C * js;
      const CVector jw = js.adjoint() * state.w;
      bool breakdown = false;
      for (int k = 0; k < n; ++k) {
        const int p = state.position[k];
        if (p >= 0) {
          const double ckk = state.C(p, p).real();
          delta[k] = -std::log(ckk / prior.tau) - std::norm(state.w[p]) / ckk - lo;
          continue;
        }
        const double quad = s > 0 ? js.col(k).dot(cjs.col(k)).real() : 0.0;
        const double denom = state.J(k, k).real() + 1.0 / prior.tau - quad;
        Activation& a = acts[k];
        if (!(denom > 0.0)) {
          a.valid = false;
          delta[k] = -std::numeric_limits<double>::infinity();
          breakdown = true;
          continue;
        }
        a.valid = true;
        a.v = 1.0 / denom;
        a.u = a.v * (state.h[k] - jw[k]);
        a.delta = std::log(a.v / prior.tau) + std::norm(a.u) / a.v + lo;
        delta[k] = a.delta;
      }
      if (breakdown && !retried && state.updates_since_refresh > 0) {
        refresh_weights(state, prior);
        retried = true;
        continue;
      }
      break;
    }

    const int best = static_cast<int>(std::max_element(delta.begin(), delta.end()) - delta.begin());
    if (!(delta[best] > 0.0)) return;
    if (state.is_active(best)) {
      apply_deactivation(state, best);
    } else {
      apply_activation(state, best, acts[best]);
    }
    if (state.updates_since_refresh >= kRefreshEvery) refresh_weights(state, prior);
  }
}

PriorParams estimate_prior_params(const SupportState& state, const PriorParams& previous) {
  const int n = state.dimension();
  const int s = state.size();
  if (s == 0) return clamp_prior(previous, n);
  PriorParams p;
  p.rho = static_cast<double>(s) / n;
  p.tau = (state.w.squaredNorm() + state.C.trace().real()) / s;
  return clamp_prior(p, n);
}

namespace {

CMatrix active_atoms(const SupportState& state, const FrequencyPosterior& freq) {
  CMatrix A(freq.a_hat.rows(), state.size());
  for (int r = 0; r < state.size(); ++r) A.col(r) = freq.a_hat.col(state.active[r]);
  return A;
}

}  // namespace

CVector frequency_eta(int i, const SupportState& state, const FrequencyPosterior& freq,
                      const CVector& pseudo_y, const RVector& pseudo_var) {
  const int p = state.position.at(i);
  if (p < 0) throw std::logic_error("frequency_eta: component not active");
  const CMatrix A = active_atoms(state, freq);
  const CVector ai = freq.a_hat.col(i);
  const CVector residual = pseudo_y - A * state.w + ai * state.w[p];
  const CVector cross = A * state.C.col(p) - ai * state.C(p, p);
  const CVector inner = residual * std::conj(state.w[p]) - cross;
  return 2.0 * pseudo_var.cwiseInverse().cwiseProduct(inner);
}

void infer_frequency(int i, const SupportState& state, FrequencyPosterior& freq,
                     const CVector& pseudo_y, const RVector& pseudo_var) {
  freq.set(i, project_von_mises(frequency_eta(i, state, freq, pseudo_y, pseudo_var)));
}

LsePosterior posterior_lse(const SupportState& state, const FrequencyPosterior& freq) {
  const Eigen::Index n = freq.a_hat.rows();
  LsePosterior out;
  out.z = CVector::Zero(n);
  out.v = RVector::Zero(n);
  std::vector<int> order(state.active);
  std::sort(order.begin(), order.end());
  out.estimate.model_order = order.size();
  out.estimate.support = order;
  for (int k : order) {
    out.estimate.freqs.push_back(freq.mu[k]);
    out.estimate.weights.push_back(state.w[state.position[k]]);
  }
  if (state.size() > 0) {
    const CMatrix A = active_atoms(state, freq);
    out.z = A * state.w;
    const CMatrix AC = A * state.C;
    const RMatrix mag2 = A.cwiseAbs2();
    const RVector w2 = state.w.cwiseAbs2();
    const RVector cdiag = state.C.diagonal().real();
    const double wnorm = w2.sum();
    const double ctrace = cdiag.sum();
    const RVector spread = (AC.array() * A.conjugate().array()).real().rowwise().sum();
    out.v = spread + (RVector::Constant(n, wnorm) - mag2 * w2) +
            (RVector::Constant(n, ctrace) - mag2 * cdiag);
  }
  out.estimate.spectrum = out.z;
  return out;
}

GaussianMessage extrinsic_a(const CVector& z_post, const RVector& v_post,
                            const CVector& pseudo_y, const RVector& pseudo_var) {
  return gaussian_divide(z_post, v_post, pseudo_y, pseudo_var);
}

double toeplitz_noise_init(const CVector& y) {
  const int n = static_cast<int>(y.size());
  if (n < 1) throw std::invalid_argument("toeplitz_noise_init: empty input");
  CVector gamma(n);
  for (int d = 0; d < n; ++d) {
    cplx acc(0.0, 0.0);
    for (int k = 0; k + d < n; ++k) acc += y[k + d] * std::conj(y[k]);
    gamma[d] = acc / static_cast<double>(n);
  }
  CMatrix T(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) T(r, c) = r >= c ? gamma[r - c] : std::conj(gamma[c - r]);
  const RVector eig = Eigen::SelfAdjointEigenSolver<CMatrix>(T, Eigen::EigenvaluesOnly).eigenvalues();
  const int quarter = std::max(1, n / 4);
  const double estimate = eig.head(quarter).mean();
  const double floor = std::max(1e-12 * gamma[0].real(), 1e-300);
  return std::max(estimate, floor);
}

FrequencyPosterior sequential_frequency_init(const CVector& pseudo_y, const RVector& pseudo_var,
                                             const PriorParams& prior) {
  const int n = static_cast<int>(pseudo_y.size());
  const RVector precision = pseudo_var.cwiseInverse();
  const double trace = precision.sum();
  FrequencyPosterior freq = FrequencyPosterior::uniform(n);
  SupportState state = SupportState::empty(CMatrix::Zero(n, n), CVector::Zero(n));
  CMatrix weighted(n, n);  // columns diag(precision) a_i for initialized i
  CVector residual = pseudo_y;
  CVector eta(n);

  for (int i = 0; i < n; ++i) {
    const CVector x = precision.cwiseProduct(residual);
    eta[0] = 0.0;
    for (int d = 1; d < n; ++d) {
      eta[d] = x.segment(d, n - d).dot(x.head(n - d));
      eta[d] = std::conj(eta[d]) * (2.0 / n);
    }
    freq.set(i, project_von_mises(eta));
    const CVector ai = freq.a_hat.col(i);
    weighted.col(i) = precision.asDiagonal() * ai;
    for (int l = 0; l < i; ++l) {
      state.J(l, i) = freq.a_hat.col(l).dot(weighted.col(i));
      state.J(i, l) = std::conj(state.J(l, i));
    }
    state.J(i, i) = trace;
    state.h[i] = weighted.col(i).dot(pseudo_y);
    Activation act = delta_activate(i, state, prior);
    if (!act.valid) {
      refresh_weights(state, prior);
      act = delta_activate(i, state, prior);
      if (!act.valid) break;
    }
    apply_activation(state, i, act);
    if (state.updates_since_refresh >= 100) refresh_weights(state, prior);
    residual = pseudo_y;
    for (int r = 0; r < state.size(); ++r) residual -= freq.a_hat.col(state.active[r]) * state.w[r];
  }
  return freq;
}

}  // namespace valse
