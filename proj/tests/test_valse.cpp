#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "valse/valse.hpp"

using namespace valse;

namespace {

struct Instance {
  CMatrix a_hat;
  CVector y;
  RVector var;
  FrequencyPosterior freq;
};

Instance random_instance(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(-kPi, kPi), lk(-1.0, 3.0), lv(-0.5, 0.5);
  std::normal_distribution<double> g(0.0, 1.0);
  Instance in;
  in.freq = FrequencyPosterior::uniform(n);
  for (int i = 0; i < n; ++i) in.freq.set(i, {ang(rng), std::pow(10.0, lk(rng))});
  in.a_hat = in.freq.a_hat;
  in.y.resize(n);
  in.var.resize(n);
  for (int i = 0; i < n; ++i) {
    in.y[i] = cplx(g(rng), g(rng)) * 2.0;
    in.var[i] = std::pow(10.0, lv(rng));
  }
  return in;
}

// ln Z(s) up to a support-independent constant, by dense inversion.
double dense_log_z(const JH& jh, const std::vector<int>& s, const PriorParams& p) {
  const int m = static_cast<int>(s.size());
  if (m == 0) return 0.0;
  CMatrix M(m, m);
  CVector h(m);
  for (int a = 0; a < m; ++a) {
    h[a] = jh.h[s[a]];
    for (int b = 0; b < m; ++b) M(a, b) = jh.J(s[a], s[b]);
  }
  M.diagonal().array() += 1.0 / p.tau;
  Eigen::LLT<CMatrix> llt(M);
  const CMatrix L = llt.matrixL();
  double logdet = 0.0;
  for (int a = 0; a < m; ++a) logdet += 2.0 * std::log(L(a, a).real());
  const double quad = h.dot(llt.solve(h)).real();
  return -logdet + quad + m * std::log(p.rho / (1.0 - p.rho)) - m * std::log(p.tau);
}

std::vector<int> support_of(unsigned mask, int n) {
  std::vector<int> s;
  for (int k = 0; k < n; ++k)
    if (mask & (1u << k)) s.push_back(k);
  return s;
}

SupportState build_state(const JH& jh, const std::vector<int>& s, const PriorParams& p) {
  SupportState st = SupportState::empty(jh.J, jh.h);
  for (int k : s) {
    st.active.push_back(k);
    st.position[k] = st.size() - 1;
  }
  refresh_weights(st, p);
  return st;
}

void expect_matches_dense(const SupportState& st, const PriorParams& p, double tol) {
  SupportState dense = st;
  refresh_weights(dense, p);
  if (st.size() == 0) return;
  EXPECT_LE((st.C - dense.C).norm() / dense.C.norm(), tol);
  EXPECT_LE((st.w - dense.w).norm(), tol * std::max(1.0, dense.w.norm()));
}

}  // namespace

TEST(ComputeJH, TwoSampleExample) {
  CMatrix a(2, 2);
  a << 1.0, 1.0, 0.0, std::polar(1.0, 0.3);
  CVector y(2);
  y << cplx(0.7, -0.2), cplx(1.5, 0.4);
  const JH jh = compute_jh(a, y, RVector::Ones(2));
  EXPECT_DOUBLE_EQ(jh.J(0, 0).real(), 2.0);
  EXPECT_NEAR(std::abs(jh.h[0] - y[0]), 0.0, 1e-15);
}

TEST(ComputeJH, HomogeneousReduction) {
  std::mt19937_64 rng(3);
  const Instance in = random_instance(12, rng);
  const double s2 = 0.37;
  const JH jh = compute_jh(in.a_hat, in.y, RVector::Constant(12, s2));
  CMatrix ref = in.a_hat.adjoint() * in.a_hat / s2;
  ref.diagonal().setConstant(12.0 / s2);
  EXPECT_LE((jh.J - ref).norm(), 1e-12 * ref.norm());
  EXPECT_LE((jh.h - in.a_hat.adjoint() * in.y / s2).norm(), 1e-12 * jh.h.norm());
  EXPECT_LE((jh.J - jh.J.adjoint()).norm(), 1e-14 * jh.J.norm());
}

TEST(ComputeJH, RejectsNonpositiveVariance) {
  RVector v = RVector::Ones(3);
  v[1] = 0.0;
  EXPECT_THROW(compute_jh(CMatrix::Identity(3, 3), CVector::Zero(3), v), std::invalid_argument);
}

TEST(SupportDeltas, EmptySupportClosedForm) {
  std::mt19937_64 rng(5);
  const Instance in = random_instance(5, rng);
  const JH jh = compute_jh(in.a_hat, in.y, in.var);
  const PriorParams p{0.3, 2.0};
  const SupportState st = SupportState::empty(jh.J, jh.h);
  for (int k = 0; k < 5; ++k) {
    const Activation a = delta_activate(k, st, p);
    const double v = 1.0 / (in.var.cwiseInverse().sum() + 1.0 / p.tau);
    EXPECT_NEAR(a.v, v, 1e-14);
    EXPECT_NEAR(std::abs(a.u - v * jh.h[k]), 0.0, 1e-13);
  }
}

TEST(SupportDeltas, ActivationThenDeactivationCancels) {
  std::mt19937_64 rng(6);
  const Instance in = random_instance(6, rng);
  const JH jh = compute_jh(in.a_hat, in.y, in.var);
  const PriorParams p{0.2, 1.3};
  SupportState st = build_state(jh, {1, 4}, p);
  for (int k : {0, 2, 3, 5}) {
    SupportState next = st;
    const Activation a = delta_activate(k, next, p);
    ASSERT_TRUE(a.valid);
    apply_activation(next, k, a);
    EXPECT_NEAR(a.delta + delta_deactivate(k, next, p), 0.0, 1e-9);
  }
}

TEST(SupportDeltas, IndifferencePoint) {
  SupportState st = SupportState::empty(CMatrix::Identity(2, 2), CVector::Zero(2));
  st.active = {0};
  st.position = {0, -1};
  st.w = CVector::Zero(1);
  st.C = CMatrix::Constant(1, 1, 0.8);
  EXPECT_NEAR(delta_deactivate(0, st, {0.5, 0.8}), 0.0, 1e-15);
}

TEST(SupportDeltas, MatchDenseLogZ) {
  std::mt19937_64 rng(11);
  for (int n = 3; n <= 6; ++n) {
    for (int rep = 0; rep < 4; ++rep) {
      const Instance in = random_instance(n, rng);
      const JH jh = compute_jh(in.a_hat, in.y, in.var);
      const PriorParams p{0.1 + 0.2 * rep, 0.5 + rep};
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        const auto s = support_of(mask, n);
        const SupportState st = build_state(jh, s, p);
        const double base = dense_log_z(jh, s, p);
        for (int k = 0; k < n; ++k) {
          const auto t = support_of(mask ^ (1u << k), n);
          const double want = dense_log_z(jh, t, p) - base;
          const double got =
              st.is_active(k) ? delta_deactivate(k, st, p) : delta_activate(k, st, p).delta;
          ASSERT_NEAR(got, want, 1e-8 * std::max(1.0, std::abs(want))) << n << " " << mask;
        }
      }
    }
  }
}

TEST(SupportUpdates, RankOneMatchesDenseInverse) {
  std::mt19937_64 rng(17);
  for (int n = 3; n <= 6; ++n) {
    for (int rep = 0; rep < 10; ++rep) {
      const Instance in = random_instance(n, rng);
      const JH jh = compute_jh(in.a_hat, in.y, in.var);
      const PriorParams p{0.3, 0.7 + rep};
      SupportState st = SupportState::empty(jh.J, jh.h);
      std::uniform_int_distribution<int> pick(0, n - 1);
      for (int f = 0; f < n; ++f) {
        const int k = pick(rng);
        if (st.is_active(k)) {
          apply_deactivation(st, k);
        } else {
          const Activation a = delta_activate(k, st, p);
          ASSERT_TRUE(a.valid);
          apply_activation(st, k, a);
        }
        expect_matches_dense(st, p, 1e-8);
        if (st.size() > 0) {
          EXPECT_LE((st.C - st.C.adjoint()).norm(), 1e-12 * st.C.norm());
          const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(st.C).eigenvalues();
          EXPECT_GT(ev.minCoeff(), 0.0);
        }
      }
    }
  }
}

TEST(GreedySearch, ZeroEvidenceKeepsEmptySupport) {
  std::mt19937_64 rng(2);
  const Instance in = random_instance(8, rng);
  const JH jh = compute_jh(in.a_hat, CVector::Zero(8), in.var);
  SupportState st = SupportState::empty(jh.J, jh.h);
  greedy_support_search(st, {0.3, 1.0}, 40);
  EXPECT_EQ(st.size(), 0);
}

TEST(GreedySearch, LocalMaximumAgainstEnumeration) {
  std::mt19937_64 rng(23);
  for (int n = 3; n <= 6; ++n) {
    for (int rep = 0; rep < 25; ++rep) {
      const Instance in = random_instance(n, rng);
      const JH jh = compute_jh(in.a_hat, in.y, in.var);
      const PriorParams p{0.05 + 0.1 * (rep % 8), 0.3 + 0.4 * (rep % 5)};
      SupportState st = SupportState::empty(jh.J, jh.h);
      greedy_support_search(st, p, 5 * n);

      std::vector<int> s(st.active);
      std::sort(s.begin(), s.end());
      unsigned found = 0;
      for (int k : s) found |= 1u << k;
      const double value = dense_log_z(jh, s, p);
      double best = -1e300;
      for (unsigned mask = 0; mask < (1u << n); ++mask)
        best = std::max(best, dense_log_z(jh, support_of(mask, n), p));
      EXPECT_LE(value, best + 1e-9);
      for (int k = 0; k < n; ++k)
        EXPECT_LE(dense_log_z(jh, support_of(found ^ (1u << k), n), p), value + 1e-9);
    }
  }
}

TEST(GreedySearch, LogZAscendsAndWeightsStayExact) {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 3 + rep % 4;
    const Instance in = random_instance(n, rng);
    const JH jh = compute_jh(in.a_hat, in.y, in.var);
    const PriorParams p{0.4, 1.5};
    double prev = 0.0;
    for (int cap = 1; cap <= 5 * n; ++cap) {
      SupportState st = SupportState::empty(jh.J, jh.h);
      greedy_support_search(st, p, cap);
      const double value = dense_log_z(jh, st.active, p);
      EXPECT_GE(value, prev - 1e-9);
      prev = value;
      SupportState dense = st;
      refresh_weights(dense, p);
      if (st.size() > 0) {
        EXPECT_LE((st.C - dense.C).norm(), 1e-10 * dense.C.norm());
        EXPECT_LE((st.w - dense.w).norm(), 1e-10 * std::max(1.0, dense.w.norm()));
      }
    }
  }
}

TEST(PriorParams, Examples) {
  SupportState st = SupportState::empty(CMatrix::Zero(10, 10), CVector::Zero(10));
  st.active = {2, 7};
  st.position.assign(10, -1);
  st.position[2] = 0;
  st.position[7] = 1;
  st.w = CVector(2);
  st.w << 1.0, cplx(0.0, 1.0);
  st.C = 0.5 * CMatrix::Identity(2, 2);
  const PriorParams p = estimate_prior_params(st, {0.5, 9.0});
  EXPECT_DOUBLE_EQ(p.rho, 0.2);
  EXPECT_DOUBLE_EQ(p.tau, 1.5);

  const SupportState none = SupportState::empty(CMatrix::Zero(10, 10), CVector::Zero(10));
  const PriorParams kept = estimate_prior_params(none, {1e-5, 3.0});
  EXPECT_DOUBLE_EQ(kept.rho, 0.01);
  EXPECT_DOUBLE_EQ(kept.tau, 3.0);
  EXPECT_DOUBLE_EQ(clamp_prior({0.5, -1.0}, 10).tau, kTauMin);
  EXPECT_DOUBLE_EQ(clamp_prior({1.0, 1.0}, 10).rho, 0.99);
}

TEST(FrequencyEta, SingleComponentHomogeneous) {
  const int n = 9;
  std::mt19937_64 rng(8);
  const Instance in = random_instance(n, rng);
  const double s2 = 0.4;
  const JH jh = compute_jh(in.a_hat, in.y, RVector::Constant(n, s2));
  const SupportState st = build_state(jh, {3}, {0.3, 1.0});
  const CVector eta = frequency_eta(3, st, in.freq, in.y, RVector::Constant(n, s2));
  const CVector want = 2.0 * in.y * std::conj(st.w[0]) / s2;
  EXPECT_LE((eta - want).norm(), 1e-12 * want.norm());
}

TEST(FrequencyEta, HeteroscedasticFormula) {
  const int n = 7;
  std::mt19937_64 rng(9);
  const Instance in = random_instance(n, rng);
  const JH jh = compute_jh(in.a_hat, in.y, in.var);
  const SupportState st = build_state(jh, {0, 2, 5}, {0.3, 1.0});
  for (int i : {0, 2, 5}) {
    CVector inner = in.y;
    const cplx wi = st.w[st.position[i]];
    CVector cross = CVector::Zero(n);
    for (int l : {0, 2, 5}) {
      if (l == i) continue;
      inner -= in.a_hat.col(l) * st.w[st.position[l]];
      cross += in.a_hat.col(l) * st.C(st.position[l], st.position[i]);
    }
    CVector want = inner * std::conj(wi) - cross;
    for (int r = 0; r < n; ++r) want[r] *= 2.0 / in.var[r];
    const CVector eta = frequency_eta(i, st, in.freq, in.y, in.var);
    EXPECT_LE((eta - want).norm(), 1e-12 * want.norm());
  }
}

TEST(FrequencyInference, MomentVectorsContract) {
  const int n = 24;
  std::mt19937_64 rng(10);
  Instance in = random_instance(n, rng);
  const JH jh = compute_jh(in.a_hat, in.y, in.var);
  const SupportState st = build_state(jh, {1, 6, 11}, {0.3, 1.0});
  for (int i : {1, 6, 11}) {
    infer_frequency(i, st, in.freq, in.y, in.var);
    const CVector a = in.freq.a_hat.col(i);
    EXPECT_EQ(a[0], cplx(1.0, 0.0));
    for (int r = 1; r < n; ++r) EXPECT_LE(std::abs(a[r]), std::abs(a[r - 1]) + 1e-15);
  }
}

TEST(PosteriorLse, EmptySupport) {
  const FrequencyPosterior f = FrequencyPosterior::uniform(5);
  const SupportState st = SupportState::empty(CMatrix::Zero(5, 5), CVector::Zero(5));
  const LsePosterior post = posterior_lse(st, f);
  EXPECT_EQ(post.z.norm(), 0.0);
  EXPECT_EQ(post.v.norm(), 0.0);
  EXPECT_EQ(post.estimate.model_order, 0u);
}

TEST(PosteriorLse, ExactAtomLimit) {
  const int n = 6;
  FrequencyPosterior f = FrequencyPosterior::uniform(n);
  f.set(1, {0.4, 1e14});
  f.set(4, {-2.0, 1e14});
  std::mt19937_64 rng(12);
  Instance in = random_instance(n, rng);
  in.freq = f;
  const JH jh = compute_jh(f.a_hat, in.y, in.var);
  const SupportState st = build_state(jh, {4, 1}, {0.3, 1.0});
  const LsePosterior post = posterior_lse(st, f);
  CMatrix A(n, 2);
  A.col(0) = f.a_hat.col(4);
  A.col(1) = f.a_hat.col(1);
  const RVector want = (A * st.C * A.adjoint()).diagonal().real();
  EXPECT_LE((post.v - want).norm(), 1e-9 * want.norm());
  EXPECT_LE((post.z - A * st.w).norm(), 1e-12 * post.z.norm());
  ASSERT_EQ(post.estimate.support, (std::vector<int>{1, 4}));
  EXPECT_DOUBLE_EQ(post.estimate.freqs[0], f.mu[1]);
}

TEST(PosteriorLse, MatchesMonteCarlo) {
  const int n = 4;
  FrequencyPosterior f = FrequencyPosterior::uniform(n);
  f.set(0, {0.7, 3.0});
  f.set(2, {-1.9, 12.0});
  SupportState st = SupportState::empty(CMatrix::Zero(n, n), CVector::Zero(n));
  st.active = {0, 2};
  st.position = {0, -1, 1, -1};
  st.w = CVector(2);
  st.w << cplx(1.2, -0.4), cplx(-0.3, 0.8);
  st.C = CMatrix(2, 2);
  st.C << 0.30, cplx(0.05, 0.04), cplx(0.05, -0.04), 0.20;
  const LsePosterior post = posterior_lse(st, f);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  auto draw_vm = [&](double mu, double kappa) {
    for (;;) {
      const double t = -kPi + kTwoPi * u(rng);
      if (u(rng) < std::exp(kappa * (std::cos(t) - 1.0))) return mu + t;
    }
  };
  const CMatrix L = Eigen::LLT<CMatrix>(st.C).matrixL();
  const int draws = 1000000;
  CVector mean = CVector::Zero(n);
  RVector second = RVector::Zero(n);
  for (int d = 0; d < draws; ++d) {
    const double t0 = draw_vm(0.7, 3.0), t2 = draw_vm(-1.9, 12.0);
    CVector e(2);
    e << cplx(g(rng), g(rng)) / std::sqrt(2.0), cplx(g(rng), g(rng)) / std::sqrt(2.0);
    const CVector w = st.w + L * e;
    for (int r = 0; r < n; ++r) {
      const cplx z = w[0] * std::polar(1.0, r * t0) + w[1] * std::polar(1.0, r * t2);
      mean[r] += z;
      second[r] += std::norm(z);
    }
  }
  for (int r = 0; r < n; ++r) {
    const cplx m = mean[r] / static_cast<double>(draws);
    const double var = second[r] / draws - std::norm(m);
    EXPECT_NEAR(post.v[r] / var, 1.0, 0.01) << r;
    EXPECT_NEAR(std::abs(post.z[r] - m), 0.0, 0.01) << r;
  }
}

TEST(ExtrinsicA, Examples) {
  const RVector s2 = (RVector(3) << 0.5, 2.0, 8.0).finished();
  const CVector y = (CVector(3) << cplx(1, 2), cplx(-1, 0.5), cplx(0.1, 0)).finished();
  const CVector zp = (CVector(3) << cplx(0.3, 0), cplx(0, 1), cplx(2, -2)).finished();
  const GaussianMessage half = extrinsic_a(zp, s2 / 2.0, y, s2);
  EXPECT_LE((half.var - s2).norm(), 1e-14);

  const RVector vp = (RVector(3) << 0.2, 1.0, 3.0).finished();
  const GaussianMessage m = extrinsic_a(y, vp, y, s2);
  for (int r = 0; r < 3; ++r) {
    const double ve = 1.0 / (1.0 / vp[r] - 1.0 / s2[r]);
    EXPECT_NEAR(m.var[r], ve, 1e-12 * ve);
    EXPECT_NEAR(std::abs(m.mean[r] - y[r] * (ve / vp[r] - ve / s2[r])), 0.0, 1e-12);
  }

  const GaussianMessage flat = extrinsic_a(zp, s2 * 1.5, y, s2);
  for (int r = 0; r < 3; ++r) {
    EXPECT_EQ(flat.var[r], kVarCeil);
    EXPECT_EQ(flat.mean[r], zp[r]);
  }
}
