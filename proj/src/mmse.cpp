#include "valse/mmse.hpp"

#include <cmath>
#include <stdexcept>

#include "valse/gaussian.hpp"

namespace valse {

Observation Observation::unquantized(CVector y) {
  Observation obs;
  obs.samples_ = std::move(y);
  return obs;
}

Observation Observation::quantized(QuantizerSpec spec, CVector y) {
  Observation obs;
  obs.cells_ = cells_of(spec, y);
  obs.samples_ = std::move(y);
  obs.quantizer_ = std::move(spec);
  return obs;
}

namespace {

struct AxisPosterior {
  double mean;
  double var;
};

// Clean value x ~ N(m, vx); observed x + e in [lower, upper), e ~ N(0, vn).
AxisPosterior axis_posterior(double m, double vx, double vn, double lower, double upper) {
  const double total = vx + vn;
  const double sd = std::sqrt(total);
  const auto t = gaussian::truncated((lower - m) / sd, (upper - m) / sd);
  const double gain = vx / sd;
  return {m + gain * t.mean, vx * vn / total + gain * gain * t.var};
}

}  // namespace

GaussianMessage posterior_moments(const GaussianMessage& prior, const Observation& obs,
                                  double sigma2) {
  const int n = obs.size();
  if (prior.mean.size() != n || prior.var.size() != n)
    throw std::invalid_argument("posterior_moments: size mismatch");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("posterior_moments: sigma2 must be > 0");

  GaussianMessage post{CVector(n), RVector(n)};
  if (!obs.is_quantized()) {
    const CVector& y = obs.samples();
    for (int i = 0; i < n; ++i) {
      const double v = 1.0 / (1.0 / prior.var[i] + 1.0 / sigma2);
      post.var[i] = v;
      post.mean[i] = v * (prior.mean[i] / prior.var[i] + y[i] / sigma2);
    }
    return post;
  }

  const auto& spec = obs.quantizer();
  const auto& cells = obs.cells();
  for (int i = 0; i < n; ++i) {
    const double vx = 0.5 * prior.var[i];
    const double vn = 0.5 * sigma2;
    const auto [rlo, rhi] = interval_of(spec, cells.re[i]);
    const auto [ilo, ihi] = interval_of(spec, cells.im[i]);
    const auto re = axis_posterior(prior.mean[i].real(), vx, vn, rlo, rhi);
    const auto im = axis_posterior(prior.mean[i].imag(), vx, vn, ilo, ihi);
    post.mean[i] = cplx(re.mean, im.mean);
    post.var[i] = re.var + im.var;
  }
  return post;
}

GaussianMessage gaussian_divide(const CVector& post_mean, const RVector& post_var,
                                const CVector& in_mean, const RVector& in_var) {
  const Eigen::Index n = post_mean.size();
  GaussianMessage out{CVector(n), RVector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double precision = 1.0 / post_var[i] - 1.0 / in_var[i];
    if (!(precision > 1.0 / kVarCeil)) {
      out.var[i] = kVarCeil;
      out.mean[i] = post_mean[i];
      continue;
    }
    const double v = 1.0 / precision;
    out.mean[i] = v * (post_mean[i] / post_var[i] - in_mean[i] / in_var[i]);
    out.var[i] = std::max(v, kVarFloor);
  }
  return out;
}

GaussianMessage extrinsic_b(const GaussianMessage& post, const GaussianMessage& ext_a) {
  return gaussian_divide(post.mean, post.var, ext_a.mean, ext_a.var);
}

double em_noise_update(const CVector& pseudo_y, const GaussianMessage& post, int observed_count) {
  if (observed_count < 1) throw std::invalid_argument("em_noise_update: observed count < 1");
  return ((pseudo_y - post.mean).squaredNorm() + post.var.sum()) / observed_count;
}

}  // namespace valse
