#include "valse/crb.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "valse/gaussian.hpp"

namespace valse {

RVector parameter_vector(const GroundTruth& truth) {
  const int k = static_cast<int>(truth.order());
  RVector kappa(3 * k);
  for (int i = 0; i < k; ++i) {
    kappa[i] = truth.freqs[i];
    kappa[k + i] = std::abs(truth.weights[i]);
    kappa[2 * k + i] = std::arg(truth.weights[i]);
  }
  return kappa;
}

GroundTruth truth_from_parameters(const RVector& kappa) {
  if (kappa.size() % 3 != 0) throw std::invalid_argument("parameter vector length must be 3K");
  const int k = static_cast<int>(kappa.size() / 3);
  GroundTruth t;
  for (int i = 0; i < k; ++i) {
    t.freqs.push_back(kappa[i]);
    t.weights.push_back(std::polar(kappa[k + i], kappa[2 * k + i]));
  }
  return t;
}

JacobianRows jacobian_rows(const GroundTruth& truth, int n) {
  if (n < 1) throw std::invalid_argument("jacobian_rows: sample index is 1-based");
  const int k = static_cast<int>(truth.order());
  JacobianRows rows{RVector(3 * k), RVector(3 * k)};
  const double m = n - 1;
  for (int i = 0; i < k; ++i) {
    const double g = std::abs(truth.weights[i]);
    const double phase = m * truth.freqs[i] + std::arg(truth.weights[i]);
    const double c = std::cos(phase), s = std::sin(phase);
    rows.d_re[i] = -m * g * s;
    rows.d_im[i] = m * g * c;
    rows.d_re[k + i] = c;
    rows.d_im[k + i] = s;
    rows.d_re[2 * k + i] = -g * s;
    rows.d_im[2 * k + i] = g * c;
  }
  return rows;
}

AxisInformation quantized_information(cplx z, const QuantizerSpec& spec, double sigma2) {
  const double scale = std::sqrt(sigma2 / 2.0);
  AxisInformation info{0.0, 0.0};
  for (int l = 0; l < spec.cell_count(); ++l) {
    const double lo = spec.thresholds[l], hi = spec.thresholds[l + 1];
    info.re += gaussian::fisher_cell_term((lo - z.real()) / scale, (hi - z.real()) / scale);
    info.im += gaussian::fisher_cell_term((lo - z.imag()) / scale, (hi - z.imag()) / scale);
  }
  info.re *= 2.0 / sigma2;
  info.im *= 2.0 / sigma2;
  return info;
}

RMatrix fim_quantized(const GroundTruth& truth, const QuantizerSpec& spec, int n, double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("fim_quantized: sigma2 must be > 0");
  const CVector z = synthesize(truth, n);
  const int p = 3 * static_cast<int>(truth.order());
  RMatrix F = RMatrix::Zero(p, p);
  for (int i = 1; i <= n; ++i) {
    const auto rows = jacobian_rows(truth, i);
    const auto info = quantized_information(z[i - 1], spec, sigma2);
    F.selfadjointView<Eigen::Lower>().rankUpdate(rows.d_re, info.re);
    F.selfadjointView<Eigen::Lower>().rankUpdate(rows.d_im, info.im);
  }
  return F.selfadjointView<Eigen::Lower>();
}

RMatrix fim_unquantized(const GroundTruth& truth, int n, double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("fim_unquantized: sigma2 must be > 0");
  const int p = 3 * static_cast<int>(truth.order());
  RMatrix F = RMatrix::Zero(p, p);
  for (int i = 1; i <= n; ++i) {
    const auto rows = jacobian_rows(truth, i);
    F.selfadjointView<Eigen::Lower>().rankUpdate(rows.d_re, 1.0);
    F.selfadjointView<Eigen::Lower>().rankUpdate(rows.d_im, 1.0);
  }
  RMatrix full = F.selfadjointView<Eigen::Lower>();
  return (2.0 / sigma2) * full;
}

RMatrix crb_freq(const RMatrix& fisher, int k) {
  const Eigen::Index p = fisher.rows();
  if (fisher.cols() != p || k < 0 || k > p) throw std::invalid_argument("crb_freq: bad dimensions");
  const RVector d = fisher.diagonal();
  if ((d.array() <= 0.0).any()) {
    throw SingularFisherError("crb_freq: Fisher matrix has a nonpositive diagonal entry",
                              std::numeric_limits<double>::infinity());
  }
  const RVector s = d.cwiseSqrt().cwiseInverse();
  const RMatrix scaled = s.asDiagonal() * fisher * s.asDiagonal();
  const RVector eig = Eigen::SelfAdjointEigenSolver<RMatrix>(scaled, Eigen::EigenvaluesOnly).eigenvalues();
  const double condition = eig[0] > 0.0 ? eig[p - 1] / eig[0] : std::numeric_limits<double>::infinity();
  if (!(condition <= 1e12)) {
    std::ostringstream msg;
    msg << "crb_freq: singular Fisher matrix (condition number " << condition << ")";
    throw SingularFisherError(msg.str(), condition);
  }
  Eigen::LLT<RMatrix> llt(scaled);
  const RMatrix inv_scaled = llt.solve(RMatrix::Identity(p, p));
  const RMatrix inv = s.asDiagonal() * inv_scaled * s.asDiagonal();
  return inv.topLeftCorner(k, k);
}

}  // namespace valse
