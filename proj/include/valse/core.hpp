#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace valse {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Any exact-zero error maps here so Monte Carlo averages stay finite.
inline constexpr double kDbFloor = -300.0;

/// Line spectrum parameters: K frequencies in [-pi, pi) and their complex
/// amplitudes.
struct GroundTruth {
  std::vector<double> freqs;
  std::vector<cplx> weights;

  std::size_t order() const { return freqs.size(); }
};

struct EstimateResult {
  std::size_t model_order = 0;
  std::vector<double> freqs;
  std::vector<cplx> weights;
  CVector spectrum;
  std::vector<int> support;
};

/// Wraps an angle into the half-open interval [-pi, pi).
double wrap(double angle);

/// a(theta) = [1, e^{j theta}, ..., e^{j (N-1) theta}]^T.
CVector steering(double theta, int n);

/// z_n = sum_k w_k e^{j (n-1) theta_k}, n = 1..N.
CVector synthesize(const GroundTruth& truth, int n);

/// 10 log10(||est - truth||^2 / ||truth||^2). Throws on a zero-norm truth.
double nmse_db(const CVector& estimate, const CVector& truth);

/// NMSE after removing the best complex scale c = (est^H truth)/||est||^2.
/// A zero estimate yields 0 dB.
double dnmse_db(const CVector& estimate, const CVector& truth);

/// Optimal pairing of estimated to true frequencies under squared wrap-around
/// distance. Element k of the result is the index into `estimated` matched to
/// truth[k]. Sizes must agree.
std::vector<int> match_frequencies(std::span<const double> estimated,
                                   std::span<const double> truth);

/// 10 log10(sum_k wrap(est_pi(k) - truth_k)^2) under the optimal pairing.
/// Throws std::invalid_argument on a count mismatch.
double freq_mse_db(std::span<const double> estimated, std::span<const double> truth);

/// Linear-domain squared frequency error under the optimal pairing.
double freq_sq_error(std::span<const double> estimated, std::span<const double> truth);

double to_db(double ratio);

}  // namespace valse
