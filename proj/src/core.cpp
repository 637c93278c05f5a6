#include "valse/core.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace valse {

double wrap(double angle) {
  double w = angle - kTwoPi * std::floor((angle + kPi) / kTwoPi);
  // Rounding can land exactly on +pi.
  if (w >= kPi) w -= kTwoPi;
  if (w < -kPi) w += kTwoPi;
  return w;
}

CVector steering(double theta, int n) {
  CVector a(n);
  const cplx step = std::polar(1.0, theta);
  for (int i = 0; i < n; ++i) {
    // Direct evaluation keeps long vectors free of accumulated phase drift.
    a[i] = (i % 64 == 0) ? std::polar(1.0, i * theta) : a[i - 1] * step;
  }
  return a;
}

CVector synthesize(const GroundTruth& truth, int n) {
  if (n < 1) throw std::invalid_argument("synthesize: N must be >= 1");
  if (truth.freqs.size() != truth.weights.size())
    throw std::invalid_argument("synthesize: frequency/weight count mismatch");
  CVector z = CVector::Zero(n);
  for (std::size_t k = 0; k < truth.freqs.size(); ++k) {
    z += truth.weights[k] * steering(truth.freqs[k], n);
  }
  return z;
}

double to_db(double ratio) {
  if (!(ratio > 0.0)) return kDbFloor;
  return std::max(10.0 * std::log10(ratio), kDbFloor);
}

double nmse_db(const CVector& estimate, const CVector& truth) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("nmse: length mismatch");
  const double norm = truth.squaredNorm();
  if (norm == 0.0) throw std::invalid_argument("nmse: zero-norm truth");
  return to_db((estimate - truth).squaredNorm() / norm);
}

double dnmse_db(const CVector& estimate, const CVector& truth) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("dnmse: length mismatch");
  const double norm = truth.squaredNorm();
  if (norm == 0.0) throw std::invalid_argument("dnmse: zero-norm truth");
  const double enorm = estimate.squaredNorm();
  if (enorm == 0.0) return 0.0;
  const cplx c = estimate.dot(truth) / enorm;  // Eigen's dot conjugates the left operand
  return to_db((truth - c * estimate).squaredNorm() / norm);
}

namespace {

// Hungarian method on a square cost matrix (row i -> assigned column).
std::vector<int> hungarian(const RMatrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(n);
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

}  // namespace

std::vector<int> match_frequencies(std::span<const double> estimated,
                                   std::span<const double> truth) {
  if (estimated.size() != truth.size())
    throw std::invalid_argument("match_frequencies: count mismatch");
  const int k = static_cast<int>(truth.size());
  RMatrix cost(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double d = wrap(estimated[j] - truth[i]);
      cost(i, j) = d * d;
    }
  return hungarian(cost);
}

double freq_sq_error(std::span<const double> estimated, std::span<const double> truth) {
  const auto pairing = match_frequencies(estimated, truth);
  double acc = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double d = wrap(estimated[pairing[k]] - truth[k]);
    acc += d * d;
  }
  return acc;
}

double freq_mse_db(std::span<const double> estimated, std::span<const double> truth) {
  return to_db(freq_sq_error(estimated, truth));
}

}  // namespace valse
