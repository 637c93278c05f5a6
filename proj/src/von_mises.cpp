#include "valse/von_mises.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fft.hpp"

namespace valse {

namespace {

constexpr double kLargeKappa = 1e4;

// Debye polynomials u_1..u_4 in t = 1/sqrt(1 + (x/nu)^2); returns the series
// minus its leading 1.
double debye_tail(double nu, double t) {
  const double t2 = t * t;
  const double u1 = t * (3.0 - 5.0 * t2) / 24.0;
  const double u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0;
  const double u3 =
      t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2 * t2 - 425425.0 * t2 * t2 * t2) /
      414720.0;
  const double t4 = t2 * t2;
  const double u4 = t4 *
                    (4465125.0 - 94121676.0 * t2 + 349922430.0 * t4 - 446185740.0 * t4 * t2 +
                     185910725.0 * t4 * t4) /
                    39813120.0;
  return u1 / nu + u2 / (nu * nu) + u3 / (nu * nu * nu) + u4 / (nu * nu * nu * nu);
}

// Hankel expansion of sqrt(2 pi x) e^{-x} I_0(x), minus 1.
double hankel_tail0(double x) {
  const double c1 = 1.0 / 8.0, c2 = 9.0 / 128.0, c3 = 225.0 / 3072.0, c4 = 11025.0 / 98304.0;
  return c1 / x + c2 / (x * x) + c3 / (x * x * x) + c4 / (x * x * x * x);
}

// log(I_nu(x) / I_0(x)) for x > kLargeKappa, arranged so that no term of size x
// is ever subtracted.
double log_ratio_asymptotic(int nu, double x) {
  if (nu == 0) return 0.0;
  const double v = nu;
  const double root = std::hypot(v, x);
  const double exponent = v * v / (root + x) - v * std::asinh(v / x);
  return exponent - 0.5 * std::log1p(v * v / ((root + x) * x)) + std::log1p(debye_tail(v, v / root)) -
         std::log1p(hankel_tail0(x));
}

int recurrence_start(double kappa, int count) {
  return count + 20 + static_cast<int>(std::ceil(10.0 * std::sqrt(kappa)));
}

// Best-Fisher style initial guess for A(kappa) = r.
double initial_kappa(double r) {
  if (r < 0.53) return 2.0 * r + r * r * r + 5.0 * std::pow(r, 5) / 6.0;
  if (r < 0.85) return -0.4 + 1.39 * r + 0.43 / (1.0 - r);
  return 1.0 / (r * r * r - 4.0 * r * r + 3.0 * r);
}

}  // namespace

RVector bessel_ratios(double kappa, int count) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("bessel_ratios: kappa must be >= 0");
  if (count < 0) throw std::invalid_argument("bessel_ratios: negative count");
  RVector out = RVector::Zero(count);
  if (count == 0) return out;
  out[0] = 1.0;
  if (kappa == 0.0) return out;
  if (std::isinf(kappa)) {
    out.setOnes();
    return out;
  }
  if (kappa > kLargeKappa) {
    for (int n = 1; n < count; ++n) out[n] = std::exp(log_ratio_asymptotic(n, kappa));
    return out;
  }
  // r_n = I_n / I_{n-1} = 1 / (2n/kappa + r_{n+1}).
  const int start = recurrence_start(kappa, count);
  double r = 0.0;
  std::vector<double> ratio(count, 0.0);
  for (int n = start; n >= 1; --n) {
    r = 1.0 / (2.0 * n / kappa + r);
    if (n < count) ratio[n] = r;
  }
  double prod = 1.0;
  for (int n = 1; n < count; ++n) {
    prod *= ratio[n];
    out[n] = prod;
  }
  return out;
}

double one_minus_bessel_ratio(double kappa) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("one_minus_bessel_ratio: kappa must be >= 0");
  if (std::isinf(kappa)) return 0.0;
  if (kappa > kLargeKappa) return -std::expm1(log_ratio_asymptotic(1, kappa));
  return 1.0 - bessel_ratios(kappa, 2)[1];
}

double kappa_from_deficit(double deficit) {
  if (std::isnan(deficit)) throw std::invalid_argument("kappa_from_deficit: NaN");
  if (deficit >= 1.0) return 0.0;
  if (deficit <= 0.0) return std::numeric_limits<double>::infinity();

  // Very small deficits: 1 - A ~ 1/(2k) + 1/(8k^2) + 1/(8k^3).
  double kappa = deficit < 1e-3 ? 1.0 / (2.0 * deficit) : initial_kappa(1.0 - deficit);
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    const double g = one_minus_bessel_ratio(kappa) - deficit;  // decreasing in kappa
    if (g > 0.0) lo = kappa; else hi = kappa;
    if (std::abs(g) <= 1e-15 * deficit) break;
    // d(1-A)/dk = -(1 - A^2 - A/k); the closed form cancels for large kappa.
    double slope;
    if (kappa > 1e3) {
      slope = -(0.5 / (kappa * kappa) + 0.25 / (kappa * kappa * kappa) +
                0.375 / (kappa * kappa * kappa * kappa));
    } else {
      const double a = 1.0 - (g + deficit);
      slope = -(1.0 - a * a - a / kappa);
    }
    double next = slope < 0.0 ? kappa - g / slope : kappa;
    if (!(next > lo && next < hi) || next == kappa) {
      next = std::isinf(hi) ? 2.0 * kappa + 1.0 : 0.5 * (lo + hi);
    }
    if (std::abs(next - kappa) <= 1e-15 * kappa) {
      kappa = next;
      break;
    }
    kappa = next;
  }
  return kappa;
}

CVector vm_moments(double mu, double kappa, int count) {
  const RVector r = bessel_ratios(kappa, count);
  CVector a(count);
  const CVector phase = steering(mu, count);
  for (int n = 0; n < count; ++n) a[n] = r[n] * phase[n];
  return a;
}

double log_density(const CVector& eta, double theta) {
  const int n = static_cast<int>(eta.size());
  const CVector a = steering(theta, n);
  double acc = 0.0;
  for (int i = 1; i < n; ++i) acc += (std::conj(eta[i]) * a[i]).real();
  return acc;
}

namespace {

struct Derivatives {
  double f, d1, d2;
};

Derivatives derivatives(const CVector& eta, double theta) {
  const int n = static_cast<int>(eta.size());
  const CVector a = steering(theta, n);
  Derivatives d{0.0, 0.0, 0.0};
  for (int i = 1; i < n; ++i) {
    const cplx t = std::conj(eta[i]) * a[i];
    d.f += t.real();
    d.d1 -= i * t.imag();
    d.d2 -= static_cast<double>(i) * i * t.real();
  }
  return d;
}

struct Moments {
  double mu;
  double deficit;  // E[2 sin^2((theta - mu)/2)] = 1 - |E e^{j theta}|
};

// Normalized moments from samples of log-density values at the given angles
// with trapezoid weights.
Moments moments_from_samples(const std::vector<double>& theta, const std::vector<double>& f,
                             const std::vector<double>& weight, double centre) {
  const double fmax = *std::max_element(f.begin(), f.end());
  double mass = 0.0;
  cplx m1(0.0, 0.0);
  std::vector<double> p(f.size());
  for (std::size_t g = 0; g < f.size(); ++g) {
    p[g] = weight[g] * std::exp(f[g] - fmax);
    mass += p[g];
    m1 += p[g] * std::polar(1.0, theta[g] - centre);
  }
  const double offset = std::arg(m1);
  double deficit = 0.0;
  for (std::size_t g = 0; g < f.size(); ++g) {
    const double s = std::sin(0.5 * (theta[g] - centre - offset));
    deficit += p[g] * 2.0 * s * s;
  }
  return {wrap(centre + offset), deficit / mass};
}

}  // namespace

VonMises project_von_mises(const CVector& eta) {
  const int n = static_cast<int>(eta.size());
  if (n < 2 || eta.tail(n - 1).cwiseAbs().maxCoeff() == 0.0) return {};

  CVector coeffs = eta;
  coeffs[0] = 0.0;
  const int points = std::max(4096, 8 * n);
  const double step = kTwoPi / points;
  const std::vector<double> grid = detail::trig_poly_on_grid(coeffs, points);
  auto angle = [&](long g) { return -kPi + step * static_cast<double>(g); };

  const long peak = std::max_element(grid.begin(), grid.end()) - grid.begin();
  double theta0 = angle(peak);
  Derivatives d = derivatives(eta, theta0);
  for (int it = 0; it < 3; ++it) {
    if (!(d.d2 < 0.0)) break;
    const double delta = std::clamp(-d.d1 / d.d2, -step, step);
    const Derivatives trial = derivatives(eta, theta0 + delta);
    if (trial.f < d.f) break;
    theta0 += delta;
    d = trial;
  }
  const double curvature = d.d2 < 0.0 ? -d.d2 : 0.0;

  // Dominant lobe: descend from the peak on each side until a local minimum
  // or until the density falls below e^-40 of the maximum.
  auto at = [&](long g) { return grid[((g % points) + points) % points]; };
  const double floor = grid[peak] - 40.0;
  long left = 0, right = 0;
  auto descends = [&](long from, long to) { return at(to) <= at(from) && at(to) >= floor; };
  while (left + right < points - 1 && descends(peak - left, peak - left - 1)) ++left;
  while (left + right < points - 1 && descends(peak + right, peak + right + 1)) ++right;
  const bool full_circle = left + right >= points - 1;
  // A floor-terminated edge lies between the last point inside and the next.
  const long left_edge = left + (at(peak - left - 1) < floor ? 1 : 0);
  const long right_edge = right + (at(peak + right + 1) < floor ? 1 : 0);

  Moments m;
  if (full_circle) {
    // Periodic trapezoid, refined until the peak spans 8 grid steps.
    int fine = points;
    while (curvature > 0.0 && 1.0 / std::sqrt(curvature) <= 8.0 * kTwoPi / fine && fine < (1 << 24))
      fine *= 2;
    const std::vector<double> values = fine == points ? grid : detail::trig_poly_on_grid(coeffs, fine);
    std::vector<double> theta(fine), weight(fine, 1.0);
    for (int g = 0; g < fine; ++g) theta[g] = -kPi + kTwoPi / fine * g;
    m = moments_from_samples(theta, values, weight, 0.0);
  } else {
    const double width = curvature > 0.0 ? 12.0 / std::sqrt(curvature) : kPi;
    const double peak_angle = angle(peak);
    double lo = std::max(theta0 - width, peak_angle - step * static_cast<double>(left_edge));
    double hi = std::min(theta0 + width, peak_angle + step * static_cast<double>(right_edge));
    lo = std::max(lo, theta0 - kPi);
    hi = std::min(hi, theta0 + kPi);
    constexpr int intervals = 384;
    const double h = (hi - lo) / intervals;
    std::vector<double> theta(intervals + 1), f(intervals + 1), weight(intervals + 1, 1.0);
    weight.front() = weight.back() = 0.5;
    for (int g = 0; g <= intervals; ++g) {
      theta[g] = lo + h * g;
      f[g] = log_density(eta, theta[g]);
    }
    m = moments_from_samples(theta, f, weight, theta0);
  }
  return {m.mu, kappa_from_deficit(m.deficit)};
}

}  // namespace valse
