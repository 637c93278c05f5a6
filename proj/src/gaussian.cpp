#include "valse/gaussian.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace valse::gaussian {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kSqrtPi = 1.77245385090551602730;
constexpr double kSqrtHalfPi = 1.25331413731550025121;
constexpr double kInvSqrt2 = 0.70710678118654752440;

// Phi(x) / phi(x) for x <= 0, finite for every x including -inf limits.
double mills(double x) { return kSqrtHalfPi * erfcx(-x * kInvSqrt2); }

struct Raw {
  double log_mass;
  double mean;
  double second;  // (a phi(a) - b phi(b)) / mass
};

// Requires upper <= 0.
Raw lower_half(double a, double b) {
  if (std::isinf(b)) {
    // upper = 0 cannot be infinite here; b == -inf only for an empty cell.
    return {-std::numeric_limits<double>::infinity(), 0.0, 0.0};
  }
  const double mb = mills(b);
  double e = 0.0;
  double ma = 0.0;
  if (std::isfinite(a)) {
    e = std::exp(0.5 * (b * b - a * a));
    ma = mills(a);
  }
  const double d = mb - e * ma;
  const double log_mass = -0.5 * b * b + std::log(kInvSqrt2Pi) + std::log(d);
  const double ae = std::isfinite(a) ? a * e : 0.0;
  return {log_mass, (e - 1.0) / d, (ae - b) / d};
}

Raw straddle(double a, double b) {
  const double pa = std::isfinite(a) ? pdf(a) : 0.0;
  const double pb = std::isfinite(b) ? pdf(b) : 0.0;
  const double mass = cdf(b) - cdf(a);
  const double apa = std::isfinite(a) ? a * pa : 0.0;
  const double bpb = std::isfinite(b) ? b * pb : 0.0;
  return {std::log(mass), (pa - pb) / mass, (apa - bpb) / mass};
}

Raw raw_moments(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("truncated: empty interval");
  if (a >= 0.0) {
    // Reflect the upper-tail cell into the lower half.
    Raw r = lower_half(-b, -a);
    r.mean = -r.mean;
    return r;
  }
  if (b <= 0.0) return lower_half(a, b);
  return straddle(a, b);
}

}  // namespace

double pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double erfcx(double u) {
  if (u < 0.0) return 2.0 * std::exp(u * u) - erfcx(-u);
  if (u < 5.0) return std::exp(u * u) * std::erfc(u);
  if (std::isinf(u)) return 0.0;
  // Continued fraction erfc(u) = e^{-u^2}/sqrt(pi) / (u + (1/2)/(u + 1/(u + ...))).
  double f = u;
  for (int k = 60; k >= 1; --k) f = u + 0.5 * k / f;
  return 1.0 / (kSqrtPi * f);
}

Truncated truncated(double lower, double upper) {
  const Raw r = raw_moments(lower, upper);
  double var = 1.0 + r.second - r.mean * r.mean;
  if (var < 0.0) var = 0.0;
  return {r.log_mass, r.mean, var};
}

double fisher_cell_term(double lower, double upper) {
  const Raw r = raw_moments(lower, upper);
  // (phi(a) - phi(b))^2 / mass = mass * mean^2, evaluated in log space.
  if (r.log_mass < std::log(1e-300) || r.mean == 0.0) return 0.0;
  return std::exp(r.log_mass + 2.0 * std::log(std::abs(r.mean)));
}

}  // namespace valse::gaussian
