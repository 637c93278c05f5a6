#pragma once

#include "valse/core.hpp"

namespace valse {

struct VonMises {
  double mu = 0.0;
  double kappa = 0.0;
};

/// I_n(kappa) / I_0(kappa) for n = 0..count-1. Backward ratio recurrence for
/// kappa <= 1e4, uniform asymptotic expansion above.
RVector bessel_ratios(double kappa, int count);

/// 1 - I_1(kappa)/I_0(kappa), accurate for large kappa where the ratio is
/// close to one.
double one_minus_bessel_ratio(double kappa);

/// Solves 1 - I_1(kappa)/I_0(kappa) = deficit for kappa. A deficit >= 1 gives
/// 0; a deficit <= 0 gives +inf.
double kappa_from_deficit(double deficit);

/// a_n = e^{j n mu} I_n(kappa)/I_0(kappa), n = 0..count-1.
CVector vm_moments(double mu, double kappa, int count);

/// Single von Mises approximation of q(theta) ∝ exp(Re{eta^H a(theta)}).
/// The constant term eta_0 is ignored. Moments are taken over the contiguous
/// region around the global maximum where the density stays within e^-40 of
/// its peak.
VonMises project_von_mises(const CVector& eta);

/// Re{eta^H a(theta)} evaluated directly.
double log_density(const CVector& eta, double theta);

}  // namespace valse
