#pragma once

// Scalar Gaussian helpers shared by the quantized-likelihood denoiser and the
// Fisher information of quantized observations.

namespace valse::gaussian {

double pdf(double x);
double cdf(double x);

/// Scaled complementary error function exp(u^2) erfc(u).
double erfcx(double u);

/// Standard normal restricted to [lower, upper). Either bound may be infinite.
struct Truncated {
  double log_mass;  // log(Phi(upper) - Phi(lower))
  double mean;      // (phi(lower) - phi(upper)) / mass
  double var;       // variance of the truncated variable
};

/// Tail-stable truncated moments: cells lying entirely on one side of zero are
/// evaluated through Mills ratios, so no probability difference ever
/// underflows.
Truncated truncated(double lower, double upper);

/// (phi(upper) - phi(lower))^2 / (Phi(upper) - Phi(lower)), the per-cell
/// Fisher information term. Cells with mass below 1e-300 contribute zero.
double fisher_cell_term(double lower, double upper);

}  // namespace valse::gaussian
