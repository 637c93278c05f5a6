#pragma once

#include <optional>

#include "valse/core.hpp"
#include "valse/quantizer.hpp"

namespace valse {

// Bounds applied to every message variance. Division of Gaussians can yield
// nonpositive variances; those become uninformative messages at the ceiling.
inline constexpr double kVarFloor = 1e-11;
inline constexpr double kVarCeil = 1e11;

/// Diagonal complex Gaussian belief CN(mean, diag(var)).
struct GaussianMessage {
  CVector mean;
  RVector var;
};

/// Observed samples together with the channel that produced them: either
/// unquantized (y = z + noise) or the componentwise quantizer.
class Observation {
 public:
  static Observation unquantized(CVector y);
  static Observation quantized(QuantizerSpec spec, CVector y);

  bool is_quantized() const { return quantizer_.has_value(); }
  const CVector& samples() const { return samples_; }
  const QuantizerSpec& quantizer() const { return *quantizer_; }
  const CellIndices& cells() const { return cells_; }
  int size() const { return static_cast<int>(samples_.size()); }

 private:
  CVector samples_;
  std::optional<QuantizerSpec> quantizer_;
  CellIndices cells_;
};

/// Componentwise posterior mean and variance of z under the prior message and
/// the observation likelihood with complex noise variance sigma2. Real and
/// imaginary axes are independent, each with prior variance var/2 and noise
/// variance sigma2/2.
GaussianMessage posterior_moments(const GaussianMessage& prior, const Observation& obs,
                                  double sigma2);

/// Gaussian division post / incoming with the clamping policy: when the
/// precision difference is not positive (or would exceed the ceiling) the
/// result is the uninformative message (post mean, kVarCeil).
GaussianMessage gaussian_divide(const CVector& post_mean, const RVector& post_var,
                                const CVector& in_mean, const RVector& in_var);

/// Module B extrinsic message returned to the line-spectrum module.
GaussianMessage extrinsic_b(const GaussianMessage& post, const GaussianMessage& ext_a);

/// EM noise update (||pseudo_y - z_post||^2 + sum v_post) / observed_count.
double em_noise_update(const CVector& pseudo_y, const GaussianMessage& post, int observed_count);

}  // namespace valse
