#pragma once

#include <stdexcept>
#include <string>

#include "valse/core.hpp"
#include "valse/quantizer.hpp"

namespace valse {

/// Parameter vector [theta; |w|; arg w] of length 3K.
RVector parameter_vector(const GroundTruth& truth);
GroundTruth truth_from_parameters(const RVector& kappa);

struct JacobianRows {
  RVector d_re;  // ∂Re z_n / ∂kappa
  RVector d_im;  // ∂Im z_n / ∂kappa
};

/// Derivatives of sample n (1-based) with respect to [theta; g; phi].
JacobianRows jacobian_rows(const GroundTruth& truth, int n);

/// Fisher information of componentwise-quantized observations.
RMatrix fim_quantized(const GroundTruth& truth, const QuantizerSpec& spec, int n, double sigma2);

/// Fisher information of unquantized observations y = z + CN(0, σ² I).
RMatrix fim_unquantized(const GroundTruth& truth, int n, double sigma2);

class SingularFisherError : public std::domain_error {
 public:
  SingularFisherError(const std::string& what, double condition)
      : std::domain_error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// Leading K×K block of F^{-1}. Throws SingularFisherError when the condition
/// number of the diagonally scaled F exceeds 1e12.
RMatrix crb_freq(const RMatrix& fisher, int k);

/// Per-sample information factors λ_n (real axis) and χ_n (imaginary axis).
struct AxisInformation {
  double re;
  double im;
};
AxisInformation quantized_information(cplx z, const QuantizerSpec& spec, double sigma2);

}  // namespace valse
