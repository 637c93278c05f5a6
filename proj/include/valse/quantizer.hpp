#pragma once

#include <utility>
#include <vector>

#include "valse/core.hpp"

namespace valse {

/// Componentwise scalar quantizer with cells [t_l, t_{l+1}), l = 0..2^B-1,
/// where t_0 = -inf and t_{2^B} = +inf.
struct QuantizerSpec {
  int bit_depth = 0;
  std::vector<double> thresholds;  // 2^B + 1 entries including both infinities
  std::vector<double> levels;      // 2^B output levels
  double clip_halfwidth = 0.0;

  int cell_count() const { return static_cast<int>(levels.size()); }
};

/// Uniform quantizer over [-r, r] with r = 3 sigma_z / sqrt(2). Saturated
/// cells output the midpoint of their clipped portion; B = 1 reduces to the
/// zero-threshold sign quantizer with levels +-r/2.
QuantizerSpec build_uniform(int bit_depth, double sigma_z);

/// Index l with value in [t_l, t_{l+1}). Throws on NaN.
int cell_index(const QuantizerSpec& spec, double value);

std::pair<double, double> interval_of(const QuantizerSpec& spec, int level_index);

/// Index of an output level; throws std::invalid_argument for a value that is
/// not one of the quantizer's levels.
int level_index(const QuantizerSpec& spec, double level);

/// y_n = Q(Re x_n) + j Q(Im x_n).
CVector quantize(const QuantizerSpec& spec, const CVector& x);

/// Additive-quantization-noise view of y: the levels already are cell
/// midpoints, so this validates and passes them through.
CVector dequantize_aqnm(const QuantizerSpec& spec, const CVector& y);

/// Per-sample cell indices of a quantized signal, one vector per axis.
struct CellIndices {
  std::vector<int> re;
  std::vector<int> im;
};

CellIndices cells_of(const QuantizerSpec& spec, const CVector& y);

}  // namespace valse
