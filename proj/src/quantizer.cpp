#include "valse/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace valse {

QuantizerSpec build_uniform(int bit_depth, double sigma_z) {
  if (bit_depth < 1) throw std::invalid_argument("build_uniform: bit depth must be >= 1");
  if (bit_depth > 24) throw std::invalid_argument("build_uniform: bit depth too large");
  if (!(sigma_z > 0.0)) throw std::invalid_argument("build_uniform: sigma_z must be > 0");

  const int cells = 1 << bit_depth;
  const double r = 3.0 * sigma_z / std::sqrt(2.0);
  const double width = 2.0 * r / cells;
  const double inf = std::numeric_limits<double>::infinity();

  QuantizerSpec spec;
  spec.bit_depth = bit_depth;
  spec.clip_halfwidth = r;
  spec.thresholds.reserve(cells + 1);
  spec.thresholds.push_back(-inf);
  for (int k = 1; k < cells; ++k) {
    // Symmetric construction keeps the middle threshold exactly at zero.
    spec.thresholds.push_back((2 * k - cells) * (r / cells));
  }
  spec.thresholds.push_back(inf);
  spec.levels.reserve(cells);
  for (int k = 0; k < cells; ++k) spec.levels.push_back(-r + (k + 0.5) * width);
  return spec;
}

int cell_index(const QuantizerSpec& spec, double value) {
  if (std::isnan(value)) throw std::invalid_argument("quantize: NaN input");
  // Interior thresholds t_1..t_{|D|-1}; count those <= value.
  const auto first = spec.thresholds.begin() + 1;
  const auto last = spec.thresholds.end() - 1;
  return static_cast<int>(std::upper_bound(first, last, value) - first);
}

std::pair<double, double> interval_of(const QuantizerSpec& spec, int level_index) {
  if (level_index < 0 || level_index >= spec.cell_count())
    throw std::out_of_range("interval_of: level index " + std::to_string(level_index));
  return {spec.thresholds[level_index], spec.thresholds[level_index + 1]};
}

int level_index(const QuantizerSpec& spec, double level) {
  const double tol = 1e-9 * std::max(1.0, spec.clip_halfwidth);
  const int l = cell_index(spec, level);
  if (std::abs(spec.levels[l] - level) <= tol) return l;
  throw std::invalid_argument("unknown quantizer level " + std::to_string(level));
}

CVector quantize(const QuantizerSpec& spec, const CVector& x) {
  CVector y(x.size());
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    y[n] = cplx(spec.levels[cell_index(spec, x[n].real())],
                spec.levels[cell_index(spec, x[n].imag())]);
  }
  return y;
}

CVector dequantize_aqnm(const QuantizerSpec& spec, const CVector& y) {
  for (Eigen::Index n = 0; n < y.size(); ++n) {
    level_index(spec, y[n].real());
    level_index(spec, y[n].imag());
  }
  return y;
}

CellIndices cells_of(const QuantizerSpec& spec, const CVector& y) {
  CellIndices cells;
  cells.re.reserve(y.size());
  cells.im.reserve(y.size());
  for (Eigen::Index n = 0; n < y.size(); ++n) {
    cells.re.push_back(level_index(spec, y[n].real()));
    cells.im.push_back(level_index(spec, y[n].imag()));
  }
  return cells;
}

}  // namespace valse
