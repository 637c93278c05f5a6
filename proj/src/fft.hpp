#pragma once

#include <vector>

#include "valse/core.hpp"

namespace valse::detail {

/// Evaluates f(theta) = Re{ sum_n conj(coeffs_n) e^{j n theta} } on the grid
/// theta_g = -pi + 2 pi g / points, g = 0..points-1. Requires
/// points >= coeffs.size().
std::vector<double> trig_poly_on_grid(const CVector& coeffs, int points);

}  // namespace valse::detail
