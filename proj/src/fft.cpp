#include "fft.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace valse::detail {

namespace {

// FFTW's planner is not re-entrant; execution of an existing plan on new
// arrays is.
fftw_plan plan_for(int points) {
  static std::mutex mutex;
  static std::map<int, fftw_plan> plans;
  std::lock_guard lock(mutex);
  auto it = plans.find(points);
  if (it != plans.end()) return it->second;
  std::vector<cplx> in(points), out(points);
  fftw_plan plan = fftw_plan_dft_1d(points, reinterpret_cast<fftw_complex*>(in.data()),
                                    reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan == nullptr) throw std::runtime_error("fftw: planning failed");
  plans.emplace(points, plan);
  return plan;
}

}  // namespace

std::vector<double> trig_poly_on_grid(const CVector& coeffs, int points) {
  const int n = static_cast<int>(coeffs.size());
  if (points < n) throw std::invalid_argument("trig_poly_on_grid: grid smaller than degree");
  std::vector<cplx> in(points, cplx(0.0, 0.0)), out(points);
  // e^{j n (-pi)} = (-1)^n shifts the grid origin to -pi.
  for (int i = 0; i < n; ++i) in[i] = (i % 2 == 0 ? 1.0 : -1.0) * std::conj(coeffs[i]);
  fftw_execute_dft(plan_for(points), reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  std::vector<double> f(points);
  for (int g = 0; g < points; ++g) f[g] = out[g].real();
  return f;
}

}  // namespace valse::detail
