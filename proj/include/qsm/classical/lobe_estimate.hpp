#pragma once

#include <cmath>
#include <string>

#include "qsm/error.hpp"
#include "qsm/numeric.hpp"

namespace qsm::classical {

// Closed-form fit of the primary lobe area, 6pi (1 - 0.341 k^{1/3}) exp(-pi^2/sqrt(k)).
inline double lobe_area_estimate(double k) {
  require(k > 0.0, ErrorCode::invalid_argument, "lobe_area_estimate needs k > 0");
  return 6.0 * pi * (1.0 - 0.341 * std::cbrt(k)) * std::exp(-pi * pi / std::sqrt(k));
}

// Lobe area at which the two primary orbits interfere destructively,
// dS/hbar = 3pi/2 with hbar = 1/(2 pi N).
inline double break_area(double N) { return 3.0 / (4.0 * N); }

// Inverse relation N = 3 / (4 dS(k)).
inline double break_dimension(double k) { return 3.0 / (4.0 * lobe_area_estimate(k)); }

// Root of lobe_area_estimate(k) = 3/(4N) by bracketing and bisection.
inline double k_break(double N, double rel_tol = 1e-6) {
  require(N >= 2.0, ErrorCode::invalid_argument, "k_break needs N >= 2");
  const double target = break_area(N);
  // the estimate increases on (0, k_peak); k_peak is far above the supported range
  double lo = 1e-3, hi = 1.0;
  while (lobe_area_estimate(hi) < target) {
    lo = hi;
    hi *= 2.0;
    require(hi < 64.0, ErrorCode::invalid_argument,
            "no k_break below the estimate's maximum for N=" + std::to_string(N));
  }
  while (lobe_area_estimate(lo) > target) {
    hi = lo;
    lo *= 0.5;
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (lobe_area_estimate(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace qsm::classical
