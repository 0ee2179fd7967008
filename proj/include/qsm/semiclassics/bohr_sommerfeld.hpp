#pragma once

#include <cmath>

#include "qsm/classical/map.hpp"
#include "qsm/error.hpp"
#include "qsm/numeric.hpp"

namespace qsm::semiclassics {

// Phase of the fixed-point resonance, (-kN/2pi) mod 2pi.
inline double bohr_sommerfeld_phase(double N, double k) {
  require(N >= 2.0, ErrorCode::invalid_argument, "bohr_sommerfeld_phase needs N >= 2");
  return wrap_phase(-k * N / two_pi);
}

// Semiclassical dispersion of the resonance over eigenphases, lambda / sqrt 2.
inline double phase_dispersion(double k) { return classical::stability_exponent(k) / std::sqrt(2.0); }

// Magnitude of the one-step autocorrelation, 1/sqrt(cosh lambda).
inline double autocorrelation_estimate(double k) {
  return 1.0 / std::sqrt(std::cosh(classical::stability_exponent(k)));
}

}  // namespace qsm::semiclassics
