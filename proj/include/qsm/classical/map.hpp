#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "qsm/error.hpp"
#include "qsm/numeric.hpp"

namespace qsm::classical {

struct MapParams {
  double k = 0.0;

  explicit MapParams(double k_) : k(k_) {
    require(std::isfinite(k) && k >= 0.0, ErrorCode::invalid_argument,
            "perturbation k must be finite and non-negative, got " + std::to_string(k));
  }

  // Momentum kick (k/2pi) sin(2pi q).
  double kick(double q) const { return k / two_pi * std::sin(two_pi * q); }
};

// A point of the unit torus, or any real representative of one.
struct PhasePoint {
  double q = 0.0;
  double p = 0.0;

  PhasePoint reduced() const {
    auto mod1 = [](double x) {
      double r = x - std::floor(x);
      return r >= 1.0 ? 0.0 : r;
    };
    return {mod1(q), mod1(p)};
  }

  friend PhasePoint operator+(PhasePoint a, PhasePoint b) { return {a.q + b.q, a.p + b.p}; }
  friend PhasePoint operator-(PhasePoint a, PhasePoint b) { return {a.q - b.q, a.p - b.p}; }
  friend PhasePoint operator*(double s, PhasePoint a) { return {s * a.q, s * a.p}; }
  double norm() const { return std::hypot(q, p); }
};

inline double cross(PhasePoint a, PhasePoint b) { return a.q * b.p - a.p * b.q; }
inline double dot(PhasePoint a, PhasePoint b) { return a.q * b.q + a.p * b.p; }

// One application of the lifted map on the real plane (no reduction).
inline PhasePoint step(PhasePoint z, const MapParams& params) {
  const double p = z.p + params.kick(z.q);
  return {z.q + p, p};
}

inline PhasePoint step_inverse(PhasePoint z, const MapParams& params) {
  const double q = z.q - z.p;
  return {q, z.p - params.kick(q)};
}

// Lifted iteration; negative steps use the inverse map.
inline PhasePoint iterate(PhasePoint z, const MapParams& params, int steps) {
  if (steps >= 0) {
    for (int i = 0; i < steps; ++i) z = step(z, params);
  } else {
    for (int i = 0; i < -steps; ++i) z = step_inverse(z, params);
  }
  return z;
}

// Image on the torus after |steps| applications of the map (inverse when negative).
inline PhasePoint advance(PhasePoint z, const MapParams& params, int steps) {
  for (int i = 0; i < std::abs(steps); ++i) {
    z = (steps > 0 ? step(z, params) : step_inverse(z, params)).reduced();
  }
  return z.reduced();
}

using Matrix2 = Eigen::Matrix2d;

// Jacobian d(q',p')/d(q,p).
inline Matrix2 tangent_map(PhasePoint z, const MapParams& params) {
  const double kc = params.k * std::cos(two_pi * z.q);
  Matrix2 m;
  m << 1.0 + kc, 1.0, kc, 1.0;
  return m;
}

inline Matrix2 tangent_map_inverse(PhasePoint z, const MapParams& params) {
  // inverse of [[1+kc, 1], [kc, 1]] with det 1, evaluated at the preimage
  const PhasePoint pre = step_inverse(z, params);
  const double kc = params.k * std::cos(two_pi * pre.q);
  Matrix2 m;
  m << 1.0, -1.0, -kc, 1.0 + kc;
  return m;
}

// ln of the unstable multiplier of the fixed point (0,0).
inline double stability_exponent(double k) {
  require(k >= 0.0, ErrorCode::invalid_argument, "stability_exponent needs k >= 0");
  return std::log1p(k / 2.0 + std::sqrt(k + k * k / 4.0));
}

// Linearization at the fixed point: multipliers and unit eigenvectors.
// The unstable vector has positive components, the stable one points to q > 0, p < 0.
struct FixedPointLinearization {
  double unstable_multiplier = 1.0;
  double stable_multiplier = 1.0;
  PhasePoint unstable_direction;
  PhasePoint stable_direction;
};

inline FixedPointLinearization linearize_fixed_point(const MapParams& params) {
  const double k = params.k;
  const double root = std::sqrt(k + k * k / 4.0);
  FixedPointLinearization lin;
  lin.unstable_multiplier = 1.0 + k / 2.0 + root;
  lin.stable_multiplier = 1.0 + k / 2.0 - root;
  // (M - L) v = 0 with M = [[1+k,1],[k,1]] gives v = (1, L - 1 - k)
  PhasePoint vu{1.0, lin.unstable_multiplier - 1.0 - k};
  PhasePoint vs{1.0, lin.stable_multiplier - 1.0 - k};
  lin.unstable_direction = (1.0 / vu.norm()) * vu;
  lin.stable_direction = (1.0 / vs.norm()) * vs;
  return lin;
}

// Reversor of the map, lifted so that it exchanges the lifts (0,0) and (1,0):
// (q, p) -> (1 - q, p + kick(q)).  It maps the unstable branch leaving (0,0)
// onto the stable branch entering (1,0).
inline PhasePoint reversal(PhasePoint z, const MapParams& params) {
  return {1.0 - z.q, z.p + params.kick(z.q)};
}

}  // namespace qsm::classical
