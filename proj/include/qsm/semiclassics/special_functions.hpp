#pragma once

#include <cmath>

#include "qsm/error.hpp"
#include "qsm/numeric.hpp"

namespace qsm::semiclassics {

// Published constants of the two interpolation formulas.
namespace constants {
inline constexpr double eta0 = 3.5343063528;
inline constexpr double eta_a = 5.3886558307;
inline constexpr double eta_b = 12.80436182;
inline constexpr double z1 = 423.0;
inline constexpr double z2 = -0.4337;
inline constexpr double z3 = 1.78;

inline constexpr double ftilde0 = 2.0920992401;
inline constexpr double ftilde_c = 8.9946298154;
inline constexpr double z4 = 103.0;
inline constexpr double z5 = 1.8;
}  // namespace constants

// Constants of the eta interpolation fixed by eta(0), a and b.
struct EtaCoefficients {
  double B, A, C;
};

inline EtaCoefficients eta_coefficients(double eta0 = constants::eta0, double a = constants::eta_a,
                                        double b = constants::eta_b) {
  EtaCoefficients c{};
  c.B = std::pow(16.0 / pi * (a * a - b), 0.8);
  c.A = pi * std::pow(c.B, 0.25) / 4.0;
  c.C = eta0 - std::log(std::sqrt(2.0 * a)) - c.A - 1.0;
  return c;
}

// Constants of the F~ interpolation fixed by F~(0) and the curvature c:
// c = (1 + D^2 pi^2) / (4 D^{5/2}) (monotone in D) and E = F~(0) - 1/sqrt(D).
struct FtildeCoefficients {
  double D, E;
};

inline FtildeCoefficients ftilde_coefficients(double f0 = constants::ftilde0, double c = constants::ftilde_c) {
  auto curvature = [](double D) { return (1.0 + D * D * pi * pi) / (4.0 * std::pow(D, 2.5)); };
  double lo = 1e-3, hi = 10.0;
  require(curvature(lo) > c && curvature(hi) < c, ErrorCode::invalid_argument, "curvature outside bracket");
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (curvature(mid) > c ? lo : hi) = mid;
  }
  const double D = 0.5 * (lo + hi);
  return {D, f0 - 1.0 / std::sqrt(D)};
}

// Interpolation of eta(x), the reduced phase of the homoclinic amplitude.
inline double eta(double x) {
  static const EtaCoefficients k = eta_coefficients();
  const double x2 = x * x;
  return -std::log(std::sqrt(x2 + 1.0 / (2.0 * constants::eta_a))) + 1.0 + k.A * std::pow(1.0 + k.B * x2 * x2, -0.25) +
         k.C * std::pow(1.0 + constants::z1 * x2 * x2 * x2, constants::z2 * std::log(constants::z3 + x2));
}

// Large-|x| asymptote -ln|x| + 1 + pi/(4|x|).
inline double eta_asymptote(double x) {
  const double ax = std::abs(x);
  return -std::log(ax) + 1.0 + pi / (4.0 * ax);
}

// x * eta(x), the phase itself.
inline double varphi(double x) { return x * eta(x); }

// Interpolation of F~(x).
inline double ftilde(double x) {
  static const FtildeCoefficients k = ftilde_coefficients();
  const double x2 = x * x;
  return std::pow(k.D * k.D + x2, -0.25) / std::sqrt(std::cosh(pi * x)) +
         k.E * std::pow(1.0 + constants::z4 * x2 * x2, -std::log(std::sqrt(constants::z5 + x2)));
}

// Large-|x| asymptote sqrt(2/|x|) exp(-pi |x| / 2).
inline double ftilde_asymptote(double x) {
  const double ax = std::abs(x);
  return std::sqrt(2.0 / ax) * std::exp(-pi * ax / 2.0);
}

}  // namespace qsm::semiclassics
