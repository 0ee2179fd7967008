#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qsm/semiclassics/bohr_sommerfeld.hpp"
#include "qsm/semiclassics/special_functions.hpp"

namespace qsm::semiclassics {

// Canonical invariants of one homoclinic orbit, or the average over the
// primary pair (then mu = 1/2).
struct HomoclinicInvariants {
  double S = 0.0;
  double mu = 0.0;
  std::optional<double> A;
  std::optional<double> L;
};

inline double planck(double N) { return 1.0 / (two_pi * N); }

// Scaled distance from the resonance, x = (phi_BS - phi) / lambda.  phi is
// used as given; callers pick the representative near phi_BS.
inline double scaled_coordinate(double phi, double N, double k) {
  return (bohr_sommerfeld_phase(N, k) - phi) / classical::stability_exponent(k);
}

inline double relevance_of(const HomoclinicInvariants& inv) {
  if (!inv.A || !(*inv.A > 0.0)) throw Error(ErrorCode::missing_relevance, "relevance A missing or non-positive");
  return *inv.A;
}

// psi as a function of x.
inline double homoclinic_phase_at(double x, const HomoclinicInvariants& inv, double N) {
  const double hbar = planck(N);
  return inv.S / hbar - inv.mu * pi / 2.0 + x * eta(x) + x * std::log(relevance_of(inv) / hbar);
}

inline double homoclinic_phase(double phi, const HomoclinicInvariants& inv, double N, double k) {
  return homoclinic_phase_at(scaled_coordinate(phi, N, k), inv, N);
}

struct QuantizationSolution {
  long n = 0;
  long label = 0;  // n0 - n
  double x = 0.0;
  double phi = 0.0;  // in [0, 2pi)
  double residual = 0.0;
};

struct QuantizationOptions {
  double x_min = -3.0;
  double x_max = 3.0;
  int samples = 200;
  double residual_tol = 1e-9;
};

// True when psi(x) increases strictly across the sampled window.
inline bool phase_is_monotone(const HomoclinicInvariants& inv, double N, const QuantizationOptions& opt = {}) {
  double prev = homoclinic_phase_at(opt.x_min, inv, N);
  for (int i = 1; i <= 4 * opt.samples; ++i) {
    const double x = opt.x_min + (opt.x_max - opt.x_min) * i / (4.0 * opt.samples);
    const double cur = homoclinic_phase_at(x, inv, N);
    if (!(cur > prev)) return false;
    prev = cur;
  }
  return true;
}

// All roots of psi(x) = 2 pi n in the window.
inline std::vector<QuantizationSolution> solve_quantization(double N, double k, const HomoclinicInvariants& inv_mean,
                                                            const QuantizationOptions& opt = {}) {
  require(opt.x_max > opt.x_min && opt.samples >= 2, ErrorCode::invalid_argument, "bad quantization window");
  relevance_of(inv_mean);
  const double lambda = classical::stability_exponent(k);
  const double phi_bs = bohr_sommerfeld_phase(N, k);
  auto psi = [&](double x) { return homoclinic_phase_at(x, inv_mean, N); };

  std::vector<QuantizationSolution> roots;
  double xa = opt.x_min, fa = psi(xa);
  for (int i = 1; i <= opt.samples; ++i) {
    const double xb = opt.x_min + (opt.x_max - opt.x_min) * i / opt.samples;
    const double fb = psi(xb);
    const double lo = std::min(fa, fb), hi = std::max(fa, fb);
    for (long n = static_cast<long>(std::ceil(lo / two_pi)); two_pi * n <= hi; ++n) {
      const double target = two_pi * n;
      if (two_pi * n == fa && i > 1) continue;  // counted in the previous interval
      double a = xa, b = xb;
      double ga = fa - target;
      while (b - a > 1e-13 * std::max(1.0, std::abs(a))) {
        const double m = 0.5 * (a + b);
        const double gm = psi(m) - target;
        if ((gm < 0.0) == (ga < 0.0)) {
          a = m;
          ga = gm;
        } else {
          b = m;
        }
      }
      double x = 0.5 * (a + b);
      for (int it = 0; it < 3; ++it) {  // Newton polish, kept inside the bracket
        const double h = 1e-7;
        const double d = (psi(x + h) - psi(x - h)) / (2.0 * h);
        const double nx = x - (psi(x) - target) / d;
        if (!(nx >= xa && nx <= xb)) break;
        if (std::abs(psi(nx) - target) >= std::abs(psi(x) - target)) break;
        x = nx;
      }
      QuantizationSolution s;
      s.n = n;
      s.x = x;
      s.phi = wrap_phase(phi_bs - lambda * x);
      s.residual = std::abs(psi(x) - target);
      if (s.residual > opt.residual_tol) {
        throw Error(ErrorCode::no_roots_in_window, "root for n=" + std::to_string(n) + " has residual " +
                                                       std::to_string(s.residual));
      }
      roots.push_back(s);
    }
    xa = xb;
    fa = fb;
  }
  if (roots.empty()) {
    throw Error(ErrorCode::no_roots_in_window, "no solution of the quantization condition for N=" +
                                                   std::to_string(N) + ", k=" + std::to_string(k));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < roots.size(); ++i)
    if (std::abs(roots[i].x) < std::abs(roots[best].x)) best = i;
  const long n0 = roots[best].n;
  for (auto& r : roots) r.label = n0 - r.n;
  return roots;
}

inline const QuantizationSolution* find_label(const std::vector<QuantizationSolution>& sols, long label) {
  for (const auto& s : sols)
    if (s.label == label) return &s;
  return nullptr;
}

// cos(dpsi/2) with dpsi = dS/hbar - pi/2; zero marks the break of the precursor.
inline double interference_factor(double N, double dS) {
  return std::cos(0.5 * (dS / planck(N) - pi / 2.0));
}

struct MeanSpacing {
  double spacing = 0.0;  // lambda / ln(A/hbar)
  double count = 0.0;    // 2 sigma_phi / spacing = sqrt(2) ln(A/hbar)
};

inline MeanSpacing mean_spacing_estimate(double N, double k, double A) {
  const double hbar = planck(N);
  require(A > hbar, ErrorCode::invalid_argument, "mean spacing needs A > hbar");
  const double L = std::log(A / hbar);
  return {classical::stability_exponent(k) / L, std::sqrt(2.0) * L};
}

}  // namespace qsm::semiclassics
