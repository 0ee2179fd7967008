#pragma once

#include <cmath>
#include <vector>

#include "qsm/quantum/hilbert.hpp"

namespace qsm::quantum {

// values(iq, ip) at q = iq/size, p = ip/size; normalized to max 1.
struct HusimiGrid {
  int size = 0;
  Eigen::MatrixXd values;

  double q(int iq) const { return static_cast<double>(iq) / size; }
  double p(int ip) const { return static_cast<double>(ip) / size; }

  std::pair<int, int> peak() const {
    Eigen::Index r = 0, c = 0;
    values.maxCoeff(&r, &c);
    return {static_cast<int>(r), static_cast<int>(c)};
  }
};

// Torus coherent state: Gaussian of width sqrt(hbar/2) in q, periodized over
// enough lifts that dropped images are below 1e-16 relative.
inline VectorC coherent_state(const TorusHilbert& space, double q0, double p0) {
  const double hbar = space.hbar;
  const int images = 1 + static_cast<int>(std::ceil(std::sqrt(2.0 * hbar * 37.0)));
  VectorC c = VectorC::Zero(space.N);
  for (int j = 0; j < space.N; ++j) {
    for (int n = -images; n <= images; ++n) {
      const double x = space.position(j) - q0 + n;
      const double g = std::exp(-x * x / (2.0 * hbar));
      if (g < 1e-300) continue;
      c(j) += std::polar(g, p0 * x / hbar);
    }
  }
  return c / c.norm();
}

inline HusimiGrid husimi(const StateVector& state, const TorusHilbert& space, int grid_size) {
  require(grid_size >= 16, ErrorCode::invalid_argument, "Husimi grid size must be >= 16");
  require(state.size() == space.N, ErrorCode::dimension_mismatch, "state dimension does not match the space");
  HusimiGrid h;
  h.size = grid_size;
  h.values.resize(grid_size, grid_size);
  for (int iq = 0; iq < grid_size; ++iq) {
    for (int ip = 0; ip < grid_size; ++ip) {
      const VectorC c = coherent_state(space, h.q(iq), h.p(ip));
      h.values(iq, ip) = std::norm(c.dot(state.amplitudes));
    }
  }
  const double top = h.values.maxCoeff();
  if (top > 0.0) h.values /= top;
  return h;
}

// Fraction of the Husimi mass inside the pendulum separatrix of the map,
// p^2/2 + (k/4pi^2) cos 2pi q < k/4pi^2 with p taken in [-1/2, 1/2).
inline double libration_fraction(const HusimiGrid& h, double k) {
  const double barrier = k / (4.0 * pi * pi);
  double in = 0.0, all = 0.0;
  for (int iq = 0; iq < h.size; ++iq) {
    for (int ip = 0; ip < h.size; ++ip) {
      double p = h.p(ip);
      if (p >= 0.5) p -= 1.0;
      const double energy = 0.5 * p * p + barrier * std::cos(two_pi * h.q(iq));
      all += h.values(iq, ip);
      if (energy < barrier) in += h.values(iq, ip);
    }
  }
  return all > 0.0 ? in / all : 0.0;
}

}  // namespace qsm::quantum
