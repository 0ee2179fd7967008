#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qsm/classical/manifold.hpp"
#include "qsm/experiments/spacing.hpp"
#include "qsm/quantum/husimi.hpp"

namespace qsm::experiments {

// Torus polyline with NaN separators where the reduced curve wraps.
struct TorusPolyline {
  std::vector<double> q, p;
};

inline void append_wrapped(TorusPolyline& out, const std::vector<classical::PhasePoint>& lifted, bool reflect) {
  double pq = NAN, pp = NAN;
  for (const auto& z : lifted) {
    classical::PhasePoint r = reflect ? classical::PhasePoint{-z.q, -z.p}.reduced() : z.reduced();
    if (std::isfinite(pq) && (std::abs(r.q - pq) > 0.5 || std::abs(r.p - pp) > 0.5)) {
      out.q.push_back(NAN);
      out.p.push_back(NAN);
    }
    out.q.push_back(r.q);
    out.p.push_back(r.p);
    pq = r.q;
    pp = r.p;
  }
  out.q.push_back(NAN);
  out.p.push_back(NAN);
}

struct ManifoldOverlay {
  classical::ManifoldCurve unstable, stable;
  TorusPolyline unstable_lines, stable_lines;  // both branches and their point reflections
};

inline ManifoldOverlay manifold_overlay(double k, double arc_length, double tol) {
  const classical::MapParams params(k);
  ManifoldOverlay m;
  m.unstable = classical::trace_manifold(params, classical::Branch::unstable, arc_length, tol);
  m.stable = classical::trace_manifold(params, classical::Branch::stable, arc_length, tol);
  for (bool reflect : {false, true}) {
    append_wrapped(m.unstable_lines, m.unstable.points, reflect);
    append_wrapped(m.stable_lines, m.stable.points, reflect);
  }
  return m;
}

// Orbits of `seeds` points within 1e-3 of the unstable manifold near z0,
// reduced to the torus.
inline std::vector<classical::PhasePoint> chaotic_layer(double k, int seeds = 20, int steps = 10000) {
  const classical::MapParams params(k);
  const classical::PhasePoint vu = classical::linearize_fixed_point(params).unstable_direction;
  const classical::PhasePoint normal{-vu.p, vu.q};
  std::vector<classical::PhasePoint> out;
  out.reserve(static_cast<std::size_t>(seeds) * steps);
  for (int j = 0; j < seeds; ++j) {
    classical::PhasePoint z = 1e-2 * vu + (1e-3 * (j + 1.0) / seeds) * normal;
    for (int t = 0; t < steps; ++t) {
      z = classical::step(z, params).reduced();
      out.push_back(z);
    }
  }
  return out;
}

struct GalleryEntry {
  int rank = 1;  // 1 = strongest
  int index = 0;
  std::optional<long> label;  // comb label when the state belongs to the resonance comb
  double phi = 0.0;           // unwrapped next to phi_BS
  double intensity = 0.0;
  double x = 0.0;
  double libration = 0.0;
  double peak_q = 0.0, peak_p = 0.0;
  std::optional<long> n;  // quantization number of the nearest semiclassical solution
  double n_deviation = 0.0;
  quantum::HusimiGrid husimi;

  // r<rank>[_label<+-l>][_n<n>]
  std::string name() const {
    std::string s = "r" + std::to_string(rank);
    if (label) s += std::string("_label") + (*label > 0 ? "+" : "") + std::to_string(*label);
    if (n) s += "_n" + std::to_string(*n);
    return s;
  }
};

struct Gallery {
  int N = 0;
  double k = 0.0;
  std::vector<GalleryEntry> entries;
  SemiclassicalInput input;
};

// Husimi maps of the top_m strongest states of the resonance decomposition.
inline Gallery husimi_gallery(int N, double k, int top_m, int grid, const semiclassics::FixtureSet& fixtures,
                              double floor = 5e-6, double ratio = 0.05, double classical_tol = 1e-9) {
  require(top_m >= 1 && top_m <= 12, ErrorCode::invalid_argument, "top_m must lie in 1..12");
  const quantum::TorusHilbert space(N);
  quantum::SpectralDecomposition d = quantum::diagonalize_floquet(space, k);
  quantum::spectral_decomposition(d, quantum::resonance_state(space, k));

  Gallery g;
  g.N = N;
  g.k = k;
  g.input = semiclassical_input(k, fixtures, classical_tol);
  const auto comb = select_comb(d.eigenphases, d.intensities, N, k, floor, ratio);
  std::vector<semiclassics::QuantizationSolution> sols;
  try {
    sols = semiclassics::solve_quantization(N, k, g.input.mean());
  } catch (const Error&) {
  }

  std::vector<int> order(N);
  for (int i = 0; i < N; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return d.intensities(a) > d.intensities(b); });
  order.resize(std::min(top_m, N));

  const double bs = semiclassics::bohr_sommerfeld_phase(N, k);
  const double lambda = classical::stability_exponent(k);
  for (int idx : order) {
    GalleryEntry e;
    e.rank = static_cast<int>(g.entries.size()) + 1;
    e.index = idx;
    e.phi = unwrap_near(d.eigenphases(idx), bs);
    e.intensity = d.intensities(idx);
    e.x = (bs - e.phi) / lambda;
    for (const auto& c : comb)
      if (c.index == idx) e.label = c.label;
    double best = INFINITY;
    for (const auto& s : sols) {
      const double dev = unwrap_near(s.phi, bs) - e.phi;
      if (std::abs(dev) < std::abs(best)) {
        best = dev;
        e.n = s.n;
      }
    }
    e.n_deviation = std::isfinite(best) ? best : 0.0;
    e.husimi.size = grid;
    e.husimi.values.setZero(grid, grid);
    g.entries.push_back(std::move(e));
  }

  // one coherent state per grid point, projected on every selected state
  quantum::MatrixC states(N, static_cast<Eigen::Index>(g.entries.size()));
  for (std::size_t j = 0; j < g.entries.size(); ++j) states.col(j) = d.eigenvectors.col(g.entries[j].index);
  for (int iq = 0; iq < grid; ++iq) {
    for (int ip = 0; ip < grid; ++ip) {
      const quantum::VectorC c = quantum::coherent_state(space, static_cast<double>(iq) / grid, static_cast<double>(ip) / grid);
      const quantum::VectorC proj = states.adjoint() * c;
      for (std::size_t j = 0; j < g.entries.size(); ++j) g.entries[j].husimi.values(iq, ip) = std::norm(proj(j));
    }
  }
  for (auto& e : g.entries) {
    const double top = e.husimi.values.maxCoeff();
    if (top > 0.0) e.husimi.values /= top;
    const auto [iq, ip] = e.husimi.peak();
    e.peak_q = e.husimi.q(iq);
    e.peak_p = e.husimi.p(ip);
    e.libration = quantum::libration_fraction(e.husimi, k);
  }
  return g;
}

}  // namespace qsm::experiments
