#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qsm/classical/manifold.hpp"
#include "qsm/numeric.hpp"

namespace qsm::classical {

struct HomoclinicSearchConfig {
  ManifoldConfig manifold{};
  // Intersections are collected in this q-window of the lifted plane.
  double window_q_min = 0.2;
  double window_q_max = 0.9;
  // Polylines are traced until they cross these q values.
  double unstable_exit_q = 0.92;
  double stable_exit_q = 0.08;
  double min_crossing_angle = 1e-12;  // sin of the angle between tangents
  std::array<int, 2> maslov{0, 1};    // mu of the first and second primary orbit
  double endpoint_tol = 1e-13;
  int min_tail_steps = 10;
};

struct ManifoldIntersection {
  double t_unstable = 0.0;
  double t_stable = 0.0;
  PhasePoint point;  // lifted
  double crossing_sine = 0.0;
};

enum class OrbitDirection { forward, backward };

struct LiftedOrbit {
  std::vector<PhasePoint> points;
  std::size_t seed_index = 0;
  OrbitDirection direction = OrbitDirection::forward;
};

enum class Provenance { computed, fixture, configured, absent };

constexpr std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::computed: return "computed";
    case Provenance::fixture: return "fixture";
    case Provenance::configured: return "configured";
    case Provenance::absent: return "absent";
  }
  return "absent";
}

struct HomoclinicRecord {
  int index = 1;  // 1 or 2
  PhasePoint seed_point;  // on the torus
  ManifoldIntersection intersection;
  LiftedOrbit orbit;
  double S = 0.0;
  int mu = 0;
  std::optional<double> A;
  std::optional<double> L;
  Provenance mu_source = Provenance::configured;
  Provenance A_source = Provenance::absent;
  Provenance L_source = Provenance::absent;
};

struct PrimaryHomoclinicPair {
  HomoclinicRecord first;
  HomoclinicRecord second;
  double k = 0.0;
  double tol = 0.0;
};

// Lagrangian generating function of the lifted map, p = -dF/dq, p' = dF/dq'.
inline double generating_function(double q, double q_next, const MapParams& params) {
  const double dq = q_next - q;
  return 0.5 * dq * dq - params.k / (4.0 * pi * pi) * std::cos(two_pi * q);
}

namespace detail {

inline bool near_fixed_point_lift(PhasePoint z, double tol) {
  return std::abs(z.q - std::round(z.q)) <= tol && std::abs(z.p) <= tol;
}

}  // namespace detail

// Convergent action of an orbit that starts and ends at lifts of z0, measured
// relative to the fixed point: sum_t [F(q_t, q_{t+1}) - F(0, 0)].
inline double homoclinic_action(const LiftedOrbit& orbit, const MapParams& params,
                                double endpoint_tol = 1e-10) {
  require(!orbit.points.empty(), ErrorCode::non_convergent_sum, "empty orbit");
  require(detail::near_fixed_point_lift(orbit.points.front(), endpoint_tol) &&
              detail::near_fixed_point_lift(orbit.points.back(), endpoint_tol),
          ErrorCode::non_convergent_sum, "orbit endpoints do not approach a lift of z0");
  const double f0 = generating_function(0.0, 0.0, params);
  CompensatedSum sum;
  for (std::size_t i = 0; i + 1 < orbit.points.size(); ++i) {
    sum.add(generating_function(orbit.points[i].q, orbit.points[i + 1].q, params) - f0);
  }
  return sum.value();
}

namespace detail {

inline std::vector<ManifoldSample> trace_until_exit(const ManifoldParametrization& param,
                                                    const RefinementRule& rule, double exit_q,
                                                    bool exit_above, int per_unit) {
  double t_exit = 0.0;
  for (;; t_exit += 0.125) {
    const PhasePoint z = param.point(t_exit);
    if (exit_above ? z.q > exit_q : z.q < exit_q) break;
    if (t_exit > 400.0) {
      throw Error(ErrorCode::no_intersection_found, "manifold never left the fixed-point region");
    }
  }
  std::vector<ManifoldSample> out;
  sample_adaptive(param, 0.0, t_exit + 0.125, rule, out, per_unit);
  return out;
}

// Intersection of segments [a,b] and [c,d]; returns fractions (s, u) if they cross.
inline std::optional<std::pair<double, double>> segment_cross(PhasePoint a, PhasePoint b,
                                                              PhasePoint c, PhasePoint d) {
  const PhasePoint r = b - a, s = d - c;
  const double denom = cross(r, s);
  if (denom == 0.0) return std::nullopt;
  const double t = cross(c - a, s) / denom;
  const double u = cross(c - a, r) / denom;
  if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return std::make_pair(t, u);
}

// Newton iteration on P_u(tu) = P_s(ts).
inline std::optional<ManifoldIntersection> refine_intersection(const ManifoldParametrization& uparam,
                                                               const ManifoldParametrization& sparam,
                                                               double tu, double ts, double tu_span,
                                                               double ts_span) {
  const double tu_lo = tu - 2.0 * tu_span, tu_hi = tu + 2.0 * tu_span;
  const double ts_lo = ts - 2.0 * ts_span, ts_hi = ts + 2.0 * ts_span;
  for (int iter = 0; iter < 60; ++iter) {
    const PhasePoint r = uparam.point(tu) - sparam.point(ts);
    const PhasePoint du = uparam.tangent(tu);
    const PhasePoint ds = sparam.tangent(ts);
    // [du, -ds] [dtu, dts]^T = -r
    const double det = cross(du, ds) * -1.0;
    if (det == 0.0) return std::nullopt;
    const double dtu = (-r.q * -ds.p - -ds.q * -r.p) / det;
    const double dts = (du.q * -r.p - du.p * -r.q) / det;
    tu += dtu;
    ts += dts;
    if (tu < tu_lo || tu > tu_hi || ts < ts_lo || ts > ts_hi) return std::nullopt;
    if (std::abs(dtu) <= 1e-15 * std::max(1.0, std::abs(tu)) &&
        std::abs(dts) <= 1e-15 * std::max(1.0, std::abs(ts))) {
      break;
    }
  }
  ManifoldIntersection x;
  x.t_unstable = tu;
  x.t_stable = ts;
  const PhasePoint pu = uparam.point(tu), ps = sparam.point(ts);
  if ((pu - ps).norm() > 1e-11) return std::nullopt;
  x.point = 0.5 * (pu + ps);
  const PhasePoint du = uparam.tangent(tu), ds = sparam.tangent(ts);
  x.crossing_sine = std::abs(cross(du, ds)) / (du.norm() * ds.norm());
  return x;
}

}  // namespace detail

// All transversal intersections of the upper separatrix branches inside the
// search window, sorted along the unstable branch.
inline std::vector<ManifoldIntersection> intersect_manifolds(const MapParams& params, double tol,
                                                             const HomoclinicSearchConfig& config = {}) {
  require(params.k > 0.0 && params.k <= 2.0, ErrorCode::no_intersection_found,
          "homoclinic search supports 0 < k <= 2, got k=" + std::to_string(params.k));
  require(tol > 0.0, ErrorCode::invalid_argument, "tolerance must be positive");
  const ManifoldParametrization uparam(params, Branch::unstable, config.manifold.seed_distance);
  const ManifoldParametrization sparam(params, Branch::stable, config.manifold.seed_distance);
  const RefinementRule rule{tol, config.manifold.max_spacing, config.manifold.max_turning,
                            config.manifold.max_points};
  const int per_unit = config.manifold.initial_samples_per_generation;
  const auto us = detail::trace_until_exit(uparam, rule, config.unstable_exit_q, true, per_unit);
  const auto ss = detail::trace_until_exit(sparam, rule, config.stable_exit_q, false, per_unit);

  const double qlo = config.window_q_min, qhi = config.window_q_max;
  constexpr int cells = 1024;
  const double cell_w = (qhi - qlo) / cells;
  std::vector<std::vector<std::size_t>> buckets(cells);
  auto cell_of = [&](double q) {
    return std::clamp(static_cast<int>(std::floor((q - qlo) / cell_w)), 0, cells - 1);
  };
  for (std::size_t i = 0; i + 1 < ss.size(); ++i) {
    const double a = std::min(ss[i].point.q, ss[i + 1].point.q);
    const double b = std::max(ss[i].point.q, ss[i + 1].point.q);
    if (b < qlo || a > qhi) continue;
    for (int c = cell_of(a); c <= cell_of(b); ++c) buckets[c].push_back(i);
  }

  std::vector<ManifoldIntersection> found;
  std::vector<std::size_t> last_seen(ss.size(), static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i + 1 < us.size(); ++i) {
    const PhasePoint a = us[i].point, b = us[i + 1].point;
    const double lo = std::min(a.q, b.q), hi = std::max(a.q, b.q);
    if (hi < qlo || lo > qhi) continue;
    for (int c = cell_of(lo); c <= cell_of(hi); ++c) {
      for (std::size_t j : buckets[c]) {
        if (last_seen[j] == i) continue;
        last_seen[j] = i;
        const auto hit = detail::segment_cross(a, b, ss[j].point, ss[j + 1].point);
        if (!hit) continue;
        const double tu = us[i].t + hit->first * (us[i + 1].t - us[i].t);
        const double ts = ss[j].t + hit->second * (ss[j + 1].t - ss[j].t);
        auto x = detail::refine_intersection(uparam, sparam, tu, ts, us[i + 1].t - us[i].t,
                                             ss[j + 1].t - ss[j].t);
        if (!x) continue;
        if (x->point.q < qlo || x->point.q > qhi) continue;
        if (x->crossing_sine < config.min_crossing_angle) {
          throw Error(ErrorCode::tangency_detected,
                      "manifolds cross at q=" + std::to_string(x->point.q) +
                          " with sin(angle)=" + std::to_string(x->crossing_sine));
        }
        found.push_back(*x);
      }
    }
  }
  std::sort(found.begin(), found.end(),
            [](const auto& l, const auto& r) { return l.t_unstable < r.t_unstable; });
  std::vector<ManifoldIntersection> unique;
  for (const auto& x : found) {
    if (!unique.empty() && (unique.back().point - x.point).norm() < 1e-10) continue;
    unique.push_back(x);
  }
  return unique;
}

// Orbit through a homoclinic point, lifted from (0,0) to (1,0).  The backward
// half is generated along the unstable branch and the forward half along the
// stable branch, so neither half iterates in an expanding direction.
inline LiftedOrbit build_homoclinic_orbit(const MapParams& params, const ManifoldIntersection& x,
                                          const HomoclinicSearchConfig& config = {}) {
  const ManifoldParametrization uparam(params, Branch::unstable, config.manifold.seed_distance);
  const ManifoldParametrization sparam(params, Branch::stable, config.manifold.seed_distance);
  const auto [nu, tau_u] = ManifoldParametrization::split(x.t_unstable);
  const auto [ns, tau_s] = ManifoldParametrization::split(x.t_stable);
  require(nu >= 0 && ns >= 1, ErrorCode::non_convergent_sum,
          "intersection lies inside the linear seed region");

  auto tail_length = [&](double tau) {
    int j = config.min_tail_steps;
    while (config.manifold.seed_distance * std::exp((tau - j) * std::log(uparam.rate())) >
           config.endpoint_tol) {
      ++j;
    }
    return j;
  };

  LiftedOrbit orbit;
  const int ju = tail_length(tau_u);
  for (int j = ju; j >= 1; --j) orbit.points.push_back(uparam.seed(tau_u - j));
  PhasePoint z = uparam.seed(tau_u);
  orbit.points.push_back(z);
  for (int i = 0; i < nu; ++i) {
    z = step(z, params);
    orbit.points.push_back(z);
  }
  orbit.seed_index = orbit.points.size() - 1;

  std::vector<PhasePoint> ws;
  ws.reserve(ns + 1);
  PhasePoint w = sparam.local_seed(tau_s);
  ws.push_back(w + sparam.anchor());
  for (int i = 0; i < ns; ++i) {
    w = step_inverse(w, params);
    ws.push_back(w + sparam.anchor());
  }
  for (int i = ns - 1; i >= 0; --i) orbit.points.push_back(ws[i]);
  const int js = tail_length(tau_s);
  for (int j = 1; j <= js; ++j) orbit.points.push_back(sparam.seed(tau_s - j));
  return orbit;
}

namespace detail {

inline std::pair<std::size_t, std::size_t> select_primary_pair(
    const std::vector<ManifoldIntersection>& xs) {
  require(xs.size() >= 2, ErrorCode::no_intersection_found,
          "fewer than two manifold intersections in the search window");
  std::vector<std::size_t> by_stable(xs.size());
  std::iota(by_stable.begin(), by_stable.end(), 0);
  std::sort(by_stable.begin(), by_stable.end(),
            [&](std::size_t l, std::size_t r) { return xs[l].t_stable < xs[r].t_stable; });
  std::vector<std::size_t> stable_rank(xs.size());
  for (std::size_t r = 0; r < by_stable.size(); ++r) stable_rank[by_stable[r]] = r;

  auto adjacent = [&](std::size_t i, std::size_t j) {
    const auto ri = stable_rank[i], rj = stable_rank[j];
    return (ri > rj ? ri - rj : rj - ri) == 1;
  };
  std::size_t centre = 0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (std::abs(xs[i].point.q - 0.5) < std::abs(xs[centre].point.q - 0.5)) centre = i;
  }
  if (centre + 1 < xs.size() && adjacent(centre, centre + 1)) return {centre, centre + 1};
  if (centre > 0 && adjacent(centre - 1, centre)) return {centre - 1, centre};
  throw Error(ErrorCode::no_intersection_found,
              "no pair of intersections adjacent along both manifolds near q=0.5");
}

}  // namespace detail

// Locates the two primary homoclinic orbits of z0 from manifold geometry and
// computes their actions.  The orbit with the smaller action is labelled first.
inline PrimaryHomoclinicPair find_primary_homoclinic(const MapParams& params, double tol,
                                                     const HomoclinicSearchConfig& config = {}) {
  const auto xs = intersect_manifolds(params, tol, config);
  const auto [ia, ib] = detail::select_primary_pair(xs);

  auto make_record = [&](const ManifoldIntersection& x) {
    HomoclinicRecord rec;
    rec.intersection = x;
    rec.seed_point = x.point.reduced();
    rec.orbit = build_homoclinic_orbit(params, x, config);
    rec.S = homoclinic_action(rec.orbit, params);
    return rec;
  };
  HomoclinicRecord a = make_record(xs[ia]);
  HomoclinicRecord b = make_record(xs[ib]);
  if (b.S < a.S) std::swap(a, b);
  a.index = 1;
  b.index = 2;
  a.mu = config.maslov[0];
  b.mu = config.maslov[1];
  return {std::move(a), std::move(b), params.k, tol};
}

// Area enclosed by the unstable arc and the stable arc joining the two primary
// homoclinic points of the pair.
inline double lobe_area(const MapParams& params, const PrimaryHomoclinicPair& pair, double tol,
                        const HomoclinicSearchConfig& config = {}) {
  const ManifoldParametrization uparam(params, Branch::unstable, config.manifold.seed_distance);
  const ManifoldParametrization sparam(params, Branch::stable, config.manifold.seed_distance);
  const RefinementRule rule{tol, config.manifold.max_spacing, config.manifold.max_turning,
                            config.manifold.max_points};
  const ManifoldIntersection* a = &pair.first.intersection;
  const ManifoldIntersection* b = &pair.second.intersection;
  if (a->t_unstable > b->t_unstable) std::swap(a, b);

  std::vector<ManifoldSample> uarc;
  sample_adaptive(uparam, a->t_unstable, b->t_unstable, rule, uarc, 64);
  std::vector<ManifoldSample> sarc;
  const double s_lo = std::min(a->t_stable, b->t_stable);
  const double s_hi = std::max(a->t_stable, b->t_stable);
  sample_adaptive(sparam, s_lo, s_hi, rule, sarc, 64);
  // traverse the stable arc from b back to a
  if (b->t_stable > a->t_stable) std::reverse(sarc.begin(), sarc.end());

  std::vector<PhasePoint> polygon;
  polygon.reserve(uarc.size() + sarc.size());
  for (const auto& s : uarc) polygon.push_back(s.point);
  for (std::size_t i = 1; i + 1 < sarc.size(); ++i) polygon.push_back(sarc[i].point);

  const PhasePoint origin = a->point;
  CompensatedSum twice_area;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const PhasePoint p0 = polygon[i] - origin;
    const PhasePoint p1 = polygon[(i + 1) % polygon.size()] - origin;
    twice_area.add(cross(p0, p1));
  }
  return 0.5 * std::abs(twice_area.value());
}

inline double lobe_area(const MapParams& params, double tol, const HomoclinicSearchConfig& config = {}) {
  return lobe_area(params, find_primary_homoclinic(params, tol, config), tol, config);
}

}  // namespace qsm::classical
