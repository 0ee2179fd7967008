#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qsm/classical/map.hpp"

namespace qsm::classical {

enum class Branch { unstable, stable };

constexpr std::string_view to_string(Branch b) {
  return b == Branch::unstable ? "unstable" : "stable";
}

struct ManifoldConfig {
  double seed_distance = 1e-8;
  double max_spacing = 1e-3;
  double max_turning = 0.2;  // radians
  std::size_t max_points = 4'000'000;
  int initial_samples_per_generation = 8;
};

// Parametrization of the upper separatrix branches of the fixed point.
//
// The unstable branch leaves the lift (0,0) towards q > 0; the stable branch
// enters the lift (1,0) from q < 1.  Both lie in p > 0 for small k.  A real
// parameter t = n + tau (0 <= tau < 1) labels the point
//     P(t) = T^{+-n}(anchor + sign * delta * L^tau * v),
// where L is the expansion rate of the branch under the map that generates it
// (forward map for the unstable branch, inverse map for the stable one).
// P(t + 1) = T^{+-1}(P(t)) up to O(delta^2).
//
// Iteration runs in coordinates local to (0,0) and the anchor is added at the
// end (the lifted map commutes with q -> q + 1); seeding next to (1,0)
// directly would lose half the mantissa of the tiny displacement.
class ManifoldParametrization {
 public:
  ManifoldParametrization(const MapParams& params, Branch branch, double seed_distance = 1e-8)
      : params_(params), branch_(branch), delta_(seed_distance) {
    require(params.k > 0.0, ErrorCode::invalid_argument,
            "manifolds of z0 exist only for k > 0");
    require(seed_distance > 0.0, ErrorCode::invalid_argument, "seed distance must be positive");
    const auto lin = linearize_fixed_point(params);
    rate_ = lin.unstable_multiplier;
    log_rate_ = std::log(rate_);
    if (branch == Branch::unstable) {
      anchor_ = {0.0, 0.0};
      direction_ = lin.unstable_direction;
    } else {
      anchor_ = {1.0, 0.0};
      direction_ = -1.0 * lin.stable_direction;
    }
  }

  const MapParams& params() const { return params_; }
  Branch branch() const { return branch_; }
  PhasePoint anchor() const { return anchor_; }
  PhasePoint direction() const { return direction_; }
  double seed_distance() const { return delta_; }
  double rate() const { return rate_; }

  // Splits t into generation n and the fundamental-domain offset tau.
  static std::pair<int, double> split(double t) {
    const double n = std::floor(t);
    return {static_cast<int>(n), t - n};
  }

  // Seed relative to the anchor.
  PhasePoint local_seed(double tau) const {
    return (delta_ * std::exp(tau * log_rate_)) * direction_;
  }

  PhasePoint seed(double tau) const { return anchor_ + local_seed(tau); }

  // Image of a local point after n generations, translated to the anchor.
  PhasePoint local_iterate(PhasePoint z, int n) const {
    for (int i = 0; i < n; ++i) z = advance_one(z);
    return z;
  }

  PhasePoint point(double t) const {
    const auto [n, tau] = split(t);
    // negative generations stay in the linear regime
    if (n < 0) return seed(t);
    return anchor_ + local_iterate(local_seed(tau), n);
  }

  // dP/dt, propagated with the tangent maps.
  PhasePoint tangent(double t) const {
    const auto [n, tau] = split(t);
    PhasePoint z = local_seed(tau);
    const double s = delta_ * std::exp(tau * log_rate_) * log_rate_;
    Eigen::Vector2d v(s * direction_.q, s * direction_.p);
    if (n < 0) {
      const double s2 = delta_ * std::exp(t * log_rate_) * log_rate_;
      return s2 * direction_;
    }
    for (int i = 0; i < n; ++i) {
      if (branch_ == Branch::unstable) {
        v = tangent_map(z, params_) * v;
        z = step(z, params_);
      } else {
        z = step_inverse(z, params_);
        // Jacobian of the inverse map at the image point z_old equals M(z_new)^{-1}
        const double kc = params_.k * std::cos(two_pi * z.q);
        Matrix2 inv;
        inv << 1.0, -1.0, -kc, 1.0 + kc;
        v = inv * v;
      }
    }
    return {v(0), v(1)};
  }

  PhasePoint advance_one(PhasePoint z) const {
    return branch_ == Branch::unstable ? step(z, params_) : step_inverse(z, params_);
  }

 private:
  MapParams params_;
  Branch branch_;
  double delta_;
  double rate_ = 1.0;
  double log_rate_ = 0.0;
  PhasePoint anchor_;
  PhasePoint direction_;
};

struct ManifoldSample {
  double t = 0.0;
  PhasePoint point;
};

// Refinement thresholds for one polyline.
struct RefinementRule {
  double tol = 1e-9;  // chord deviation of the parametric midpoint
  double max_spacing = 1e-3;
  double max_turning = 0.2;
  std::size_t max_points = 4'000'000;
};

namespace detail {

inline double chord_deviation(PhasePoint a, PhasePoint b, PhasePoint m) {
  const PhasePoint ab = b - a;
  const double len = ab.norm();
  if (len == 0.0) return (m - a).norm();
  return std::abs(cross(ab, m - a)) / len;
}

inline double turning_angle(PhasePoint a, PhasePoint m, PhasePoint b) {
  const PhasePoint u = m - a;
  const PhasePoint v = b - m;
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::atan2(std::abs(cross(u, v)), dot(u, v));
}

}  // namespace detail

// Samples P(t) on [t_begin, t_end] with adaptive midpoint insertion.  Appends to
// out; the first sample is emitted only when out is empty or its last t differs.
inline void sample_adaptive(const ManifoldParametrization& param, double t_begin, double t_end,
                            const RefinementRule& rule, std::vector<ManifoldSample>& out,
                            int initial_per_unit = 8) {
  require(t_end > t_begin, ErrorCode::invalid_argument, "empty parameter interval");
  const int pieces = std::max(1, static_cast<int>(std::ceil((t_end - t_begin) * initial_per_unit)));
  const double h = (t_end - t_begin) / pieces;

  if (out.empty() || out.back().t != t_begin) out.push_back({t_begin, param.point(t_begin)});

  struct Interval {
    ManifoldSample a, b;
  };
  std::vector<Interval> stack;
  for (int piece = 0; piece < pieces; ++piece) {
    const double tb = piece + 1 == pieces ? t_end : t_begin + (piece + 1) * h;
    stack.clear();
    stack.push_back({out.back(), {tb, param.point(tb)}});
    while (!stack.empty()) {
      Interval iv = stack.back();
      stack.pop_back();
      const double tm = 0.5 * (iv.a.t + iv.b.t);
      const PhasePoint m = param.point(tm);
      const bool too_long = (iv.b.point - iv.a.point).norm() > rule.max_spacing;
      const bool too_far = detail::chord_deviation(iv.a.point, iv.b.point, m) > rule.tol;
      const bool too_bent = detail::turning_angle(iv.a.point, m, iv.b.point) > rule.max_turning;
      const bool resolvable = (iv.b.t - iv.a.t) > 1e-13 * std::max(1.0, std::abs(tm));
      if ((too_long || too_far || too_bent) && resolvable) {
        // process the left half first: push right, then left
        stack.push_back({{tm, m}, iv.b});
        stack.push_back({iv.a, {tm, m}});
      } else {
        out.push_back(iv.b);
        if (out.size() > rule.max_points) {
          throw Error(ErrorCode::refinement_budget_exceeded,
                      "manifold polyline exceeded " + std::to_string(rule.max_points) +
                          " points (k=" + std::to_string(param.params().k) + ")");
        }
      }
    }
  }
}

// Adaptively refined polyline of one separatrix branch, in lifted coordinates.
struct ManifoldCurve {
  Branch branch = Branch::unstable;
  std::vector<PhasePoint> points;  // lifted
  std::vector<double> arc;         // cumulative arc length, monotone
  std::vector<double> params;      // t parameter of each point

  std::size_t size() const { return points.size(); }
  double length() const { return arc.empty() ? 0.0 : arc.back(); }

  std::vector<PhasePoint> reduced_points() const {
    std::vector<PhasePoint> out;
    out.reserve(points.size());
    for (const auto& z : points) out.push_back(z.reduced());
    return out;
  }
};

inline ManifoldCurve curve_from_samples(Branch branch, const std::vector<ManifoldSample>& samples) {
  ManifoldCurve c;
  c.branch = branch;
  c.points.reserve(samples.size());
  c.arc.reserve(samples.size());
  c.params.reserve(samples.size());
  double s = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0) s += (samples[i].point - samples[i - 1].point).norm();
    c.points.push_back(samples[i].point);
    c.arc.push_back(s);
    c.params.push_back(samples[i].t);
  }
  return c;
}

// Traces a separatrix branch of z0 until its arc length reaches target_arc_length.
inline ManifoldCurve trace_manifold(const MapParams& params, Branch branch, double target_arc_length,
                                    double tol, const ManifoldConfig& config = {}) {
  require(tol > 0.0, ErrorCode::invalid_argument, "tolerance must be positive");
  require(target_arc_length > 0.0, ErrorCode::invalid_argument, "target arc length must be positive");
  const ManifoldParametrization param(params, branch, config.seed_distance);
  const RefinementRule rule{tol, config.max_spacing, config.max_turning, config.max_points};

  std::vector<ManifoldSample> samples;
  double arc = 0.0;
  double t = 0.0;
  std::size_t measured = 0;
  while (arc < target_arc_length) {
    sample_adaptive(param, t, t + 1.0, rule, samples, config.initial_samples_per_generation);
    t += 1.0;
    for (std::size_t i = std::max<std::size_t>(measured, 1); i < samples.size(); ++i) {
      arc += (samples[i].point - samples[i - 1].point).norm();
      if (arc >= target_arc_length) {
        samples.resize(i + 1);
        break;
      }
    }
    measured = samples.size();
    if (t > 400.0) {
      throw Error(ErrorCode::refinement_budget_exceeded,
                  "manifold did not reach the requested arc length");
    }
  }
  return curve_from_samples(branch, samples);
}

inline double distance_to_segment(PhasePoint z, PhasePoint a, PhasePoint b) {
  const PhasePoint ab = b - a;
  const double len2 = dot(ab, ab);
  double s = len2 > 0.0 ? dot(z - a, ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (z - (a + s * ab)).norm();
}

inline double distance_to_polyline(PhasePoint z, const std::vector<PhasePoint>& poly) {
  if (poly.size() == 1) return (z - poly.front()).norm();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    best = std::min(best, distance_to_segment(z, poly[i], poly[i + 1]));
  }
  return best;
}

}  // namespace qsm::classical
