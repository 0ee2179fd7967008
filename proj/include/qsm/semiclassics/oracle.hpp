#pragma once

#include <algorithm>
#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "qsm/error.hpp"
#include "qsm/numeric.hpp"

namespace qsm::semiclassics {

// K0(z) = int_0^inf exp(-z cosh t) dt by the trapezoid rule, which converges
// geometrically for this integrand; the step is halved until two successive
// sums agree.  The factor exp(-z) is pulled out so large z keeps full
// relative precision.
inline double bessel_k0(double z) {
  require(z > 0.0 && std::isfinite(z), ErrorCode::invalid_argument, "bessel_k0 needs z > 0");
  // integrand exp(-z (cosh t - 1)) drops below 1e-18 beyond t_max
  const double t_max = std::acosh(1.0 + 41.5 / z);
  auto trapezoid = [&](double h) {
    CompensatedSum s;
    s.add(0.5);
    for (int n = 1;; ++n) {
      const double t = n * h;
      if (t > t_max) break;
      s.add(std::exp(-z * (std::cosh(t) - 1.0)));
    }
    return h * s.value();
  };
  double h = 0.5;
  double prev = trapezoid(h);
  for (int level = 0; level < 6; ++level) {
    h *= 0.5;
    const double cur = trapezoid(h);
    if (std::abs(cur - prev) <= 1e-14 * std::abs(cur)) return std::exp(-z) * cur;
    prev = cur;
  }
  throw Error(ErrorCode::quadrature_nonconvergence, "K0 trapezoid did not settle at z=" + std::to_string(z));
}

// Fixed quadrature nodes on [a, b] resolving f(y) e^{i omega y} for all
// |omega| <= omega_max: 15-point Kronrod panels, bisected until a panel and
// its two halves agree to abs_tol.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // already multiplied by f(node)
};

inline QuadratureRule build_oscillatory_rule(const std::function<double(double)>& f, double a, double b,
                                             double omega_max, double abs_tol = 1e-17, int max_depth = 40) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  const auto& xs = GK::abscissa();
  const auto& ws = GK::weights();

  struct Panel {
    std::vector<double> y, wf;  // nodes and weight * f
    std::complex<double> value;
  };
  auto make_panel = [&](double lo, double hi) {
    Panel p;
    const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      for (int sgn : {-1, 1}) {
        if (i == 0 && sgn == 1) continue;
        const double y = c + sgn * r * xs[i];
        const double wf = r * ws[i] * f(y);
        p.y.push_back(y);
        p.wf.push_back(wf);
        p.value += wf * std::polar(1.0, omega_max * y);
      }
    }
    return p;
  };

  QuadratureRule rule;
  struct Job {
    double lo, hi;
    int depth;
  };
  // initial panels no wider than one period of the fastest oscillation
  const int initial = std::max(1, static_cast<int>(std::ceil((b - a) * omega_max / two_pi)));
  std::vector<Job> stack;
  for (int i = initial - 1; i >= 0; --i) stack.push_back({a + (b - a) * i / initial, a + (b - a) * (i + 1) / initial, 0});
  while (!stack.empty()) {
    const Job job = stack.back();
    stack.pop_back();
    const double mid = 0.5 * (job.lo + job.hi);
    const Panel whole = make_panel(job.lo, job.hi);
    const Panel left = make_panel(job.lo, mid);
    const Panel right = make_panel(mid, job.hi);
    if (std::abs(whole.value - left.value - right.value) <= abs_tol) {
      for (const Panel* p : {&left, &right}) {
        rule.nodes.insert(rule.nodes.end(), p->y.begin(), p->y.end());
        rule.weights.insert(rule.weights.end(), p->wf.begin(), p->wf.end());
      }
    } else {
      if (job.depth >= max_depth) {
        throw Error(ErrorCode::quadrature_nonconvergence,
                    "panel [" + std::to_string(job.lo) + ", " + std::to_string(job.hi) + "] did not converge");
      }
      stack.push_back({mid, job.hi, job.depth + 1});
      stack.push_back({job.lo, mid, job.depth + 1});
    }
  }
  return rule;
}

// Quadrature oracles for eta and F~, valid for |x| <= x_max.
//   f~(x) = pi^{-1/2} int e^{-y/2} K0(e^{-y}) e^{ixy} dy,  phase varphi = x eta
//   F~(x) = sqrt(2/pi) int_0^inf cos(xy) / sqrt(cosh y) dy
class SpecialFunctionOracle {
 public:
  explicit SpecialFunctionOracle(double x_max = 20.0) : x_max_(x_max) {
    require(x_max > 0.0, ErrorCode::invalid_argument, "oracle window must be positive");
    // e^{-y/2} K0(e^{-y}) ~ y e^{-y/2} as y -> inf and dies super-exponentially as y -> -inf
    eta_rule_ = build_oscillatory_rule(
        [](double y) { return std::exp(-0.5 * y) * bessel_k0(std::exp(-y)); }, -4.5, 92.0, x_max);
    ftilde_rule_ = build_oscillatory_rule(
        [](double y) {
          const double e = std::exp(-y);
          return std::sqrt(2.0 * e / (1.0 + e * e));
        },
        0.0, 86.0, x_max);
    CompensatedSum m0, m1;
    for (std::size_t i = 0; i < eta_rule_.nodes.size(); ++i) {
      m0.add(eta_rule_.weights[i]);
      m1.add(eta_rule_.weights[i] * eta_rule_.nodes[i]);
    }
    eta0_ = m1.value() / m0.value();
    norm0_ = m0.value() / std::sqrt(pi);
  }

  double x_max() const { return x_max_; }

  std::complex<double> transform(double x) const {
    check_window(x);
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < eta_rule_.nodes.size(); ++i) {
      const double w = eta_rule_.weights[i];
      re += w * std::cos(x * eta_rule_.nodes[i]);
      im += w * std::sin(x * eta_rule_.nodes[i]);
    }
    return std::complex<double>(re, im) / std::sqrt(pi);
  }

  // f~(0), the normalization of the transform.
  double transform_at_zero() const { return norm0_; }

  // Moments int y^n g(y) dy / int g(y) dy of the transformed density.
  double moment(int n) const {
    CompensatedSum m0, mn;
    for (std::size_t i = 0; i < eta_rule_.nodes.size(); ++i) {
      m0.add(eta_rule_.weights[i]);
      mn.add(eta_rule_.weights[i] * std::pow(eta_rule_.nodes[i], n));
    }
    return mn.value() / m0.value();
  }

  // Continuous phase with varphi(0) = 0, marched from the origin in steps <= max_step.
  std::vector<double> varphi(const std::vector<double>& xs, double max_step = 0.05) const {
    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      check_window(xs[i]);
      order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(xs[a]) < std::abs(xs[b]); });
    std::vector<double> out(xs.size(), 0.0);
    double at = 0.0, phase = 0.0;
    std::complex<double> prev = norm0_;
    for (std::size_t idx : order) {
      const double target = std::abs(xs[idx]);
      while (at < target) {
        const double next = std::min(target, at + max_step);
        const std::complex<double> cur = transform(next);
        phase += std::arg(cur / prev);
        prev = cur;
        at = next;
      }
      out[idx] = xs[idx] < 0.0 ? -phase : phase;
    }
    return out;
  }

  double varphi(double x) const { return varphi(std::vector<double>{x}).front(); }

  std::vector<double> eta(const std::vector<double>& xs) const {
    std::vector<double> ph = varphi(xs);
    for (std::size_t i = 0; i < xs.size(); ++i) ph[i] = xs[i] == 0.0 ? eta0_ : ph[i] / xs[i];
    return ph;
  }

  double eta(double x) const { return eta(std::vector<double>{x}).front(); }

  double ftilde(double x) const {
    check_window(x);
    CompensatedSum s;
    for (std::size_t i = 0; i < ftilde_rule_.nodes.size(); ++i) {
      s.add(ftilde_rule_.weights[i] * std::cos(x * ftilde_rule_.nodes[i]));
    }
    return std::sqrt(2.0 / pi) * s.value();
  }

  std::size_t node_count() const { return eta_rule_.nodes.size() + ftilde_rule_.nodes.size(); }

 private:
  void check_window(double x) const {
    require(std::abs(x) <= x_max_ * (1.0 + 1e-12), ErrorCode::invalid_argument,
            "oracle evaluated outside |x| <= " + std::to_string(x_max_));
  }

  double x_max_;
  QuadratureRule eta_rule_, ftilde_rule_;
  double eta0_ = 0.0;
  double norm0_ = 0.0;
};

struct SmallXFit {
  double eta0, a, b;
};

// Least-squares fit eta0 - a x^2 + b x^4 + c6 x^6 + c8 x^8 to oracle samples on (0, x_fit].
inline SmallXFit fit_small_x(const SpecialFunctionOracle& oracle, double x_fit = 0.2, int samples = 40) {
  std::vector<double> xs;
  for (int i = 1; i <= samples; ++i) xs.push_back(x_fit * i / samples);
  const std::vector<double> ys = oracle.eta(xs);
  Eigen::MatrixXd M(samples, 5);
  Eigen::VectorXd rhs(samples);
  for (int i = 0; i < samples; ++i) {
    const double x2 = xs[i] * xs[i];
    M(i, 0) = 1.0;
    M(i, 1) = -x2;
    M(i, 2) = x2 * x2;
    M(i, 3) = x2 * x2 * x2;
    M(i, 4) = x2 * x2 * x2 * x2;
    rhs(i) = ys[i];
  }
  const Eigen::VectorXd c = M.colPivHouseholderQr().solve(rhs);
  return {c(0), c(1), c(2)};
}

}  // namespace qsm::semiclassics
