#pragma once

#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <vector>

#include "qsm/semiclassics/quantization.hpp"

namespace qsm::semiclassics {

struct SmoothingConfig {
  double A_max = 1.0;
  double beta = 0.0;  // 2 / ln(2 pi N A_max)
  double K = 0.0;     // sqrt(pi/8) beta / (1 + beta)

  SmoothingConfig(double N, double A_max_) : A_max(A_max_) {
    require(A_max > 0.0, ErrorCode::invalid_argument, "A_max must be positive");
    const double L = std::log(two_pi * N * A_max);
    require(L > 0.0, ErrorCode::invalid_argument, "2 pi N A_max must exceed 1");
    beta = 2.0 / L;
    K = std::sqrt(pi / 8.0) * beta / (1.0 + beta);
  }
};

// Smoothing kernel with g(0) = 1.
inline double smoothing_kernel(double y, double beta) {
  const double sinc = y == 0.0 ? 1.0 : std::sin(y) / y;
  return (sinc + beta * std::cos(y)) / ((1.0 + beta * beta * y * y) * (1.0 + beta));
}

// Quantum side: sum_i |c_i|^2 g(2 (phi - phi~_i) / (lambda beta)), with each
// phi~_i the 2pi-representative nearest phi_BS.
inline std::vector<double> quantum_spectral_function(const std::vector<double>& phi_grid,
                                                     const Eigen::VectorXd& eigenphases,
                                                     const Eigen::VectorXd& intensities, double N, double k,
                                                     const SmoothingConfig& cfg) {
  const double lambda = classical::stability_exponent(k);
  const double bs = bohr_sommerfeld_phase(N, k);
  std::vector<double> out(phi_grid.size(), 0.0);
  for (std::size_t g = 0; g < phi_grid.size(); ++g) {
    CompensatedSum s;
    for (Eigen::Index i = 0; i < eigenphases.size(); ++i) {
      const double t = unwrap_near(eigenphases(i), bs);
      s.add(intensities(i) * smoothing_kernel(2.0 * (phi_grid[g] - t) / (lambda * cfg.beta), cfg.beta));
    }
    out[g] = s.value();
  }
  return out;
}

// Semiclassical side with every orbit's A and L supplied.
inline std::vector<double> smoothed_spectral_function(const std::vector<double>& phi_grid,
                                                      const std::vector<HomoclinicInvariants>& orbits, double N,
                                                      double k, const SmoothingConfig& cfg) {
  require(!orbits.empty(), ErrorCode::missing_invariants, "no homoclinic orbits supplied");
  for (const auto& o : orbits) {
    if (!o.A || !o.L) throw Error(ErrorCode::missing_invariants, "full smoothing needs A and L for every orbit");
    require(*o.A <= cfg.A_max, ErrorCode::invalid_argument, "orbit relevance exceeds A_max");
  }
  const double lambda = classical::stability_exponent(k);
  std::vector<double> out(phi_grid.size());
  for (std::size_t g = 0; g < phi_grid.size(); ++g) {
    const double x = scaled_coordinate(phi_grid[g], N, k);
    double sum = 0.0;
    for (const auto& o : orbits) sum += std::cos(homoclinic_phase_at(x, o, N)) / std::sqrt(*o.A * std::abs(*o.L));
    out[g] = cfg.K * ftilde(x) * (1.0 + sum / (lambda * std::sqrt(N)));
  }
  return out;
}

// Primary pair (mu = 0, 1) with a common relevance.
struct TwoOrbitProxy {
  double S = 0.0;   // mean action
  double dS = 0.0;  // S2 - S1
  double A = 0.0;

  HomoclinicInvariants first() const { return {S - 0.5 * dS, 0.0, A, std::nullopt}; }
  HomoclinicInvariants second() const { return {S + 0.5 * dS, 1.0, A, std::nullopt}; }
  HomoclinicInvariants mean() const { return {S, 0.5, A, std::nullopt}; }

  // cos psi1 + cos psi2 = 2 cos(psi) cos(dpsi/2)
  double at_x(double x, double N) const {
    return std::cos(homoclinic_phase_at(x, first(), N)) + std::cos(homoclinic_phase_at(x, second(), N));
  }
};

// Local maxima of the proxy in x on [x_min, x_max], refined by Brent's method.
inline std::vector<double> proxy_maxima(const TwoOrbitProxy& proxy, double N, double x_min = -3.0,
                                        double x_max = 3.0, int samples = 2000) {
  std::vector<double> xs(samples + 1), fs(samples + 1);
  for (int i = 0; i <= samples; ++i) {
    xs[i] = x_min + (x_max - x_min) * i / samples;
    fs[i] = proxy.at_x(xs[i], N);
  }
  std::vector<double> out;
  for (int i = 1; i < samples; ++i) {
    if (fs[i] >= fs[i - 1] && fs[i] > fs[i + 1]) {
      const auto r = boost::math::tools::brent_find_minima([&](double x) { return -proxy.at_x(x, N); }, xs[i - 1],
                                                           xs[i + 1], 52);
      out.push_back(r.first);
    }
  }
  return out;
}

// Local maxima of a sampled curve, refined by a parabola through three points.
inline std::vector<double> sampled_maxima(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < ys.size(); ++i) {
    if (ys[i] >= ys[i - 1] && ys[i] > ys[i + 1]) {
      const double denom = ys[i - 1] - 2.0 * ys[i] + ys[i + 1];
      const double shift = denom != 0.0 ? 0.5 * (ys[i - 1] - ys[i + 1]) / denom : 0.0;
      out.push_back(xs[i] + shift * (xs[i + 1] - xs[i]));
    }
  }
  return out;
}

}  // namespace qsm::semiclassics
