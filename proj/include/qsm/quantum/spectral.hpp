#pragma once

#include <cmath>
#include <string>

#include "qsm/classical/map.hpp"
#include "qsm/quantum/eigensolver.hpp"
#include "qsm/semiclassics/bohr_sommerfeld.hpp"

namespace qsm::quantum {

// Gaussian packet on the unstable fixed point, periodized over the two nearest lifts.
inline StateVector resonance_state(const TorusHilbert& space, double k) {
  require(k > 0.0, ErrorCode::invalid_argument, "resonance_state needs k > 0");
  const double lambda = classical::stability_exponent(k);
  const double width = std::sinh(lambda);
  const double hbar = space.hbar;
  const double norm = std::pow(width / (pi * hbar), 0.25);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::degenerate_packet, "packet width underflows for k=" + std::to_string(k));
  }
  const cplx a(width, 0.5 * k);
  auto W = [&](double q) { return norm * std::exp(-(q * q / (2.0 * hbar)) * a); };
  VectorC amp(space.N);
  for (int j = 0; j < space.N; ++j) amp(j) = W(space.position(j)) + W(space.position(j) - 1.0);
  StateVector z(std::move(amp));
  return z.normalize();
}

// c_i = <phi_i|ref>; stores |c_i|^2 in the decomposition and returns it.
inline const Eigen::VectorXd& spectral_decomposition(SpectralDecomposition& d, const StateVector& reference) {
  require(reference.size() == d.eigenvectors.rows(), ErrorCode::dimension_mismatch,
          "reference state dimension " + std::to_string(reference.size()) + " vs " +
              std::to_string(d.eigenvectors.rows()));
  d.intensities = (d.eigenvectors.adjoint() * reference.amplitudes).cwiseAbs2();
  return d.intensities;
}

struct PhaseMoments {
  double mean = 0.0;
  double dispersion = 0.0;
  double phi_bs = 0.0;
  double target_dispersion = 0.0;  // lambda / sqrt 2
};

// Intensity-weighted moments with every phase taken at its 2pi-representative nearest phi_BS.
inline PhaseMoments phase_moments(const SpectralDecomposition& d, int N, double k) {
  require(d.intensities.size() == d.eigenphases.size(), ErrorCode::invalid_argument,
          "phase_moments needs intensities");
  PhaseMoments m;
  m.phi_bs = semiclassics::bohr_sommerfeld_phase(N, k);
  m.target_dispersion = semiclassics::phase_dispersion(k);
  CompensatedSum mean, var;
  for (Eigen::Index i = 0; i < d.eigenphases.size(); ++i) {
    const double t = unwrap_near(d.eigenphases(i), m.phi_bs);
    mean.add(d.intensities(i) * t);
    var.add(d.intensities(i) * (t - m.phi_bs) * (t - m.phi_bs));
  }
  m.mean = mean.value();
  m.dispersion = std::sqrt(var.value());
  return m;
}

inline double ipr(const Eigen::VectorXd& intensities) { return intensities.array().square().sum(); }
inline double participation_ratio(const Eigen::VectorXd& intensities) { return 1.0 / ipr(intensities); }

// Empirical small-k IPR of the resonance, 3/(3.75 + ln N).
inline double ipr_reference(double N) { return 3.0 / (3.75 + std::log(N)); }

// |<z0|U|z0>|
inline double autocorrelation(const PropagatorMatrix& U, const StateVector& z) {
  return std::abs(z.overlap(apply(U, z)));
}

}  // namespace qsm::quantum
