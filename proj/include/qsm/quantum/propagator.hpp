#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsm/quantum/hilbert.hpp"

namespace qsm::quantum {

struct PropagatorMatrix {
  int N = 0;
  double k = 0.0;
  MatrixC entries;
};

// The one-step Floquet operator factorizes as U = C * diag(pot), where C is the
// circulant F^-1 D_kin F.  C only depends on j - l and is symmetric.
struct FloquetFactors {
  int N = 0;
  double k = 0.0;
  VectorC kernel;     // C_{jl} = kernel((j - l) mod N)
  VectorC potential;  // exp(-i k/(4 pi^2 hbar) cos 2 pi q_j)
  VectorC half_potential;

  cplx circulant(Eigen::Index j, Eigen::Index l) const {
    Eigen::Index d = j - l;
    if (d < 0) d += N;
    return kernel(d);
  }
};

inline FloquetFactors floquet_factors(const TorusHilbert& space, double k) {
  require(std::isfinite(k) && k >= 0.0, ErrorCode::invalid_argument, "k must be finite and non-negative");
  const int N = space.N;
  FloquetFactors f;
  f.N = N;
  f.k = k;

  // p_m^2/(2 hbar) = pi m^2 / N; with the Fourier phase 2 pi m d / N the total
  // phase is pi (2 m d - m^2) / N, reduced exactly in integers mod 2N.
  const std::int64_t period = 2 * static_cast<std::int64_t>(N);
  std::vector<cplx> unit(static_cast<std::size_t>(period));
  for (std::int64_t r = 0; r < period; ++r) unit[r] = std::polar(1.0, pi * static_cast<double>(r) / N);

  f.kernel.resize(N);
  for (int d = 0; d < N; ++d) {
    cplx acc = 0.0;
    for (int s = 0; s < N; ++s) {
      const std::int64_t m = space.momentum_index(s);
      std::int64_t r = (2 * m * d - m * m) % period;
      if (r < 0) r += period;
      acc += unit[static_cast<std::size_t>(r)];
    }
    f.kernel(d) = acc / static_cast<double>(N);
  }

  const double strength = k / (4.0 * pi * pi * space.hbar);
  f.potential.resize(N);
  f.half_potential.resize(N);
  for (int j = 0; j < N; ++j) {
    const double v = strength * std::cos(two_pi * space.position(j));
    f.potential(j) = std::polar(1.0, -v);
    f.half_potential(j) = std::polar(1.0, -0.5 * v);
  }
  return f;
}

inline PropagatorMatrix build_propagator(const TorusHilbert& space, double k) {
  const FloquetFactors f = floquet_factors(space, k);
  PropagatorMatrix U{space.N, k, MatrixC(space.N, space.N)};
  for (int l = 0; l < space.N; ++l)
    for (int j = 0; j < space.N; ++j) U.entries(j, l) = f.circulant(j, l) * f.potential(l);
  return U;
}

// diag(pot)^{1/2} C diag(pot)^{1/2}: unitary, complex symmetric, similar to U.
inline MatrixC symmetrized_propagator(const FloquetFactors& f) {
  MatrixC S(f.N, f.N);
  for (int l = 0; l < f.N; ++l)
    for (int j = 0; j < f.N; ++j) S(j, l) = f.half_potential(j) * f.circulant(j, l) * f.half_potential(l);
  return S;
}

inline double unitarity_defect(const MatrixC& U) {
  return (U.adjoint() * U - MatrixC::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff();
}

inline StateVector apply(const PropagatorMatrix& U, const StateVector& psi) {
  require(psi.size() == U.N, ErrorCode::dimension_mismatch,
          "state of dimension " + std::to_string(psi.size()) + " vs propagator " + std::to_string(U.N));
  return StateVector(U.entries * psi.amplitudes);
}

}  // namespace qsm::quantum
