#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>

#include "qsm/error.hpp"
#include "qsm/numeric.hpp"

namespace qsm::quantum {

using cplx = std::complex<double>;
using VectorC = Eigen::VectorXcd;
using MatrixC = Eigen::MatrixXcd;

// N-dimensional torus Hilbert space with hbar = 1/(2 pi N).
struct TorusHilbert {
  int N = 0;
  double hbar = 0.0;

  explicit TorusHilbert(int n) : N(n), hbar(1.0 / (two_pi * n)) {
    require(n >= 2, ErrorCode::invalid_argument, "Hilbert dimension must be >= 2, got " + std::to_string(n));
  }

  double position(int j) const { return static_cast<double>(j) / N; }

  // Momentum index of slot s in the symmetric window -floor(N/2) .. ceil(N/2)-1.
  int momentum_index(int s) const { return s - N / 2; }
  double momentum(int s) const { return static_cast<double>(momentum_index(s)) / N; }
};

// Position-basis amplitudes, j = 0 .. N-1.
struct StateVector {
  VectorC amplitudes;

  StateVector() = default;
  explicit StateVector(VectorC a) : amplitudes(std::move(a)) {}

  Eigen::Index size() const { return amplitudes.size(); }
  double norm() const { return amplitudes.norm(); }

  StateVector& normalize() {
    const double n = amplitudes.norm();
    require(n > 0.0 && std::isfinite(n), ErrorCode::degenerate_packet, "cannot normalize a zero state");
    amplitudes /= n;
    return *this;
  }

  cplx overlap(const StateVector& other) const {
    require(size() == other.size(), ErrorCode::dimension_mismatch, "overlap of states of different dimension");
    return amplitudes.dot(other.amplitudes);  // conjugates this
  }
};

}  // namespace qsm::quantum
