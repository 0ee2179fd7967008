#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "qsm/quantum/lapack.hpp"
#include "qsm/quantum/propagator.hpp"

namespace qsm::quantum {

struct SpectralDecomposition {
  int N = 0;
  double k = 0.0;
  Eigen::VectorXd eigenphases;  // ascending in [0, 2pi)
  MatrixC eigenvectors;         // columns, position basis
  Eigen::VectorXd intensities;  // |c_i|^2, empty until a reference is projected
  Eigen::VectorXd residuals;    // |U v_i - e^{i phi_i} v_i|
  std::string method;

  double max_residual() const { return residuals.size() ? residuals.maxCoeff() : 0.0; }
  StateVector eigenstate(Eigen::Index i) const { return StateVector(eigenvectors.col(i)); }
};

struct EigensolverOptions {
  double residual_tol = 1e-10;
  double cluster_gap = 1e-4;        // H-eigenvalue gap that separates refinement clusters
  double mixing = 0.6180339887498949;  // H = Re U' + mixing * Im U'
};

namespace detail {

inline std::string where(int N, double k) {
  return "(N=" + std::to_string(N) + ", k=" + std::to_string(k) + ")";
}

// Largest component made real positive; near-ties resolved by the lowest index.
inline void fix_global_phase(Eigen::Ref<VectorC> v) {
  const double top = v.cwiseAbs().maxCoeff();
  Eigen::Index idx = 0;
  while (std::abs(v(idx)) < top * (1.0 - 1e-9)) ++idx;
  v *= std::conj(v(idx)) / std::abs(v(idx));
}

// Sorts by phase, fixes phases and fills residuals; images W = U V.
inline SpectralDecomposition finalize(int N, double k, const VectorC& values, MatrixC V, const MatrixC& W,
                                      std::string method) {
  const Eigen::Index n = values.size();
  Eigen::VectorXd res(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    res(i) = (W.col(i) - (values(i) / std::abs(values(i))) * V.col(i)).norm();
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd phases(n);
  for (Eigen::Index i = 0; i < n; ++i) phases(i) = wrap_phase(std::arg(values(i)));
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return phases(a) < phases(b); });

  SpectralDecomposition out;
  out.N = N;
  out.k = k;
  out.method = std::move(method);
  out.eigenphases.resize(n);
  out.residuals.resize(n);
  out.eigenvectors.resize(V.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index s = order[i];
    out.eigenphases(i) = phases(s);
    out.residuals(i) = res(s);
    out.eigenvectors.col(i) = V.col(s);
    fix_global_phase(out.eigenvectors.col(i));
  }
  return out;
}

// Schur factorization of a square complex matrix; returns diag(T) and Z.
inline std::pair<VectorC, MatrixC> schur(MatrixC A, const std::string& context) {
  const lapack_int n = static_cast<lapack_int>(A.rows());
  VectorC w(n);
  MatrixC Z(n, n);
  lapack_int sdim = 0;
  const lapack_int info = LAPACKE_zgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, A.data(), n, &sdim, w.data(),
                                        Z.data(), n);
  if (info != 0) throw Error(ErrorCode::eigensolver_failure, "zgees info=" + std::to_string(info) + " " + context);
  for (lapack_int i = 0; i < n; ++i) w(i) = A(i, i);
  return {w, Z};
}

}  // namespace detail

// Eigensystem of an arbitrary unitary matrix through its complex Schur form.
inline SpectralDecomposition diagonalize(const MatrixC& U, double k = 0.0, const EigensolverOptions& opt = {}) {
  require(U.rows() == U.cols(), ErrorCode::dimension_mismatch, "diagonalize needs a square matrix");
  pin_blas_threads();
  const int N = static_cast<int>(U.rows());
  auto [w, Z] = detail::schur(U, detail::where(N, k));
  const MatrixC W = U * Z;
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = Z.col(i).dot(W.col(i));
  auto out = detail::finalize(N, k, w, std::move(Z), W, "schur");
  if (out.max_residual() > opt.residual_tol) {
    throw Error(ErrorCode::eigensolver_failure,
                "residual " + std::to_string(out.max_residual()) + " above tolerance " + detail::where(N, k));
  }
  return out;
}

inline SpectralDecomposition diagonalize(const PropagatorMatrix& U, const EigensolverOptions& opt = {}) {
  return diagonalize(U.entries, U.k, opt);
}

// Floquet eigensystem for the standard map.  The symmetrized propagator
// U' = X + iY is complex symmetric and unitary, so X and Y are commuting real
// symmetric matrices.  One real symmetric solve of X + cY gives their common
// eigenvectors; near-degenerate groups are resolved by a Schur step on the
// group's subspace.  Falls back to the general Schur solver if the residual
// check fails.
inline SpectralDecomposition diagonalize_floquet(const TorusHilbert& space, double k,
                                                 const EigensolverOptions& opt = {}) {
  pin_blas_threads();
  const int N = space.N;
  const FloquetFactors f = floquet_factors(space, k);
  Eigen::MatrixXd X, Y;
  {
    const MatrixC S = symmetrized_propagator(f);
    X = S.real();
    Y = S.imag();
  }
  Eigen::MatrixXd V = X + opt.mixing * Y;
  Eigen::VectorXd h(N);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', N, V.data(), N, h.data());
  if (info != 0) {
    throw Error(ErrorCode::eigensolver_failure, "dsyevd info=" + std::to_string(info) + " " + detail::where(N, k));
  }
  const Eigen::MatrixXd WX = X * V;
  const Eigen::MatrixXd WY = Y * V;
  X.resize(0, 0);
  Y.resize(0, 0);

  MatrixC vecs = V.cast<cplx>();
  MatrixC imgs(N, N);
  imgs.real() = WX;
  imgs.imag() = WY;
  VectorC vals(N);
  for (int i = 0; i < N; ++i) vals(i) = cplx(V.col(i).dot(WX.col(i)), V.col(i).dot(WY.col(i)));

  for (int b = 0; b < N;) {
    int e = b + 1;
    while (e < N && h(e) - h(e - 1) < opt.cluster_gap) ++e;
    const int m = e - b;
    if (m > 1) {
      const MatrixC B = vecs.middleCols(b, m).adjoint() * imgs.middleCols(b, m);
      auto [w, Z] = detail::schur(B, detail::where(N, k));
      const MatrixC Vc = vecs.middleCols(b, m) * Z;
      const MatrixC Wc = imgs.middleCols(b, m) * Z;
      vecs.middleCols(b, m) = Vc;
      imgs.middleCols(b, m) = Wc;
      for (int i = 0; i < m; ++i) vals(b + i) = Vc.col(i).dot(Wc.col(i));
    }
    b = e;
  }

  // back to the eigenvectors of U = diag(pot)^{-1/2} U' diag(pot)^{1/2}
  const VectorC back = f.half_potential.conjugate();
  vecs = back.asDiagonal() * vecs;
  imgs = back.asDiagonal() * imgs;
  auto out = detail::finalize(N, k, vals, std::move(vecs), imgs, "symmetric");
  if (out.max_residual() <= opt.residual_tol) return out;
  return diagonalize(build_propagator(space, k), opt);
}

inline double trace_defect(const SpectralDecomposition& d, const MatrixC& U) {
  cplx s = 0.0;
  for (Eigen::Index i = 0; i < d.eigenphases.size(); ++i) s += std::polar(1.0, d.eigenphases(i));
  return std::abs(s - U.trace());
}

}  // namespace qsm::quantum
