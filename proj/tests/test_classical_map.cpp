#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "qsm/classical/lobe_estimate.hpp"
#include "qsm/classical/manifold.hpp"

using namespace qsm::classical;
using qsm::pi;

namespace {

double torus_distance(PhasePoint a, PhasePoint b) {
  auto d = [](double x, double y) {
    double r = std::abs(x - y);
    return std::min(r, 1.0 - r);
  };
  return std::hypot(d(a.q, b.q), d(a.p, b.p));
}

}  // namespace

TEST(Advance, FixedPointIsFixed) {
  for (double k : {0.0, 0.3, 1.0, 1.9}) {
    const PhasePoint z = advance({0.0, 0.0}, MapParams(k), 1);
    EXPECT_EQ(z.q, 0.0);
    EXPECT_EQ(z.p, 0.0);
  }
}

TEST(Advance, PeriodTwoOrbitThroughHalfHalf) {
  const MapParams params(0.7);
  const PhasePoint mid = advance({0.5, 0.5}, params, 1);
  EXPECT_NEAR(torus_distance(mid, {0.0, 0.5}), 0.0, 1e-15);
  const PhasePoint back = advance({0.5, 0.5}, params, 2);
  EXPECT_NEAR(torus_distance(back, {0.5, 0.5}), 0.0, 1e-15);
}

TEST(Advance, InverseUndoesForward) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double k : {0.2, 0.5, 1.0, 1.8}) {
    const MapParams params(k);
    for (int trial = 0; trial < 50; ++trial) {
      const PhasePoint z{u(rng), u(rng)};
      EXPECT_LT(torus_distance(advance(advance(z, params, 1), params, -1), z), 1e-12);
      for (int n : {5, 20, 50}) {
        // roundoff grows with the forward monodromy; chaotic points amplify it
        PhasePoint w = z;
        Matrix2 mono = Matrix2::Identity();
        for (int i = 0; i < n; ++i) {
          mono = tangent_map(w, params) * mono;
          w = advance(w, params, 1);
        }
        const double bound = std::max(1e-10, 1e-14 * mono.norm());
        EXPECT_LT(torus_distance(advance(w, params, -n), z), bound) << "k=" << k << " n=" << n;
      }
    }
  }
}

TEST(Advance, RejectsNegativeK) { EXPECT_THROW(MapParams(-0.1), qsm::Error); }

TEST(TangentMap, AreaPreserving) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const MapParams params(2.0 * u(rng));
    EXPECT_NEAR(tangent_map({u(rng), u(rng)}, params).determinant(), 1.0, 1e-14);
  }
}

TEST(TangentMap, TraceAtFixedPoint) {
  EXPECT_NEAR(tangent_map({0.0, 0.0}, MapParams(0.5)).trace(), 2.5, 1e-15);
}

TEST(TangentMap, MatchesFiniteDifferences) {
  const MapParams params(1.3);
  const PhasePoint z{0.37, 0.81};
  const double h = 1e-6;
  const Matrix2 m = tangent_map(z, params);
  const PhasePoint dq = step({z.q + h, z.p}, params) - step({z.q - h, z.p}, params);
  const PhasePoint dp = step({z.q, z.p + h}, params) - step({z.q, z.p - h}, params);
  EXPECT_NEAR(m(0, 0), dq.q / (2 * h), 1e-8);
  EXPECT_NEAR(m(1, 0), dq.p / (2 * h), 1e-8);
  EXPECT_NEAR(m(0, 1), dp.q / (2 * h), 1e-8);
  EXPECT_NEAR(m(1, 1), dp.p / (2 * h), 1e-8);
}

TEST(TangentMap, MonodromyOfPeriodTwoOrbitIsSymplectic) {
  for (double k : {0.4, 1.2}) {
    const MapParams params(k);
    PhasePoint z{0.5, 0.5};
    Matrix2 mono = Matrix2::Identity();
    for (int i = 0; i < 2; ++i) {
      mono = tangent_map(z, params) * mono;
      z = advance(z, params, 1);
    }
    EXPECT_NEAR(mono.determinant(), 1.0, 1e-12);
  }
}

TEST(TangentMap, LongSegmentMonodromyIsSymplectic) {
  const MapParams params(1.1);
  PhasePoint z{0.123, 0.456};
  Matrix2 mono = Matrix2::Identity();
  for (int i = 0; i < 30; ++i) {
    mono = tangent_map(z, params) * mono;
    z = advance(z, params, 1);
  }
  EXPECT_NEAR(mono.determinant(), 1.0, 1e-12 * mono.norm() * mono.norm());
}

TEST(StabilityExponent, ClosedForms) {
  EXPECT_EQ(stability_exponent(0.0), 0.0);
  EXPECT_NEAR(stability_exponent(0.5), std::log(2.0), 1e-15);
  EXPECT_NEAR(stability_exponent(0.5), 0.6931472, 1e-7);
}

TEST(StabilityExponent, MatchesLeadingEigenvalue) {
  for (double k = 0.1; k <= 2.0; k += 0.1) {
    const Eigen::EigenSolver<Matrix2> es(tangent_map({0.0, 0.0}, MapParams(k)));
    double leading = 0.0;
    for (int i = 0; i < 2; ++i) leading = std::max(leading, std::abs(es.eigenvalues()(i)));
    EXPECT_NEAR(std::exp(stability_exponent(k)), leading, 1e-12) << "k=" << k;
  }
}

TEST(Manifold, SeedAlongUnstableEigenvector) {
  const MapParams params(0.5);
  const ManifoldCurve c = trace_manifold(params, Branch::unstable, 0.5, 1e-8);
  // eigenvector of [[1.5,1],[0.5,1]] for eigenvalue 2 is (1, 0.5)
  const PhasePoint v = (1.0 / std::sqrt(1.25)) * PhasePoint{1.0, 0.5};
  const PhasePoint first = c.points.front();
  EXPECT_NEAR(first.q, 1e-8 * v.q, 1e-20);
  EXPECT_NEAR(first.p, 1e-8 * v.p, 1e-20);
  EXPECT_NEAR(c.length(), 0.5, 2e-3);
  for (std::size_t i = 1; i < c.size(); ++i) {
    EXPECT_LE((c.points[i] - c.points[i - 1]).norm(), 1e-3 + 1e-15);
    EXPECT_GE(c.arc[i], c.arc[i - 1]);
  }
}

TEST(Manifold, UnstableCurveIsInvariant) {
  for (double k : {0.5, 1.0, 1.5}) {
    const MapParams params(k);
    const double tol = 1e-8;
    const ManifoldCurve c = trace_manifold(params, Branch::unstable, 1.0, tol);
    const ManifoldParametrization param(params, Branch::unstable);
    // images of points whose image parameter stays inside the traced range
    const double t_max = c.params.back();
    double worst = 0.0;
    for (std::size_t i = 0; i < c.size(); i += 7) {
      if (c.params[i] + 1.0 > t_max) break;
      const PhasePoint image = step(c.points[i], params);
      worst = std::max(worst, distance_to_polyline(image, c.points));
    }
    EXPECT_LE(worst, 5 * tol) << "k=" << k;
  }
}

TEST(Manifold, StableCurveIsReversalImageOfUnstable) {
  const MapParams params(0.5);
  const double tol = 1e-8;
  const ManifoldCurve u = trace_manifold(params, Branch::unstable, 0.8, tol);
  const ManifoldCurve s = trace_manifold(params, Branch::stable, 0.8, tol);
  // validate the reversor itself before relying on it: R T R = T^{-1}
  const PhasePoint z{0.31, 0.17};
  const PhasePoint lhs = reversal(step(reversal(z, params), params), params);
  const PhasePoint rhs = step_inverse(z, params);
  EXPECT_LT((lhs - rhs).norm(), 1e-14);
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); i += 5) {
    if (s.arc[i] > 0.75) break;
    worst = std::max(worst, distance_to_polyline(reversal(s.points[i], params), u.points));
  }
  EXPECT_LE(worst, 5 * tol);
}

TEST(Manifold, BudgetExceededIsReported) {
  ManifoldConfig cfg;
  cfg.max_points = 50;
  EXPECT_THROW(
      {
        try {
          trace_manifold(MapParams(0.5), Branch::unstable, 1.0, 1e-9, cfg);
        } catch (const qsm::Error& e) {
          EXPECT_EQ(e.code(), qsm::ErrorCode::refinement_budget_exceeded);
          throw;
        }
      },
      qsm::Error);
}

TEST(Manifold, RequiresPositiveK) {
  EXPECT_THROW(trace_manifold(MapParams(0.0), Branch::unstable, 1.0, 1e-8), qsm::Error);
}

TEST(LobeEstimate, DirectEvaluations) {
  // 6 pi (1 - 0.341 * 0.5^{1/3}) exp(-pi^2 / sqrt(0.5))
  const double at_half = 6 * pi * (1 - 0.341 * std::cbrt(0.5)) * std::exp(-pi * pi / std::sqrt(0.5));
  EXPECT_DOUBLE_EQ(lobe_area_estimate(0.5), at_half);
  EXPECT_NEAR(lobe_area_estimate(0.5), 1.19e-5, 0.01e-5);
  EXPECT_NEAR(lobe_area_estimate(1.62), 4.85e-3, 0.01e-3);
}

TEST(LobeEstimate, VanishesMonotonicallyAsKGoesToZero) {
  double prev = 0.0;
  for (double k = 0.01; k <= 0.5; k += 0.01) {
    const double v = lobe_area_estimate(k);
    EXPECT_GT(v, prev);
    prev = v;
  }
  EXPECT_LT(lobe_area_estimate(0.01), 1e-40);
}

TEST(KBreak, ReferenceValueAtN158) { EXPECT_NEAR(k_break(158), 1.62, 0.02); }

TEST(KBreak, SolvesTheCriterion) {
  for (double N : {50.0, 158.0, 1000.0, 1e5}) {
    const double k = k_break(N);
    EXPECT_NEAR(lobe_area_estimate(k) / break_area(N), 1.0, 1e-5) << "N=" << N;
  }
}

TEST(KBreak, InverseRelationAtKHalf) { EXPECT_NEAR(break_dimension(0.5), 62900, 0.02 * 62900); }

TEST(KBreak, StrictlyDecreasingInN) {
  double prev = k_break(4);
  for (double N = 8; N < 1e7; N *= 1.7) {
    const double k = k_break(N);
    EXPECT_LT(k, prev);
    prev = k;
  }
}
