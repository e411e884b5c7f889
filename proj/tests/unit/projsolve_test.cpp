// Copyright 2026 The awpds Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "awpds/projsolve.hpp"

#include <gtest/gtest.h>

#include <random>

#include "awpds/error.hpp"
#include "support/oracles.hpp"

namespace awpds {
namespace {

Matrix rows2(double a, double b) {
  Matrix m(1, 2);
  m << a, b;
  return m;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

TEST(SolveProjection, BoxClipsCoordinates) {
  Matrix a(4, 2);
  a << 1, 0, 0, 1, -1, 0, 0, -1;
  const QpSpec spec{Metric::identity(2), vec({2.0, 0.5}), a, vec({1, 1, 0, 0}), false};
  const QpSolution sol = solve_projection(spec);
  EXPECT_NEAR(sol.minimizer(0), 1.0, 1e-12);
  EXPECT_NEAR(sol.minimizer(1), 0.5, 1e-12);
  EXPECT_NEAR(sol.duals(0), 1.0, 1e-12);
  EXPECT_EQ(sol.active_set, std::vector<int>{0});
}

TEST(SolveProjection, SymmetricHalfspace) {
  const QpSpec spec{Metric::identity(2), vec({1, 1}), rows2(1, 1), vec({1}), false};
  const QpSolution sol = solve_projection(spec);
  EXPECT_NEAR(sol.minimizer(0), 0.5, 1e-12);
  EXPECT_NEAR(sol.minimizer(1), 0.5, 1e-12);
}

TEST(SolveProjection, DiagonalMetricCone) {
  Matrix g = Matrix::Zero(2, 2);
  g.diagonal() << 1, 4;
  const QpSolution sol = solve_projection(QpSpec::cone(Metric(g), vec({1, 1}), rows2(1, 0)));
  EXPECT_NEAR(sol.minimizer(0), 0.0, 1e-12);
  EXPECT_NEAR(sol.minimizer(1), 1.0, 1e-12);
}

TEST(SolveProjection, ReportsInfeasibleRegion) {
  Matrix a(2, 1);
  a << 1, -1;
  const QpSpec spec{Metric::identity(1), vec({0}), a, vec({-1, -1}), false};
  try {
    solve_projection(spec);
    FAIL() << "expected Infeasible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
}

TEST(SolveProjection, RedundantRowsKeepSmallestIndex) {
  // Rows 0 and 1 describe the same face; the solver keeps one copy.
  Matrix a(2, 2);
  a << 1, 1, 2, 2;
  const QpSpec spec{Metric::identity(2), vec({1, 1}), a, vec({1, 2}), false};
  const QpSolution sol = solve_projection(spec);
  EXPECT_NEAR(sol.minimizer(0), 0.5, 1e-12);
  EXPECT_LE(sol.kkt_residual, 1e-10);
  EXPECT_EQ(sol.active_set, std::vector<int>{0});
}

TEST(SolveProjection, MaxIterationsGuard) {
  Matrix a(4, 2);
  a << 1, 0, 0, 1, -1, 0, 0, -1;
  const QpSpec spec{Metric::identity(2), vec({3, 3}), a, vec({1, 1, 1, 1}), false};
  ActiveSetOptions opts;
  opts.max_iterations = 1;
  try {
    solve_projection(spec, opts);
    FAIL() << "expected MaxIterations";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMaxIterations);
  }
}

TEST(SolveProjection, DegenerateConesTerminate) {
  // Many rows active at the origin: the regime where primal active-set
  // methods can cycle.
  std::mt19937_64 rng(77);
  for (int t = 0; t < 20; ++t) {
    const Index n = 6, r = 16;
    Matrix a(r, n);
    for (Index i = 0; i < r; ++i) {
      const Vector v = testing::random_normal(n, rng);
      a.row(i) = v.transpose() / v.norm();
    }
    const Vector target = testing::random_normal(n, rng, 3.0);
    const QpSpec spec = QpSpec::cone(Metric::identity(n), target, a);
    const QpSolution sol = solve_projection(spec);
    EXPECT_LE(sol.kkt_residual, 1e-8);
    const Vector ref = testing::enumerate_projection(Matrix::Identity(n, n), target, a, Vector::Zero(r));
    EXPECT_LE((sol.minimizer - ref).norm(), 1e-8);
  }
}

TEST(BruteForce, InteriorTargetHasEmptyActiveSet) {
  const QpSpec spec{Metric::identity(2), vec({0.1, 0.2}), rows2(1, 1), vec({1}), false};
  const QpSolution sol = brute_force_projection(spec);
  EXPECT_EQ((sol.minimizer - spec.target).norm(), 0.0);
  EXPECT_TRUE(sol.active_set.empty());
}

TEST(BruteForce, OneDimensionalDual) {
  Matrix a(1, 1);
  a << -1;
  const QpSpec spec{Metric::identity(1), vec({-1}), a, vec({0}), false};
  const QpSolution sol = brute_force_projection(spec);
  EXPECT_NEAR(sol.minimizer(0), 0.0, 1e-14);
  EXPECT_NEAR(sol.duals(0), 1.0, 1e-14);
}

TEST(BruteForce, RejectsMoreThanTwentyRows) {
  const QpSpec spec{Metric::identity(1), vec({0}), Matrix::Ones(21, 1), Vector::Ones(21), false};
  try {
    brute_force_projection(spec);
    FAIL() << "expected TooManyConstraints";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooManyConstraints);
  }
}

TEST(KktEquality, NoRowsReturnsTarget) {
  const EqualityKktSolution s = solve_kkt_equality(Metric::identity(2), vec({1, 2}), Matrix(0, 2), Vector(0));
  EXPECT_EQ(s.z, vec({1, 2}));
  EXPECT_EQ(s.lambda.size(), 0);
}

TEST(KktEquality, HalfspaceClosedForm) {
  const EqualityKktSolution s = solve_kkt_equality(Metric::identity(2), vec({1, 0}), rows2(1, 1), vec({0}));
  const Vector oracle = testing::halfspace_projection(vec({1, 0}), vec({1, 1}), 0.0);
  EXPECT_NEAR((s.z - oracle).norm(), 0.0, 1e-14);
  EXPECT_NEAR(s.lambda(0), 0.5, 1e-14);
}

TEST(KktEquality, PinnedScalar) {
  Matrix a(1, 1);
  a << 1;
  const EqualityKktSolution s = solve_kkt_equality(Metric::identity(1), vec({2}), a, vec({1}));
  EXPECT_NEAR(s.z(0), 1.0, 1e-15);
  EXPECT_NEAR(s.lambda(0), 1.0, 1e-15);
}

TEST(KktEquality, DependentRowsNameTheLargestIndex) {
  Matrix a(3, 2);
  a << 1, 0, 0, 1, 1, 1;
  try {
    solve_kkt_equality(Metric::identity(2), vec({1, 1}), a, vec({0, 0, 0}));
    FAIL() << "expected RankDeficient";
  } catch (const RankDeficientError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRankDeficient);
    EXPECT_EQ(e.dependent_row(), 2);
  }
}

TEST(ProjectionProperties, OracleEquivalence) {
  std::mt19937_64 rng(20261014);
  for (int t = 0; t < 200; ++t) {
    const QpSpec spec = testing::random_projection_spec(rng);
    const QpSolution fast = solve_projection(spec);
    const QpSolution slow = brute_force_projection(spec);
    const Vector oracle = testing::enumerate_projection(spec.metric.matrix(), spec.target, spec.A, spec.b);
    ASSERT_LE((fast.minimizer - slow.minimizer).norm(), 1e-8) << "case " << t;
    ASSERT_LE((fast.minimizer - oracle).norm(), 1e-8) << "case " << t;
    ASSERT_LE(fast.kkt_residual, 1e-8 * (1.0 + spec.target.norm())) << "case " << t;
    ASSERT_GE(fast.duals.size() ? fast.duals.minCoeff() : 0.0, -1e-10);
  }
}

TEST(ProjectionProperties, IdempotentAndNonexpansive) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    QpSpec spec = testing::random_projection_spec(rng);
    spec.metric = Metric::identity(spec.dimension());
    const Vector px = solve_projection(spec).minimizer;
    QpSpec again = spec;
    again.target = px;
    EXPECT_LE((solve_projection(again).minimizer - px).norm(), 1e-10);
    QpSpec other = spec;
    other.target = testing::random_normal(spec.dimension(), rng, 2.0);
    const Vector py = solve_projection(other).minimizer;
    EXPECT_LE((px - py).norm(), (spec.target - other.target).norm() + 1e-10);
  }
}

TEST(ProjectionProperties, WarmStartAgrees) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    QpSpec spec = testing::random_projection_spec(rng);
    const QpSolution cold = solve_projection(spec);
    spec.target += testing::random_normal(spec.dimension(), rng, 0.05);
    const WarmStart warm{cold.minimizer, cold.active_set};
    const QpSolution hot = solve_projection(spec, {}, &warm);
    EXPECT_LE((hot.minimizer - solve_projection(spec).minimizer).norm(), 1e-9);
  }
}

TEST(QpSpecValidation, RejectsAsymmetricMetric) {
  Matrix g(2, 2);
  g << 1, 0.5, 0, 1;
  EXPECT_THROW(Metric{g}, Error);
}

TEST(QpSpecValidation, RejectsNonfiniteData) {
  QpSpec spec{Metric::identity(1), vec({std::nan("")}), Matrix(0, 1), Vector(0), false};
  EXPECT_THROW(spec.validate(), Error);
}

TEST(FeasiblePoint, FindsPointOrReportsEmpty) {
  Matrix a(2, 1);
  a << 1, -1;
  const auto p = find_feasible_point(a, vec({2, -1}));
  ASSERT_TRUE(p.has_value());
  EXPECT_GE((*p)(0), 1.0 - 1e-9);
  EXPECT_LE((*p)(0), 2.0 + 1e-9);
  EXPECT_FALSE(find_feasible_point(a, vec({-1, -1})).has_value());
}

}  // namespace
}  // namespace awpds
