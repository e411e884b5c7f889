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
#include "awpds/dynamics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "awpds/analysis.hpp"
#include "awpds/error.hpp"
#include "support/oracles.hpp"

namespace awpds {
namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

FieldSpec linear_field(std::shared_ptr<const ConstraintSet> set, double k, double a, double b) {
  return FieldSpec::custom(std::move(set), Metric::identity(1), k,
                           [a, b](const Vector&, const Vector& zb) { return Vector((a * zb.array() + b).matrix()); });
}

std::shared_ptr<const ConstraintSet> halfline() {
  return std::make_shared<PolyhedralSet>(PolyhedralSet::nonnegative_orthant(1));
}

IntegratorConfig cfg_of(double h, double T, Scheme s = Scheme::kEuler) {
  IntegratorConfig c;
  c.scheme = s;
  c.step_h = h;
  c.horizon_T = T;
  return c;
}

TEST(IntegrateAwa, ZeroFieldIsStationary) {
  const FieldSpec f = linear_field(halfline(), 0.1, 0.0, 0.0);
  const Trajectory t = integrate_awa(f, vec({0.3}), cfg_of(0.01, 1.0));
  EXPECT_EQ(t.size(), 101);
  EXPECT_EQ(t.termination, Termination::kHorizonReached);
  for (Index k = 0; k < t.size(); ++k) {
    EXPECT_EQ(t.states(k, 0), 0.3);
    EXPECT_EQ(t.dist_to_set(k), 0.0);
  }
}

TEST(IntegrateAwa, OneStepByHand) {
  const FieldSpec f = linear_field(halfline(), 0.1, -1.0, -1.0);
  const Trajectory t = integrate_awa(f, vec({0.5}), cfg_of(0.01, 0.01));
  ASSERT_EQ(t.size(), 2);
  EXPECT_NEAR(t.states(1, 0), 0.485, 1e-15);
  EXPECT_NEAR(t.step_norms(1), 0.015, 1e-15);
}

TEST(IntegrateAwa, EquilibriumIsHeld) {
  const FieldSpec f = linear_field(halfline(), 0.1, -1.0, -1.0);
  const Vector z = construct_awa_equilibrium(f, vec({0}));
  const Trajectory t = integrate_awa(f, z, cfg_of(0.01, 2.0, Scheme::kRk4));
  for (Index k = 0; k < t.size(); ++k) EXPECT_LE(std::abs(t.states(k, 0) - z(0)), 1e-8);
}

TEST(IntegrateAwa, StepBoundEnforced) {
  const FieldSpec f = linear_field(halfline(), 0.1, -1.0, 0.0);
  try {
    integrate_awa(f, vec({0}), cfg_of(0.06, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStepTooLarge);
  }
  EXPECT_NO_THROW(integrate_awa(f, vec({0}), cfg_of(0.05, 0.1)));
  EXPECT_THROW(integrate_awa(f, vec({0}), cfg_of(0.01, 1.0, Scheme::kProjectedEuler)), Error);
}

TEST(IntegrateAwa, BallExitInterpolatesTheCrossing) {
  auto free_line = std::make_shared<PolyhedralSet>(PolyhedralSet::whole_space(1));
  const FieldSpec f = linear_field(free_line, 1.0, 0.0, 1.0);  // z' = 1
  IntegratorConfig c = cfg_of(0.1, 10.0);
  c.trunc_epsilon = 0.55;
  const Trajectory t = integrate_awa(f, vec({0}), c);
  EXPECT_EQ(t.termination, Termination::kBallExit);
  EXPECT_NEAR(t.termination_time, 0.55, 1e-12);
  EXPECT_EQ(t.size(), 7);
}

TEST(IntegrateAwa, DivergenceIsReported) {
  auto free_line = std::make_shared<PolyhedralSet>(PolyhedralSet::whole_space(1));
  const FieldSpec f = linear_field(free_line, 1.0, 1e3, 0.0);
  const Trajectory t = integrate_awa(f, vec({1}), cfg_of(0.5, 100.0));
  EXPECT_EQ(t.termination, Termination::kNonfiniteState);
  EXPECT_TRUE(t.states.allFinite());
}

TEST(IntegrateAwa, DiagnosticsMatchTheDefinitions) {
  auto inst = std::make_shared<const QpInstance>(generate_instance(1, 4, 8, 6, 0));
  const FieldSpec f = FieldSpec::aw_gradient(inst, 0.1);
  const Trajectory t = integrate_awa(f, Vector::Constant(4, 3.0), cfg_of(0.01, 1.0));
  for (Index k = 0; k < t.size(); k += 10) {
    const ProjectionResult p = inst->input_set().project(t.state(k));
    EXPECT_LE((p.nearest - t.projected(k)).norm(), 1e-12);
    EXPECT_NEAR(p.distance, t.dist_to_set(k), 1e-12);
    EXPECT_NEAR(eval_field(f, t.state(k)).dz.norm(), t.field_norms(k), 1e-12);
  }
  for (Index k = 1; k < t.size(); ++k) EXPECT_NEAR(t.times(k) - t.times(k - 1), 0.01, 1e-15);
}

TEST(PdsReference, OneStepAndViability) {
  auto orthant = std::make_shared<PolyhedralSet>(PolyhedralSet::nonnegative_orthant(2));
  const FieldSpec f = FieldSpec::custom(orthant, Metric::identity(2), 1.0,
                                        [](const Vector&, const Vector&) { return Vector(Vector::Constant(2, -1.0)); });
  const Trajectory t = integrate_pds_reference(f, vec({0.5, 2}), cfg_of(0.5, 0.5));
  EXPECT_LE((t.state(1) - vec({0, 1.5})).norm(), 1e-12);
  const Trajectory longer = integrate_pds_reference(f, vec({0.5, 2}), cfg_of(0.1, 5.0));
  for (Index k = 0; k < longer.size(); ++k) EXPECT_TRUE(orthant->contains(longer.state(k), 1e-9));
  try {
    integrate_pds_reference(f, vec({-1, 0}), cfg_of(0.1, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInitialPointInfeasible);
  }
}

TEST(PdsReference, EquilibriumIsFixed) {
  auto inst = std::make_shared<const QpInstance>(generate_instance(2, 5, 10, 10, 0));
  const SteadyStateOptimum opt = solve_steady_state_qp(*inst, false);
  const Trajectory t = integrate_pds_reference(FieldSpec::aw_gradient(inst, 0.1), opt.u, cfg_of(0.01, 1.0));
  for (Index k = 0; k < t.size(); ++k) EXPECT_LE((t.state(k) - opt.u).norm(), 1e-10);
}

TEST(PdsReference, InteriorMatchesPlainEuler) {
  auto wide = std::make_shared<PolyhedralSet>(PolyhedralSet::box(vec({-100}), vec({100})));
  const FieldSpec f = linear_field(wide, 1.0, -1.0, 0.0);
  const Trajectory t = integrate_pds_reference(f, vec({1}), cfg_of(0.01, 1.0));
  double x = 1.0;
  for (Index k = 1; k < t.size(); ++k) {
    x += 0.01 * -x;
    EXPECT_NEAR(t.states(k, 0), x, 1e-12);
  }
}

TEST(ObliquePds, InteriorBoundaryAndMetric) {
  auto wide = std::make_shared<PolyhedralSet>(PolyhedralSet::box(vec({-100}), vec({100})));
  const Trajectory a = integrate_oblique_pds(linear_field(wide, 1.0, -1.0, 0.0), vec({1}), cfg_of(0.01, 0.5));
  EXPECT_NEAR(a.final_state()(0), std::pow(0.99, 50), 1e-12);

  const Trajectory b = integrate_oblique_pds(linear_field(halfline(), 1.0, 0.0, -1.0), vec({0}), cfg_of(0.1, 1.0));
  for (Index k = 0; k < b.size(); ++k) EXPECT_EQ(b.states(k, 0), 0.0);

  // At the face u1 = 0 of the orthant with f = (-1, 1), G = diag(1, 4)
  // and G = I yield different tangential velocities.
  auto orthant = std::make_shared<PolyhedralSet>(PolyhedralSet::nonnegative_orthant(2));
  Matrix g = Matrix::Zero(2, 2);
  g << 1, 0.5, 0.5, 1;
  const CustomDrift drift = [](const Vector&, const Vector&) { return vec({-1, 1}); };
  const FieldSpec fi = FieldSpec::custom(orthant, Metric::identity(2), 1.0, drift);
  const FieldSpec fg = FieldSpec::custom(orthant, Metric(g), 1.0, drift);
  const Trajectory ti = integrate_oblique_pds(fi, vec({0, 1}), cfg_of(0.01, 0.01));
  const Trajectory tg = integrate_oblique_pds(fg, vec({0, 1}), cfg_of(0.01, 0.01));
  const Vector pi = project_cone_oblique(orthant->tangent_cone(vec({0, 1})), vec({-1, 1}), Metric::identity(2)).tangent_part;
  const Vector pg = project_cone_oblique(orthant->tangent_cone(vec({0, 1})), vec({-1, 1}), Metric(g)).tangent_part;
  EXPECT_LE((ti.state(1) - (vec({0, 1}) + 0.01 * pi)).norm(), 1e-12);
  EXPECT_LE((tg.state(1) - (vec({0, 1}) + 0.01 * pg)).norm(), 1e-12);
  EXPECT_GT((pi - pg).norm(), 0.1);
  EXPECT_TRUE(orthant->contains(tg.state(1)));
}

TEST(Counterexample, TubeIsLeftOnlyOnTheCusp) {
  for (double k : {0.1, 0.05}) {
    const CounterexampleResult r = run_counterexample(0.75, k, cfg_of(0.1 * k, 2.0));
    EXPECT_EQ(r.report.M, 1.0);
    EXPECT_EQ(r.report.mu, 1.0);
    EXPECT_EQ(r.report.nu, 1.0);
    EXPECT_NEAR(KappaCuspSet(0.75).distance(r.report.z0), k, 1e-12);
    EXPECT_TRUE(r.report.violated);
    ASSERT_TRUE(r.report.exit_time.has_value());
    EXPECT_GT(r.report.max_distance, k);
    EXPECT_FALSE(r.control_report.violated);
    EXPECT_LE(r.control_report.max_distance, k + 2 * 0.1 * k);
  }
}

TEST(Counterexample, RepresentativeSelectionStaysInTheTube) {
  // The lexicographic selection alone does not exhibit the exit.
  const CounterexampleResult r =
      run_counterexample(0.75, 0.1, cfg_of(0.01, 2.0), MultiValuedPolicy::kRepresentative);
  EXPECT_LE(r.report.max_distance, 0.1 + 1e-3);
}

TEST(Invariants, TubeSpeedAndLyapunovOnASeededInstance) {
  auto inst = std::make_shared<const QpInstance>(generate_instance(3, 10, 20, 30, 0));
  const auto [beta, L] = estimate_monotonicity_constants(*inst);
  const double k = 0.5 * monotonicity_threshold(beta, L);
  const FieldSpec f = FieldSpec::aw_gradient(inst, k);
  const SteadyStateOptimum opt = solve_steady_state_qp(*inst, false);
  const Vector z_star = construct_awa_equilibrium(f, opt.u);
  const Trajectory t = integrate_awa(f, inst->input_set().witness(), cfg_of(0.1 * k, 20.0));
  EXPECT_TRUE(check_tube(t).passed);
  EXPECT_TRUE(check_speed(t).passed);
  const LyapunovCheck ly = check_lyapunov(t, z_star);
  EXPECT_TRUE(ly.passed) << ly.max_excess;
}

TEST(Invariants, SignFlipBreaksTheTube) {
  auto inst = std::make_shared<const QpInstance>(generate_instance(3, 10, 20, 30, 0));
  FieldSpec f = FieldSpec::aw_gradient(inst, 0.1);
  f.antiwindup_sign = -1.0;
  const Trajectory t = integrate_awa(f, inst->input_set().witness(), cfg_of(0.01, 5.0));
  EXPECT_TRUE(t.termination != Termination::kHorizonReached || !check_tube(t).passed);
}

TEST(Invariants, RefuseMissingDiagnostics) {
  Trajectory t;
  try {
    check_tube(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingDiagnostics);
  }
}

TEST(Rk4, SelfConvergenceOrder) {
  // z' = -z + 1 on R: values at T = 1 with h, h/2, h/4.
  auto free_line = std::make_shared<PolyhedralSet>(PolyhedralSet::whole_space(1));
  const FieldSpec f = linear_field(free_line, 10.0, -1.0, 1.0);
  double y[3];
  const double hs[3] = {0.2, 0.1, 0.05};
  for (int i = 0; i < 3; ++i) y[i] = integrate_awa(f, vec({0}), cfg_of(hs[i], 1.0, Scheme::kRk4)).final_state()(0);
  EXPECT_GE(testing::richardson_order(y[0], y[1], y[2]), 3.5);
  double e[3];
  for (int i = 0; i < 3; ++i) {
    e[i] = integrate_awa(f, vec({0}), cfg_of(hs[i], 1.0, Scheme::kEuler)).final_state()(0);
  }
  EXPECT_NEAR(testing::richardson_order(e[0], e[1], e[2]), 1.0, 0.15);
  EXPECT_LE(std::abs(e[2] - y[2]), 0.05);
}

}  // namespace
}  // namespace awpds
