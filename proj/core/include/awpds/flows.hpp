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
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <utility>

#include "awpds/geometry.hpp"
#include "awpds/linalg.hpp"
#include "awpds/projsolve.hpp"

namespace awpds {

struct StateConstraints {
  Matrix A_x;
  Vector b_x;
};

/// Steady-state quadratic program
///   minimize 1/2 x^T Q x + c^T x + d  s.t.  x = H u + w,  u in U,  [A_x x <= b_x].
class QpInstance {
 public:
  /// Checks Q SPD, dimensions, and that U is bounded. State-constraint rows
  /// are normalized to unit norm.
  QpInstance(Matrix Q, Vector c, double d, Matrix H, Vector w, PolyhedralSet input_set,
             std::optional<StateConstraints> state_constraints = std::nullopt);

  Index input_dim() const { return h_.cols(); }
  Index state_dim() const { return h_.rows(); }
  Index state_constraint_count() const { return state_ ? state_->A_x.rows() : 0; }

  const Matrix& Q() const { return q_; }
  const Vector& c() const { return c_; }
  double d() const { return d_; }
  const Matrix& H() const { return h_; }
  const Vector& w() const { return w_; }
  const PolyhedralSet& input_set() const { return input_set_; }
  const std::optional<StateConstraints>& state_constraints() const { return state_; }

  Vector steady_state(const Vector& u) const { return h_ * u + w_; }
  double objective(const Vector& x) const { return 0.5 * x.dot(q_ * x) + c_.dot(x) + d_; }
  Vector objective_gradient(const Vector& x) const { return q_ * x + c_; }
  double reduced_objective(const Vector& u) const { return objective(steady_state(u)); }

  /// H^T grad Phi(H u + w).
  Vector reduced_gradient(const Vector& u) const;

  /// H^T Q H, the Hessian of the reduced objective.
  const Matrix& reduced_hessian() const { return reduced_hessian_; }

  /// Solves H^T Q H u = -H^T (Q w + c). Throws IllConditioned when H^T Q H is
  /// singular.
  Vector unconstrained_minimizer() const;

 private:
  Matrix q_;
  Vector c_;
  double d_;
  Matrix h_;
  Vector w_;
  PolyhedralSet input_set_;
  std::optional<StateConstraints> state_;
  Matrix reduced_hessian_;
};

/// Optimizer of the steady-state QP with multipliers for U rows and X rows.
struct SteadyStateOptimum {
  Vector u;
  Vector duals_u;
  Vector duals_x;
};

enum class QpOracle { kAuto, kActiveSet, kEnumeration };

/// The reduced QP is the projection of the unconstrained minimizer onto
/// U (and h^{-1}(X)) in the metric H^T Q H.
SteadyStateOptimum solve_steady_state_qp(const QpInstance& instance, bool include_state_constraints = true,
                                         QpOracle oracle = QpOracle::kAuto);

enum class FieldKind { kPenaltyGradient, kAwGradient, kAwNewton, kAwSaddle, kCustom };

std::string_view to_string(FieldKind kind);
FieldKind field_kind_from_string(std::string_view name);

/// How F_K is evaluated when P_Z(z) has several points.
enum class MultiValuedPolicy {
  kConvexAverage,   // mean of F_K over the candidates (an element of co F_K(z))
  kRepresentative,  // lexicographically smallest candidate only
};

/// Drift f(z, zbar) of a user-defined anti-windup approximation.
using CustomDrift = std::function<Vector(const Vector& z, const Vector& zbar)>;

/// Right-hand side selector together with its data.
struct FieldSpec {
  FieldKind kind = FieldKind::kAwGradient;
  std::shared_ptr<const QpInstance> instance;
  double gain_K = 1.0;
  Metric metric = Metric::identity(1);
  std::shared_ptr<const ConstraintSet> set;  // the constraint set Z of the state
  CustomDrift drift;
  MultiValuedPolicy policy = MultiValuedPolicy::kConvexAverage;
  // Mutation-testing hook: -1 flips the sign of the anti-windup term.
  double antiwindup_sign = 1.0;

  static FieldSpec penalty_gradient(std::shared_ptr<const QpInstance> instance, double gain_K);
  static FieldSpec aw_gradient(std::shared_ptr<const QpInstance> instance, double gain_K);
  /// Metric is the reduced Hessian H^T Q H.
  static FieldSpec aw_newton(std::shared_ptr<const QpInstance> instance, double gain_K);
  /// State (u, lambda) with lambda >= 0 for the state constraints.
  static FieldSpec aw_saddle(std::shared_ptr<const QpInstance> instance, double gain_K);
  static FieldSpec custom(std::shared_ptr<const ConstraintSet> set, Metric metric, double gain_K,
                          CustomDrift drift);

  Index state_dimension() const;
  const ConstraintSet& constraint_set() const { return *set; }
  /// Indicates whether f depends on z only through P_Z(z).
  bool drift_uses_projection_only() const { return kind != FieldKind::kPenaltyGradient; }
  void validate() const;
};

struct FieldValue {
  Vector dz;
  Vector projected_state;
  Vector antiwindup_term;
  Vector drift;
  double distance = 0.0;
  bool unique_projection = true;
};

/// F_K(z) = f(z, P_Z(z)) - (1/K) G^{-1} (z - P_Z(z)) for the selected scheme.
FieldValue eval_field(const FieldSpec& spec, const Vector& z, ProjectionHint* hint = nullptr);

/// The limiting PDS drift f(zbar, zbar) at a point of Z.
Vector pds_drift(const FieldSpec& spec, const Vector& zbar);

/// Saddle kind: clips negative multipliers of the dual block to zero.
void enforce_dual_nonnegativity(const FieldSpec& spec, Vector& z);

struct MonotonicityCertificate {
  double beta = 0.0;
  double lipschitz_L = 0.0;
  double alpha = 0.0;
  std::optional<double> threshold_K;  // empty when beta <= 2 alpha
};

/// 4 (beta - 2 alpha) / L^2; throws NotApplicable when beta <= 2 alpha.
double monotonicity_threshold(double beta, double lipschitz_L, double alpha = 0.0);
MonotonicityCertificate monotonicity_certificate(double beta, double lipschitz_L, double alpha = 0.0);

/// (beta, L): extreme eigenvalues of H^T Q H.
std::pair<double, double> estimate_monotonicity_constants(const QpInstance& instance);

/// Deterministic random instance; 0 is strictly feasible with margin >= 0.1.
/// Rows of A_u: r random unit rows followed by the 2p box rows +-e_i^T u <= 5.
QpInstance generate_instance(std::uint64_t seed, Index p, Index m, Index r, Index s);

/// z*_K = zbar + K G f(zbar). Throws NotAnEquilibrium when
/// ||Pi^G_T[f(zbar)]|| > 1e-8 and ResidualCheckFailed when ||F_K(z*_K)|| or
/// ||P_Z(z*_K) - zbar|| exceeds 1e-10.
Vector construct_awa_equilibrium(const FieldSpec& field, const Vector& pds_equilibrium);

}  // namespace awpds
