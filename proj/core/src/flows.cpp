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
#include "awpds/flows.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "awpds/error.hpp"

namespace awpds {

namespace {

void require_size(const Vector& v, Index n, const char* what) {
  if (v.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + ": expected size " + std::to_string(n) +
                                                   ", got " + std::to_string(v.size()));
  }
}

const QpInstance& need_instance(const FieldSpec& spec) {
  if (!spec.instance) throw Error(ErrorCode::kInvalidArgument, "field has no QP instance");
  return *spec.instance;
}

}  // namespace

QpInstance::QpInstance(Matrix Q, Vector c, double d, Matrix H, Vector w, PolyhedralSet input_set,
                       std::optional<StateConstraints> state_constraints)
    : q_(std::move(Q)),
      c_(std::move(c)),
      d_(d),
      h_(std::move(H)),
      w_(std::move(w)),
      input_set_(std::move(input_set)),
      state_(std::move(state_constraints)) {
  const Index m = q_.rows();
  if (q_.cols() != m) throw Error(ErrorCode::kDimensionMismatch, "Q must be square");
  require_size(c_, m, "c");
  require_size(w_, m, "w");
  if (h_.rows() != m) throw Error(ErrorCode::kDimensionMismatch, "H must have as many rows as Q");
  if (input_set_.dimension() != h_.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "input set dimension differs from the columns of H");
  }
  if (!q_.allFinite() || !c_.allFinite() || !h_.allFinite() || !w_.allFinite() || !std::isfinite(d_)) {
    throw Error(ErrorCode::kNonfiniteValue, "QP data not finite");
  }
  Metric q_check(q_);  // throws unless Q is SPD
  if (!input_set_.is_bounded()) throw Error(ErrorCode::kInvalidArgument, "input set U is unbounded");
  if (state_) {
    if (state_->A_x.cols() != m || state_->A_x.rows() != state_->b_x.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "state constraints have inconsistent shape");
    }
    for (Index i = 0; i < state_->A_x.rows(); ++i) {
      const double nrm = state_->A_x.row(i).norm();
      if (!(nrm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "state constraint row is zero");
      state_->A_x.row(i) /= nrm;
      state_->b_x(i) /= nrm;
    }
  }
  reduced_hessian_ = h_.transpose() * q_ * h_;
  reduced_hessian_ = 0.5 * (reduced_hessian_ + reduced_hessian_.transpose());
}

Vector QpInstance::reduced_gradient(const Vector& u) const {
  require_size(u, input_dim(), "u");
  return h_.transpose() * objective_gradient(steady_state(u));
}

Vector QpInstance::unconstrained_minimizer() const {
  Eigen::LLT<Matrix> llt(reduced_hessian_);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kIllConditioned, "H^T Q H is not positive definite");
  return llt.solve(-(h_.transpose() * (q_ * w_ + c_)));
}

SteadyStateOptimum solve_steady_state_qp(const QpInstance& instance, bool include_state_constraints,
                                         QpOracle oracle) {
  const PolyhedralSet& u_set = instance.input_set();
  const Index ru = u_set.constraint_count();
  const Index rx = include_state_constraints ? instance.state_constraint_count() : 0;
  const Index p = instance.input_dim();

  Matrix A(ru + rx, p);
  Vector b(ru + rx);
  A.topRows(ru) = u_set.A();
  b.head(ru) = u_set.b();
  if (rx > 0) {
    const StateConstraints& sc = *instance.state_constraints();
    A.bottomRows(rx) = sc.A_x * instance.H();
    b.tail(rx) = sc.b_x - sc.A_x * instance.w();
  }
  QpSpec spec{Metric(instance.reduced_hessian()), instance.unconstrained_minimizer(), A, b, false};

  if (oracle == QpOracle::kAuto) oracle = (ru + rx <= 12) ? QpOracle::kEnumeration : QpOracle::kActiveSet;
  QpSolution sol;
  if (oracle == QpOracle::kEnumeration) {
    sol = brute_force_projection(spec);
  } else {
    WarmStart warm{u_set.witness(), {}};
    sol = solve_projection(spec, {}, rx == 0 ? &warm : nullptr);
  }
  SteadyStateOptimum out;
  out.u = sol.minimizer;
  out.duals_u = sol.duals.head(ru);
  out.duals_x = sol.duals.tail(rx);
  return out;
}

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::kPenaltyGradient: return "penalty_gradient";
    case FieldKind::kAwGradient: return "aw_gradient";
    case FieldKind::kAwNewton: return "aw_newton";
    case FieldKind::kAwSaddle: return "aw_saddle";
    case FieldKind::kCustom: return "custom";
  }
  return "unknown";
}

FieldKind field_kind_from_string(std::string_view name) {
  for (FieldKind k : {FieldKind::kPenaltyGradient, FieldKind::kAwGradient, FieldKind::kAwNewton,
                      FieldKind::kAwSaddle, FieldKind::kCustom}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown field kind '" + std::string(name) + "'");
}

namespace {

FieldSpec qp_field(FieldKind kind, std::shared_ptr<const QpInstance> instance, double gain_K) {
  if (!instance) throw Error(ErrorCode::kInvalidArgument, "null QP instance");
  FieldSpec spec;
  spec.kind = kind;
  spec.gain_K = gain_K;
  const Index dim = instance->input_dim() + (kind == FieldKind::kAwSaddle ? instance->state_constraint_count() : 0);
  spec.metric = Metric::identity(dim);
  spec.set = std::shared_ptr<const ConstraintSet>(instance, &instance->input_set());
  spec.instance = std::move(instance);
  spec.validate();
  return spec;
}

}  // namespace

FieldSpec FieldSpec::penalty_gradient(std::shared_ptr<const QpInstance> instance, double gain_K) {
  return qp_field(FieldKind::kPenaltyGradient, std::move(instance), gain_K);
}

FieldSpec FieldSpec::aw_gradient(std::shared_ptr<const QpInstance> instance, double gain_K) {
  return qp_field(FieldKind::kAwGradient, std::move(instance), gain_K);
}

FieldSpec FieldSpec::aw_newton(std::shared_ptr<const QpInstance> instance, double gain_K) {
  FieldSpec spec = qp_field(FieldKind::kAwNewton, std::move(instance), gain_K);
  spec.metric = Metric(spec.instance->reduced_hessian());
  return spec;
}

FieldSpec FieldSpec::aw_saddle(std::shared_ptr<const QpInstance> instance, double gain_K) {
  if (instance && instance->state_constraint_count() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "saddle flow needs state constraints");
  }
  FieldSpec spec = qp_field(FieldKind::kAwSaddle, std::move(instance), gain_K);
  const QpInstance& inst = *spec.instance;
  const Index p = inst.input_dim();
  const Index s = inst.state_constraint_count();
  const Index ru = inst.input_set().constraint_count();
  Matrix A = Matrix::Zero(ru + s, p + s);
  A.topLeftCorner(ru, p) = inst.input_set().A();
  A.bottomRightCorner(s, s) = -Matrix::Identity(s, s);
  Vector b = Vector::Zero(ru + s);
  b.head(ru) = inst.input_set().b();
  Vector witness = Vector::Zero(p + s);
  witness.head(p) = inst.input_set().witness();
  spec.set = std::make_shared<PolyhedralSet>(std::move(A), std::move(b), std::move(witness));
  return spec;
}

FieldSpec FieldSpec::custom(std::shared_ptr<const ConstraintSet> set, Metric metric, double gain_K,
                            CustomDrift drift) {
  FieldSpec spec;
  spec.kind = FieldKind::kCustom;
  spec.gain_K = gain_K;
  spec.metric = std::move(metric);
  spec.set = std::move(set);
  spec.drift = std::move(drift);
  spec.validate();
  return spec;
}

Index FieldSpec::state_dimension() const {
  if (kind == FieldKind::kAwSaddle) return instance->input_dim() + instance->state_constraint_count();
  if (kind == FieldKind::kCustom) return set->dimension();
  return instance->input_dim();
}

void FieldSpec::validate() const {
  if (!(gain_K > 0.0) || !std::isfinite(gain_K)) {
    throw Error(ErrorCode::kInvalidArgument, "gain K must be positive, got " + std::to_string(gain_K));
  }
  if (!set) throw Error(ErrorCode::kInvalidArgument, "field has no constraint set");
  if (kind == FieldKind::kCustom) {
    if (!drift) throw Error(ErrorCode::kInvalidArgument, "custom field has no drift");
  } else if (!instance) {
    throw Error(ErrorCode::kInvalidArgument, "field has no QP instance");
  }
  if (metric.dimension() != state_dimension()) {
    throw Error(ErrorCode::kDimensionMismatch, "metric dimension differs from the state dimension");
  }
}

namespace {

FieldValue eval_saddle(const FieldSpec& spec, const Vector& z, ProjectionHint* hint) {
  const QpInstance& inst = need_instance(spec);
  const StateConstraints& sc = *inst.state_constraints();
  const Index p = inst.input_dim();
  const Index s = inst.state_constraint_count();
  const Vector u = z.head(p);
  const Vector lambda = z.tail(s).cwiseMax(0.0);

  const ProjectionResult pu = inst.input_set().project(u, hint);
  const Vector x_bar = inst.steady_state(pu.nearest);
  const Vector g = sc.A_x * x_bar - sc.b_x;

  FieldValue out;
  out.drift.resize(p + s);
  out.drift.head(p) = -(inst.H().transpose() * (inst.objective_gradient(x_bar) + sc.A_x.transpose() * lambda));
  for (Index i = 0; i < s; ++i) out.drift(p + i) = lambda(i) > 0.0 ? g(i) : std::max(g(i), 0.0);
  out.antiwindup_term = Vector::Zero(p + s);
  out.antiwindup_term.head(p) = -(spec.antiwindup_sign / spec.gain_K) * (u - pu.nearest);
  out.dz = out.drift + out.antiwindup_term;
  out.projected_state.resize(p + s);
  out.projected_state << pu.nearest, lambda;
  out.distance = std::hypot(pu.distance, (z.tail(s) - lambda).norm());
  return out;
}

}  // namespace

FieldValue eval_field(const FieldSpec& spec, const Vector& z, ProjectionHint* hint) {
  require_size(z, spec.state_dimension(), "field state");
  if (!z.allFinite()) throw Error(ErrorCode::kNonfiniteValue, "field evaluated at a nonfinite state");
  const double inv_k = spec.antiwindup_sign / spec.gain_K;

  FieldValue out;
  switch (spec.kind) {
    case FieldKind::kAwSaddle:
      out = eval_saddle(spec, z, hint);
      break;
    case FieldKind::kPenaltyGradient:
    case FieldKind::kAwGradient:
    case FieldKind::kAwNewton: {
      const QpInstance& inst = need_instance(spec);
      ProjectionResult pr = inst.input_set().project(z, hint);
      const Vector& zbar = pr.nearest;
      const Vector grad = inst.reduced_gradient(spec.kind == FieldKind::kPenaltyGradient ? z : zbar);
      const Vector residual = z - zbar;
      if (spec.kind == FieldKind::kAwNewton) {
        out.drift = -spec.metric.solve(grad);
        out.antiwindup_term = -inv_k * spec.metric.solve(residual);
        out.dz = -spec.metric.solve(grad + inv_k * residual);
      } else {
        out.drift = -grad;
        out.antiwindup_term = -inv_k * residual;
        out.dz = out.drift + out.antiwindup_term;
      }
      out.projected_state = zbar;
      out.distance = pr.distance;
      break;
    }
    case FieldKind::kCustom: {
      ProjectionResult pr = spec.set->project(z, hint);
      const bool average = !pr.unique && spec.policy == MultiValuedPolicy::kConvexAverage;
      const std::size_t count = average ? pr.candidates.size() : 1;
      out.drift = Vector::Zero(z.size());
      out.antiwindup_term = Vector::Zero(z.size());
      for (std::size_t i = 0; i < count; ++i) {
        const Vector& c = average ? pr.candidates[i] : pr.nearest;
        Vector f = spec.drift(z, c);
        require_size(f, z.size(), "custom drift");
        out.drift += f;
        out.antiwindup_term += -inv_k * spec.metric.solve(z - c);
      }
      out.drift /= static_cast<double>(count);
      out.antiwindup_term /= static_cast<double>(count);
      out.dz = out.drift + out.antiwindup_term;
      out.projected_state = pr.nearest;
      out.distance = pr.distance;
      out.unique_projection = pr.unique;
      break;
    }
  }
  if (!out.dz.allFinite()) throw Error(ErrorCode::kNonfiniteValue, "field value is not finite");
  return out;
}

Vector pds_drift(const FieldSpec& spec, const Vector& zbar) {
  require_size(zbar, spec.state_dimension(), "PDS state");
  switch (spec.kind) {
    case FieldKind::kPenaltyGradient:
    case FieldKind::kAwGradient:
      return -need_instance(spec).reduced_gradient(zbar);
    case FieldKind::kAwNewton:
      return -spec.metric.solve(need_instance(spec).reduced_gradient(zbar));
    case FieldKind::kCustom:
      return spec.drift(zbar, zbar);
    case FieldKind::kAwSaddle:
      break;
  }
  throw Error(ErrorCode::kNotApplicable, "saddle flow has no reduced PDS drift");
}

void enforce_dual_nonnegativity(const FieldSpec& spec, Vector& z) {
  if (spec.kind != FieldKind::kAwSaddle) return;
  const Index s = spec.instance->state_constraint_count();
  for (Index i = z.size() - s; i < z.size(); ++i) z(i) = std::max(z(i), 0.0);
}

double monotonicity_threshold(double beta, double lipschitz_L, double alpha) {
  if (!(lipschitz_L > 0.0) || !(beta > 0.0) || !(alpha >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "monotonicity threshold needs beta > 0, L > 0, alpha >= 0");
  }
  if (beta <= 2.0 * alpha) throw Error(ErrorCode::kNotApplicable, "beta <= 2 alpha: no gain threshold");
  return 4.0 * (beta - 2.0 * alpha) / (lipschitz_L * lipschitz_L);
}

MonotonicityCertificate monotonicity_certificate(double beta, double lipschitz_L, double alpha) {
  MonotonicityCertificate cert{beta, lipschitz_L, alpha, std::nullopt};
  if (beta > 2.0 * alpha) cert.threshold_K = monotonicity_threshold(beta, lipschitz_L, alpha);
  return cert;
}

std::pair<double, double> estimate_monotonicity_constants(const QpInstance& instance) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(instance.reduced_hessian(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::kEigenFailure, "eigen-solve of H^T Q H failed");
  return {es.eigenvalues()(0), es.eigenvalues()(es.eigenvalues().size() - 1)};
}

QpInstance generate_instance(std::uint64_t seed, Index p, Index m, Index r, Index s) {
  if (p < 1 || m < 1 || r < 0 || s < 0) {
    throw Error(ErrorCode::kInvalidArgument, "instance dimensions must satisfy p, m >= 1 and r, s >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> slack(0.1, 1.0);
  auto unit_row = [&](Index n) {
    Vector v(n);
    do {
      for (Index j = 0; j < n; ++j) v(j) = normal(rng);
    } while (v.norm() < 1e-8);
    return Vector(v / v.norm());
  };

  // Scaled so that the spectrum of H^T Q H stays O(1) as m grows.
  const double dm = static_cast<double>(m);
  Matrix R(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) R(i, j) = normal(rng);
  Matrix Q = R.transpose() * R / dm + Matrix::Identity(m, m);
  Q = 0.5 * (Q + Q.transpose());
  Matrix H(m, p);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < p; ++j) H(i, j) = sym(rng) / std::sqrt(dm);
  Vector c(m), w(m);
  for (Index i = 0; i < m; ++i) c(i) = sym(rng);
  for (Index i = 0; i < m; ++i) w(i) = sym(rng);

  Matrix A(r + 2 * p, p);
  Vector b(r + 2 * p);
  for (Index i = 0; i < r; ++i) {
    A.row(i) = unit_row(p).transpose();
    b(i) = slack(rng);  // A_i u0 = 0 at u0 = 0
  }
  A.bottomRows(2 * p).setZero();
  for (Index j = 0; j < p; ++j) {
    A(r + 2 * j, j) = 1.0;
    A(r + 2 * j + 1, j) = -1.0;
    b(r + 2 * j) = 5.0;
    b(r + 2 * j + 1) = 5.0;
  }
  PolyhedralSet U(std::move(A), std::move(b), Vector::Zero(p));

  std::optional<StateConstraints> sc;
  if (s > 0) {
    StateConstraints x;
    x.A_x.resize(s, m);
    x.b_x.resize(s);
    for (Index i = 0; i < s; ++i) x.A_x.row(i) = unit_row(m).transpose();
    for (Index i = 0; i < s; ++i) x.b_x(i) = x.A_x.row(i).dot(w) + slack(rng);
    sc = std::move(x);
  }
  return QpInstance(std::move(Q), std::move(c), 0.0, std::move(H), std::move(w), std::move(U), std::move(sc));
}

Vector construct_awa_equilibrium(const FieldSpec& field, const Vector& pds_equilibrium) {
  field.validate();
  if (field.kind == FieldKind::kPenaltyGradient || field.kind == FieldKind::kAwSaddle) {
    throw Error(ErrorCode::kNotApplicable,
                "equilibrium construction needs a drift that depends on the projected state only");
  }
  const Vector& zbar = pds_equilibrium;
  const Vector f = pds_drift(field, zbar);
  const TangentCone cone = field.constraint_set().tangent_cone(zbar);
  const ObliqueResult pi = project_cone_oblique(cone, f, field.metric);
  const double stationarity = field.metric.norm(pi.tangent_part);
  if (stationarity > 1e-8) {
    throw Error(ErrorCode::kNotAnEquilibrium,
                "projected field residual " + std::to_string(stationarity) + " exceeds 1e-8");
  }
  const Vector z = zbar + field.gain_K * field.metric.apply(f);
  const FieldValue at = eval_field(field, z);
  const double residual = at.dz.norm();
  const double offset = (at.projected_state - zbar).norm();
  if (residual > 1e-10 || offset > 1e-10) {
    throw Error(ErrorCode::kResidualCheckFailed, "equilibrium residual " + std::to_string(residual) +
                                                     ", projection offset " + std::to_string(offset));
  }
  return z;
}

}  // namespace awpds
