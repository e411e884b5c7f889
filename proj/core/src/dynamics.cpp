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

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "awpds/error.hpp"

namespace awpds {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kEuler: return "euler";
    case Scheme::kRk4: return "rk4";
    case Scheme::kProjectedEuler: return "projected_euler";
    case Scheme::kObliqueEuler: return "oblique_euler";
  }
  return "unknown";
}

Scheme scheme_from_string(std::string_view name) {
  for (Scheme s : {Scheme::kEuler, Scheme::kRk4, Scheme::kProjectedEuler, Scheme::kObliqueEuler}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown scheme '" + std::string(name) + "'");
}

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::kHorizonReached: return "horizon_reached";
    case Termination::kBallExit: return "ball_exit";
    case Termination::kNonfiniteState: return "nonfinite_state";
  }
  return "unknown";
}

void IntegratorConfig::validate() const {
  if (!(step_h > 0.0) || !std::isfinite(step_h)) throw Error(ErrorCode::kInvalidArgument, "step h must be positive");
  if (!(horizon_T > 0.0) || !std::isfinite(horizon_T)) {
    throw Error(ErrorCode::kInvalidArgument, "horizon T must be positive");
  }
  if (horizon_T / step_h > 1e8) throw Error(ErrorCode::kInvalidArgument, "more than 1e8 steps requested");
  if (trunc_epsilon && !(*trunc_epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "truncation radius must be positive");
  }
}

Index IntegratorConfig::step_count() const {
  // Tolerate T/h landing a few ulps below an integer.
  return static_cast<Index>(std::floor(horizon_T / step_h * (1.0 + 1e-12)));
}

double max_stable_step(const FieldSpec& field) { return 0.5 * field.gain_K / field.metric.inverse_max_eigenvalue(); }

namespace {

// Accumulates samples and packs them into a Trajectory.
class Recorder {
 public:
  void add(const Vector& z, const Vector& zbar, double dist, double step, double drift, double field) {
    states_.push_back(z);
    projected_.push_back(zbar);
    dist_.push_back(dist);
    step_.push_back(step);
    drift_.push_back(drift);
    field_.push_back(field);
  }

  Index size() const { return static_cast<Index>(states_.size()); }

  Trajectory finish(double h) const {
    const Index n = size();
    const Index dim = n > 0 ? states_.front().size() : 0;
    Trajectory t;
    t.times.resize(n);
    t.states.resize(n, dim);
    t.projected_states.resize(n, dim);
    t.dist_to_set.resize(n);
    t.step_norms.resize(n);
    t.drift_norms.resize(n);
    t.field_norms.resize(n);
    for (Index k = 0; k < n; ++k) {
      t.times(k) = static_cast<double>(k) * h;
      t.states.row(k) = states_[k].transpose();
      t.projected_states.row(k) = projected_[k].transpose();
      t.dist_to_set(k) = dist_[k];
      t.step_norms(k) = step_[k];
      t.drift_norms(k) = drift_[k];
      t.field_norms(k) = field_[k];
    }
    t.step_h = h;
    t.has_diagnostics = true;
    t.termination_time = n > 0 ? t.times(n - 1) : 0.0;
    return t;
  }

 private:
  std::vector<Vector> states_, projected_;
  std::vector<double> dist_, step_, drift_, field_;
};

void stamp(Trajectory& t, const FieldSpec& field, Scheme scheme) {
  t.scheme = scheme;
  t.field = std::string(to_string(field.kind));
  t.gain_K = field.gain_K;
  t.mu = field.metric.inverse_min_eigenvalue();
  t.nu = field.metric.inverse_max_eigenvalue();
}

// Post-step ball-exit test; returns the interpolated crossing time.
std::optional<double> ball_exit(const IntegratorConfig& cfg, const Vector& center, const Vector& prev,
                                const Vector& next, double t_prev) {
  if (!cfg.trunc_epsilon) return std::nullopt;
  const double eps = *cfg.trunc_epsilon;
  const double r1 = (next - center).norm();
  if (r1 < eps) return std::nullopt;
  const double r0 = (prev - center).norm();
  const double frac = r1 > r0 ? std::clamp((eps - r0) / (r1 - r0), 0.0, 1.0) : 1.0;
  return t_prev + frac * cfg.step_h;
}

}  // namespace

Trajectory integrate_awa(const FieldSpec& field, const Vector& z0, const IntegratorConfig& cfg) {
  field.validate();
  cfg.validate();
  if (cfg.scheme != Scheme::kEuler && cfg.scheme != Scheme::kRk4) {
    throw Error(ErrorCode::kInvalidArgument, "anti-windup integration needs the euler or rk4 scheme");
  }
  if (z0.size() != field.state_dimension()) throw Error(ErrorCode::kDimensionMismatch, "z0 has wrong dimension");
  if (!z0.allFinite()) throw Error(ErrorCode::kNonfiniteValue, "z0 is not finite");
  const double h = cfg.step_h;
  const double h_max = max_stable_step(field);
  if (h > h_max * (1.0 + 1e-12)) {
    throw Error(ErrorCode::kStepTooLarge,
                "step " + std::to_string(h) + " exceeds the stability bound 0.5 K / nu = " + std::to_string(h_max));
  }
  const Vector center = cfg.trunc_center.value_or(z0);
  const Index steps = cfg.step_count();

  ProjectionHint hint;
  Recorder rec;
  Vector z = z0;
  enforce_dual_nonnegativity(field, z);
  FieldValue fv = eval_field(field, z, &hint);
  rec.add(z, fv.projected_state, fv.distance, 0.0, fv.drift.norm(), fv.dz.norm());

  Termination term = Termination::kHorizonReached;
  double term_time = 0.0;
  for (Index k = 0; k < steps; ++k) {
    Vector next;
    try {
      if (cfg.scheme == Scheme::kEuler) {
        next = z + h * fv.dz;
      } else {
        const Vector k1 = fv.dz;
        const Vector k2 = eval_field(field, z + 0.5 * h * k1, &hint).dz;
        const Vector k3 = eval_field(field, z + 0.5 * h * k2, &hint).dz;
        const Vector k4 = eval_field(field, z + h * k3, &hint).dz;
        next = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      enforce_dual_nonnegativity(field, next);
      if (!next.allFinite()) throw Error(ErrorCode::kNonfiniteValue, "state diverged");
      fv = eval_field(field, next, &hint);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonfiniteValue) throw;
      term = Termination::kNonfiniteState;
      term_time = static_cast<double>(k + 1) * h;
      break;
    }
    rec.add(next, fv.projected_state, fv.distance, (next - z).norm(), fv.drift.norm(), fv.dz.norm());
    const std::optional<double> exit = ball_exit(cfg, center, z, next, static_cast<double>(k) * h);
    z = std::move(next);
    if (exit) {
      term = Termination::kBallExit;
      term_time = *exit;
      break;
    }
  }
  Trajectory t = rec.finish(h);
  stamp(t, field, cfg.scheme);
  t.termination = term;
  if (term != Termination::kHorizonReached) t.termination_time = term_time;
  return t;
}

namespace {

enum class PdsDirection { kEuclidean, kOblique };

Trajectory integrate_projected(const FieldSpec& field, const Vector& u0, const IntegratorConfig& cfg,
                               PdsDirection direction) {
  field.validate();
  cfg.validate();
  const ConstraintSet& set = field.constraint_set();
  if (u0.size() != set.dimension()) throw Error(ErrorCode::kDimensionMismatch, "u0 has wrong dimension");
  if (!set.contains(u0, kTolerances.feasibility)) {
    throw Error(ErrorCode::kInitialPointInfeasible, "PDS reference must start inside the constraint set");
  }
  const double h = cfg.step_h;
  const Index steps = cfg.step_count();
  const Vector center = cfg.trunc_center.value_or(u0);

  ProjectionHint hint;
  Recorder rec;
  Vector u = u0;
  auto direction_at = [&](const Vector& x, Vector& f_out) {
    f_out = pds_drift(field, x);
    if (direction == PdsDirection::kEuclidean) return f_out;
    const TangentCone cone = set.tangent_cone(x);
    const ObliqueResult res = project_cone_oblique(cone, f_out, field.metric);
    const std::optional<std::vector<Vector>> rays = cone_extreme_rays(cone);
    const MoreauCheck mc =
        check_moreau_decomposition(cone, f_out, field.metric, res, rays.value_or(std::vector<Vector>{}));
    if (!mc.passed()) throw Error(ErrorCode::kNumericalFailure, "oblique cone projection failed the Moreau check");
    return res.tangent_part;
  };

  // The oblique scheme re-projects in the metric G: a Euclidean re-projection
  // of an oblique step can stall next to a face that is not yet active.
  const auto* poly = dynamic_cast<const PolyhedralSet*>(&set);
  const bool metric_reprojection = direction == PdsDirection::kOblique && poly && !field.metric.is_identity();
  std::optional<WarmStart> warm;
  auto reproject = [&](const Vector& x) -> Vector {
    if (!metric_reprojection) return set.project(x, &hint).nearest;
    const QpSpec spec{field.metric, x, poly->A(), poly->b(), false};
    const WarmStart start = warm.value_or(WarmStart{poly->witness(), {}});
    QpSolution sol = solve_projection(spec, {}, &start);
    warm = WarmStart{sol.minimizer, sol.active_set};
    return sol.minimizer;
  };

  Vector f;
  Vector dir = direction_at(u, f);
  rec.add(u, u, 0.0, 0.0, f.norm(), dir.norm());
  Termination term = Termination::kHorizonReached;
  double term_time = 0.0;
  for (Index k = 0; k < steps; ++k) {
    Vector next = reproject(u + h * dir);
    if (!next.allFinite()) {
      term = Termination::kNonfiniteState;
      term_time = static_cast<double>(k + 1) * h;
      break;
    }
    dir = direction_at(next, f);
    rec.add(next, next, 0.0, (next - u).norm(), f.norm(), dir.norm());
    const std::optional<double> exit = ball_exit(cfg, center, u, next, static_cast<double>(k) * h);
    u = std::move(next);
    if (exit) {
      term = Termination::kBallExit;
      term_time = *exit;
      break;
    }
  }
  Trajectory t = rec.finish(h);
  stamp(t, field, direction == PdsDirection::kEuclidean ? Scheme::kProjectedEuler : Scheme::kObliqueEuler);
  t.termination = term;
  if (term != Termination::kHorizonReached) t.termination_time = term_time;
  return t;
}

}  // namespace

Trajectory integrate_pds_reference(const FieldSpec& field, const Vector& u0, const IntegratorConfig& cfg) {
  return integrate_projected(field, u0, cfg, PdsDirection::kEuclidean);
}

Trajectory integrate_oblique_pds(const FieldSpec& field, const Vector& u0, const IntegratorConfig& cfg) {
  return integrate_projected(field, u0, cfg, PdsDirection::kOblique);
}

namespace {

TubeReport tube_report(const Trajectory& t, double gain_K, const Vector& z0) {
  TubeReport r;
  r.gain_K = gain_K;
  r.bound = gain_K * r.M / r.mu;
  r.z0 = z0;
  // Margin for the rounding in d_Z(z0) = K.
  const double threshold = r.bound + 1e-9;
  for (Index k = 0; k < t.size(); ++k) {
    const double d = t.dist_to_set(k);
    if (d > r.max_distance) {
      r.max_distance = d;
      r.max_distance_time = t.times(k);
    }
    if (!r.exit_time && d > threshold) r.exit_time = t.times(k);
  }
  r.violated = r.exit_time.has_value();
  return r;
}

}  // namespace

CounterexampleResult run_counterexample(double kappa, double gain_K, const IntegratorConfig& cfg,
                                        MultiValuedPolicy policy) {
  auto cusp = std::make_shared<KappaCuspSet>(kappa);
  const CustomDrift unit_drift = [](const Vector&, const Vector&) { return Vector(Vector::Unit(2, 0)); };
  FieldSpec field = FieldSpec::custom(cusp, Metric::identity(2), gain_K, unit_drift);
  field.policy = policy;

  // d_Z((t, 0)) grows with t; bracket and bisect for d_Z = K.
  auto dist_at = [&](double t) {
    Vector p(2);
    p << t, 0.0;
    return cusp->distance(p);
  };
  double lo = 0.0, hi = gain_K;
  while (dist_at(hi) < gain_K) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dist_at(mid) < gain_K ? lo : hi) = mid;
  }
  Vector z0(2);
  z0 << 0.5 * (lo + hi), 0.0;

  CounterexampleResult out;
  IntegratorConfig c = cfg;
  c.scheme = cfg.scheme == Scheme::kRk4 ? Scheme::kRk4 : Scheme::kEuler;
  out.trajectory = integrate_awa(field, z0, c);
  out.report = tube_report(out.trajectory, gain_K, z0);

  Matrix a(1, 2);
  a << 1.0, 0.0;
  auto half_plane = std::make_shared<PolyhedralSet>(a, Vector::Zero(1));
  FieldSpec control = FieldSpec::custom(half_plane, Metric::identity(2), gain_K, unit_drift);
  Vector zc(2);
  zc << gain_K, 0.0;
  out.control = integrate_awa(control, zc, c);
  out.control_report = tube_report(out.control, gain_K, zc);
  return out;
}

void require_diagnostics(const Trajectory& traj) {
  const Index n = traj.size();
  if (!traj.has_diagnostics || n == 0 || traj.dist_to_set.size() != n || traj.step_norms.size() != n ||
      traj.drift_norms.size() != n || traj.field_norms.size() != n || traj.projected_states.rows() != n) {
    throw Error(ErrorCode::kMissingDiagnostics, "trajectory lacks per-step diagnostics");
  }
}

TubeCheck check_tube(const Trajectory& traj) {
  require_diagnostics(traj);
  TubeCheck c;
  c.max_distance = traj.dist_to_set.maxCoeff();
  c.M = traj.drift_norms.maxCoeff();
  c.C = traj.field_norms.maxCoeff();
  c.bound = traj.gain_K * c.M / traj.mu + c.C * traj.step_h;
  c.passed = c.max_distance <= c.bound;
  return c;
}

SpeedCheck check_speed(const Trajectory& traj) {
  require_diagnostics(traj);
  SpeedCheck c;
  const double M = traj.drift_norms.maxCoeff();
  c.max_speed = traj.step_norms.maxCoeff() / traj.step_h;
  c.bound = (1.0 + traj.nu / traj.mu) * M + 1e-6;
  c.passed = c.max_speed <= c.bound;
  return c;
}

LyapunovCheck check_lyapunov(const Trajectory& traj, const Vector& z_star) {
  require_diagnostics(traj);
  if (z_star.size() != traj.dimension()) throw Error(ErrorCode::kDimensionMismatch, "z* has wrong dimension");
  LyapunovCheck c;
  double v_prev = 0.5 * (traj.state(0) - z_star).squaredNorm();
  c.max_excess = -std::numeric_limits<double>::infinity();
  for (Index k = 1; k < traj.size(); ++k) {
    const double v = 0.5 * (traj.state(k) - z_star).squaredNorm();
    const double slack = 1e-10 + 0.5 * traj.step_h * traj.step_h * traj.field_norms(k - 1) * traj.field_norms(k - 1);
    c.max_excess = std::max(c.max_excess, v - v_prev - slack);
    v_prev = v;
  }
  if (traj.size() < 2) c.max_excess = 0.0;
  c.final_value = v_prev;
  c.passed = c.max_excess <= 0.0;
  return c;
}

}  // namespace awpds
