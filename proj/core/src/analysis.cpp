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
#include "awpds/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "awpds/error.hpp"

namespace awpds {

namespace {

void require_same_grid(const Trajectory& a, const Trajectory& b) {
  const double h = std::max(a.step_h, b.step_h);
  if (a.size() != b.size() || a.dimension() != b.dimension()) {
    throw Error(ErrorCode::kGridMismatch, "trajectories have " + std::to_string(a.size()) + " and " +
                                              std::to_string(b.size()) + " samples");
  }
  for (Index k = 0; k < a.size(); ++k) {
    if (std::abs(a.times(k) - b.times(k)) > 1e-9 * h) {
      throw Error(ErrorCode::kGridMismatch, "time grids differ at sample " + std::to_string(k));
    }
  }
}

}  // namespace

double sup_distance(const Trajectory& a, const Trajectory& b, bool use_projected) {
  require_same_grid(a, b);
  const Matrix& sa = use_projected ? a.projected_states : a.states;
  const Matrix& sb = use_projected ? b.projected_states : b.states;
  if (a.size() == 0) return 0.0;
  return (sa - sb).rowwise().norm().maxCoeff();
}

Trajectory restrict_to_grid(const Trajectory& fine, const Vector& times) {
  require_diagnostics(fine);
  const double h = fine.step_h;
  if (!(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "reference trajectory has no step size");
  std::vector<Index> idx;
  idx.reserve(times.size());
  for (Index k = 0; k < times.size(); ++k) {
    const double pos = times(k) / h;
    const Index j = static_cast<Index>(std::llround(pos));
    if (j < 0 || j >= fine.size() || std::abs(fine.times(j) - times(k)) > 1e-9 * h) {
      throw Error(ErrorCode::kGridMismatch, "time " + std::to_string(times(k)) + " is not on the reference grid");
    }
    idx.push_back(j);
  }
  Trajectory out = fine;
  const Index n = static_cast<Index>(idx.size());
  out.times = times;
  out.states.resize(n, fine.dimension());
  out.projected_states.resize(n, fine.dimension());
  out.dist_to_set.resize(n);
  out.step_norms.resize(n);
  out.drift_norms.resize(n);
  out.field_norms.resize(n);
  for (Index k = 0; k < n; ++k) {
    const Index j = idx[k];
    out.states.row(k) = fine.states.row(j);
    out.projected_states.row(k) = fine.projected_states.row(j);
    out.dist_to_set(k) = fine.dist_to_set(j);
    out.step_norms(k) = k == 0 ? 0.0 : (fine.states.row(j) - fine.states.row(idx[k - 1])).norm();
    out.drift_norms(k) = fine.drift_norms(j);
    out.field_norms(k) = fine.field_norms(j);
  }
  out.step_h = n > 1 ? times(1) - times(0) : fine.step_h;
  return out;
}

double SweepRule::step_for(const FieldSpec& field) const {
  return theta * field.gain_K / field.metric.inverse_max_eigenvalue();
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  const int workers = std::clamp(jobs, 1, count);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

void check_gains(const std::vector<double>& gains) {
  if (gains.empty()) throw Error(ErrorCode::kInvalidArgument, "no gains given");
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (!(gains[i] > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gains must be positive");
    if (i > 0 && !(gains[i] < gains[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "gains must be strictly decreasing");
    }
  }
}

bool monotone_within(const std::vector<double>& v, double factor) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > factor * v[i - 1]) return false;
  }
  return true;
}

}  // namespace

ConvergenceReport convergence_sweep(const FieldFactory& make_field, const Vector& z0,
                                    const std::vector<double>& gains, const SweepRule& rule) {
  check_gains(gains);
  ConvergenceReport rep;
  rep.gains = gains;
  const std::size_t n = gains.size();
  std::vector<FieldSpec> fields;
  fields.reserve(n);
  for (double k : gains) fields.push_back(make_field(k));

  const FieldSpec& finest = fields.back();
  rep.reference_step = rule.step_for(finest) / 10.0;
  IntegratorConfig ref_cfg;
  ref_cfg.step_h = rep.reference_step;
  ref_cfg.horizon_T = rule.horizon_T;
  const bool oblique = !finest.metric.is_identity();
  ref_cfg.scheme = oblique ? Scheme::kObliqueEuler : Scheme::kProjectedEuler;

  rep.trajectories.resize(n);
  // Cell 0 is the reference; cells 1..n are the AWA runs.
  parallel_for(static_cast<int>(n + 1), rule.jobs, [&](int cell) {
    if (cell == 0) {
      rep.reference = oblique ? integrate_oblique_pds(finest, z0, ref_cfg) : integrate_pds_reference(finest, z0, ref_cfg);
      return;
    }
    const FieldSpec& f = fields[static_cast<std::size_t>(cell - 1)];
    IntegratorConfig cfg;
    cfg.scheme = rule.scheme;
    cfg.step_h = rule.step_for(f);
    cfg.horizon_T = rule.horizon_T;
    rep.trajectories[static_cast<std::size_t>(cell - 1)] = integrate_awa(f, z0, cfg);
  });

  bool active = false;
  for (const Trajectory& t : rep.trajectories) {
    require_diagnostics(t);
    const Trajectory ref = restrict_to_grid(rep.reference, t.times);
    rep.sup_distances.push_back(sup_distance(t, ref, true));
    rep.raw_offsets.push_back((t.final_state() - ref.final_state()).norm());
    rep.projected_offsets.push_back((t.final_projected() - ref.final_state()).norm());
    rep.tube_passed.push_back(check_tube(t).passed);
    rep.speed_passed.push_back(check_speed(t).passed);
    active = active || t.dist_to_set.maxCoeff() > 0.0;
  }
  rep.monotone_flag = monotone_within(rep.sup_distances, 1.1);

  bool positive = true;
  for (double d : rep.sup_distances) positive = positive && d > 1e-14;
  rep.order_valid = active && positive && n >= 2;
  if (positive && n >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = std::log(gains[i]), y = std::log(rep.sup_distances[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double dn = static_cast<double>(n);
    rep.fitted_order = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
  }
  return rep;
}

ConvergenceReport convergence_sweep(std::shared_ptr<const QpInstance> instance, FieldKind kind,
                                    const std::vector<double>& gains, const SweepRule& rule) {
  if (!instance) throw Error(ErrorCode::kInvalidArgument, "null QP instance");
  FieldFactory make = [instance, kind](double k) {
    switch (kind) {
      case FieldKind::kPenaltyGradient: return FieldSpec::penalty_gradient(instance, k);
      case FieldKind::kAwGradient: return FieldSpec::aw_gradient(instance, k);
      case FieldKind::kAwNewton: return FieldSpec::aw_newton(instance, k);
      default: break;
    }
    throw Error(ErrorCode::kNotApplicable, "convergence sweeps need a gradient or Newton field");
  };
  return convergence_sweep(make, instance->input_set().witness(), gains, rule);
}

double equilibrium_residual(const FieldSpec& field, const Vector& z) { return eval_field(field, z).dz.norm(); }

double kkt_residual(const QpInstance& instance, const Vector& u, const Vector& duals_u,
                    const std::optional<Vector>& duals_x) {
  const PolyhedralSet& U = instance.input_set();
  if (u.size() != instance.input_dim() || duals_u.size() != U.constraint_count()) {
    throw Error(ErrorCode::kDimensionMismatch, "kkt_residual: u or duals_u has wrong size");
  }
  Vector stat = instance.reduced_gradient(u) + U.A().transpose() * duals_u;
  const Vector gu = U.A() * u - U.b();
  double res = gu.cwiseMax(0.0).maxCoeff();
  res = std::max(res, (-duals_u).cwiseMax(0.0).maxCoeff());
  res = std::max(res, duals_u.cwiseProduct(gu).cwiseAbs().maxCoeff());
  if (const auto& sc = instance.state_constraints()) {
    const Vector gx = sc->A_x * instance.steady_state(u) - sc->b_x;
    if (gx.size() > 0) res = std::max(res, gx.cwiseMax(0.0).maxCoeff());
    if (duals_x && duals_x->size() > 0) {
      if (duals_x->size() != gx.size()) throw Error(ErrorCode::kDimensionMismatch, "duals_x has wrong size");
      stat += instance.H().transpose() * (sc->A_x.transpose() * *duals_x);
      res = std::max(res, (-*duals_x).cwiseMax(0.0).maxCoeff());
      res = std::max(res, duals_x->cwiseProduct(gx).cwiseAbs().maxCoeff());
    }
  } else if (duals_x && duals_x->size() > 0) {
    throw Error(ErrorCode::kDimensionMismatch, "duals_x given but the instance has no state constraints");
  }
  return std::max(res, stat.norm());
}

Vector recover_input_duals(const QpInstance& instance, const Vector& ubar, const Vector& eta) {
  const PolyhedralSet& U = instance.input_set();
  const TangentCone cone = U.tangent_cone(ubar);
  Vector y = Vector::Zero(U.constraint_count());
  if (cone.is_full_space()) return y;
  const ObliqueResult res = project_cone_oblique(cone, eta, Metric::identity(ubar.size()));
  for (std::size_t i = 0; i < cone.active_indices.size(); ++i) {
    y(cone.active_indices[i]) = res.duals(static_cast<Index>(i));
  }
  return y;
}

double tail_offset(const Trajectory& traj, const Vector& target, bool use_projected) {
  require_diagnostics(traj);
  const Index n = traj.size();
  const Index tail = std::max<Index>(1, (n + 9) / 10);
  const Matrix& s = use_projected ? traj.projected_states : traj.states;
  return (s.bottomRows(tail).rowwise() - target.transpose()).rowwise().norm().maxCoeff();
}

StabilityEnvelope stability_envelope(const FieldFactory& make_field, const Vector& target,
                                     const std::vector<double>& gains, const std::vector<Vector>& initial_grid,
                                     const SweepRule& rule, std::string basin_description) {
  check_gains(gains);
  if (initial_grid.empty()) throw Error(ErrorCode::kInvalidArgument, "empty initial-condition grid");
  StabilityEnvelope env;
  env.gains = gains;
  env.basin_set = std::move(basin_description);
  const int ng = static_cast<int>(gains.size());
  const int ni = static_cast<int>(initial_grid.size());
  std::vector<double> cell(static_cast<std::size_t>(ng * ni), 0.0);
  parallel_for(ng * ni, rule.jobs, [&](int c) {
    const FieldSpec f = make_field(gains[static_cast<std::size_t>(c / ni)]);
    IntegratorConfig cfg;
    cfg.scheme = rule.scheme;
    cfg.step_h = rule.step_for(f);
    cfg.horizon_T = rule.horizon_T;
    const Trajectory t = integrate_awa(f, initial_grid[static_cast<std::size_t>(c % ni)], cfg);
    cell[static_cast<std::size_t>(c)] = tail_offset(t, target, true);
  });
  for (int g = 0; g < ng; ++g) {
    double worst = 0.0;
    for (int i = 0; i < ni; ++i) worst = std::max(worst, cell[static_cast<std::size_t>(g * ni + i)]);
    env.offsets_zeta.push_back(worst);
  }
  env.monotone_flag = monotone_within(env.offsets_zeta, 1.1);
  return env;
}

}  // namespace awpds
