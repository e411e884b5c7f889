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

#include <optional>
#include <string>
#include <string_view>

#include "awpds/flows.hpp"
#include "awpds/geometry.hpp"
#include "awpds/linalg.hpp"

namespace awpds {

enum class Scheme { kEuler, kRk4, kProjectedEuler, kObliqueEuler };

std::string_view to_string(Scheme scheme);
Scheme scheme_from_string(std::string_view name);

struct IntegratorConfig {
  Scheme scheme = Scheme::kEuler;
  double step_h = 1e-2;
  double horizon_T = 1.0;
  // (T, epsilon)-truncation: stop at the first sample outside center + epsilon B.
  std::optional<double> trunc_epsilon;
  std::optional<Vector> trunc_center;  // defaults to z0

  /// Throws InvalidArgument for nonpositive step/horizon or > 1e8 steps.
  void validate() const;
  Index step_count() const;
};

/// Largest explicit step admitted for an anti-windup field: 0.5 K / nu, with
/// nu the largest eigenvalue of G^{-1}.
double max_stable_step(const FieldSpec& field);

enum class Termination { kHorizonReached, kBallExit, kNonfiniteState };

std::string_view to_string(Termination termination);

/// Samples on the uniform grid t_k = k h. Row k of states/projected_states is
/// z_k and P_Z(z_k); the per-sample diagnostics are filled by every integrator.
struct Trajectory {
  Vector times;
  Matrix states;
  Matrix projected_states;
  Vector dist_to_set;
  Vector step_norms;   // ||z_k - z_{k-1}||, 0 at k = 0
  Vector drift_norms;  // ||f(z_k, P_Z z_k)||
  Vector field_norms;  // ||F_K(z_k)||
  Termination termination = Termination::kHorizonReached;
  double termination_time = 0.0;

  Scheme scheme = Scheme::kEuler;
  std::string field;
  double step_h = 0.0;
  double gain_K = 0.0;
  double mu = 1.0;  // smallest eigenvalue of G^{-1}
  double nu = 1.0;  // largest eigenvalue of G^{-1}
  bool has_diagnostics = false;

  Index size() const { return times.size(); }
  Index dimension() const { return states.cols(); }
  Vector state(Index k) const { return states.row(k).transpose(); }
  Vector projected(Index k) const { return projected_states.row(k).transpose(); }
  Vector final_state() const { return state(size() - 1); }
  Vector final_projected() const { return projected(size() - 1); }
};

/// Explicit Euler or RK4 on F_K. Throws StepTooLarge when h > max_stable_step.
Trajectory integrate_awa(const FieldSpec& field, const Vector& z0, const IntegratorConfig& cfg);

/// u_{k+1} = P_U(u_k + h f(u_k)), f the PDS drift of the field.
Trajectory integrate_pds_reference(const FieldSpec& field, const Vector& u0, const IntegratorConfig& cfg);

/// u_{k+1} = P_U(u_k + h Pi^G_{T_{u_k} U}[f(u_k)]) with G the field metric.
/// Every cone projection is checked against the Moreau contract.
Trajectory integrate_oblique_pds(const FieldSpec& field, const Vector& u0, const IntegratorConfig& cfg);

struct TubeReport {
  double M = 1.0;
  double mu = 1.0;
  double nu = 1.0;
  double gain_K = 0.0;
  double bound = 0.0;  // K M / mu
  double max_distance = 0.0;
  double max_distance_time = 0.0;
  bool violated = false;
  std::optional<double> exit_time;  // first sample with d_Z > bound
  Vector z0;
};

struct CounterexampleResult {
  Trajectory trajectory;
  TubeReport report;
  Trajectory control;  // same drift on the half-plane {z1 <= 0}
  TubeReport control_report;
};

/// Cusp set, f = (1, 0), G = I, z0 = (z01, 0) with d_Z(z0) = K.
CounterexampleResult run_counterexample(double kappa, double gain_K, const IntegratorConfig& cfg,
                                        MultiValuedPolicy policy = MultiValuedPolicy::kConvexAverage);

/// max_t d_Z <= K M / mu + C h, with M = max ||f|| and C = max ||F_K|| along the path.
struct TubeCheck {
  double max_distance = 0.0;
  double bound = 0.0;
  double M = 0.0;
  double C = 0.0;
  bool passed = false;
};

/// Per-step ||z_{k+1} - z_k|| / h <= (1 + nu / mu) M + 1e-6.
struct SpeedCheck {
  double max_speed = 0.0;
  double bound = 0.0;
  bool passed = false;
};

/// V_k = 1/2 ||z_k - z*||^2 with V_{k+1} - V_k <= 1e-10 + 1/2 h^2 ||F_K(z_k)||^2.
struct LyapunovCheck {
  double max_excess = 0.0;
  double final_value = 0.0;
  bool passed = false;
};

TubeCheck check_tube(const Trajectory& traj);
SpeedCheck check_speed(const Trajectory& traj);
LyapunovCheck check_lyapunov(const Trajectory& traj, const Vector& z_star);

/// Throws MissingDiagnostics unless the trajectory carries per-step data.
void require_diagnostics(const Trajectory& traj);

}  // namespace awpds
