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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "awpds/dynamics.hpp"
#include "awpds/flows.hpp"
#include "awpds/linalg.hpp"

namespace awpds {

/// max_k ||a_k - b_k|| over a shared uniform grid; projected states when
/// use_projected. Throws GridMismatch when the grids differ.
double sup_distance(const Trajectory& a, const Trajectory& b, bool use_projected = true);

/// Samples of a finer trajectory at the instants of a coarser grid.
/// Throws GridMismatch unless every coarse instant is a fine sample within
/// 1e-9 h.
Trajectory restrict_to_grid(const Trajectory& fine, const Vector& times);

/// Maps K to the field integrated in a sweep.
using FieldFactory = std::function<FieldSpec(double gain_K)>;

/// h = theta K / nu, nu the largest eigenvalue of G^{-1}; nu = 1 for G = I.
struct SweepRule {
  double theta = 0.1;
  double horizon_T = 10.0;
  Scheme scheme = Scheme::kEuler;
  int jobs = 1;

  double step_for(const FieldSpec& field) const;
};

struct ConvergenceReport {
  std::vector<double> gains;
  std::vector<double> sup_distances;      // projected AWA vs PDS reference
  std::vector<double> raw_offsets;        // ||z_K(T) - u_ref(T)||
  std::vector<double> projected_offsets;  // ||P_Z z_K(T) - u_ref(T)||
  std::vector<bool> tube_passed;
  std::vector<bool> speed_passed;
  double fitted_order = 0.0;  // slope of log sup_distance against log K
  bool order_valid = false;   // false when the projection never acts
  bool monotone_flag = false; // d_{i+1} <= 1.1 d_i
  double reference_step = 0.0;
  Trajectory reference;
  std::vector<Trajectory> trajectories;
};

/// Fine PDS reference at min_h / 10 (oblique when G != I), one AWA run per
/// gain, all from z0 in Z. gains must be strictly decreasing.
ConvergenceReport convergence_sweep(const FieldFactory& make_field, const Vector& z0,
                                    const std::vector<double>& gains, const SweepRule& rule);

/// Instance form; z0 = the witness of U.
ConvergenceReport convergence_sweep(std::shared_ptr<const QpInstance> instance, FieldKind kind,
                                    const std::vector<double>& gains, const SweepRule& rule);

/// ||F_K(z)||.
double equilibrium_residual(const FieldSpec& field, const Vector& z);

/// max of stationarity, primal infeasibility, dual negativity and
/// complementarity gaps of the steady-state QP. Duals refer to the
/// normalized rows stored in the instance.
double kkt_residual(const QpInstance& instance, const Vector& u, const Vector& duals_u,
                    const std::optional<Vector>& duals_x = std::nullopt);

/// Multipliers y >= 0 on the rows of U with A_u^T y = eta, read off the
/// projection of eta onto the tangent cone at ubar. Entries of inactive rows
/// are zero.
Vector recover_input_duals(const QpInstance& instance, const Vector& ubar, const Vector& eta);

struct StabilityEnvelope {
  std::vector<double> gains;
  std::vector<double> offsets_zeta;  // per K, max over initial points
  std::string basin_set;
  bool monotone_flag = false;
};

/// Tail offset sup over the last 10% of samples of ||P_Z z(t) - target||.
double tail_offset(const Trajectory& traj, const Vector& target, bool use_projected = true);

StabilityEnvelope stability_envelope(const FieldFactory& make_field, const Vector& target,
                                     const std::vector<double>& gains, const std::vector<Vector>& initial_grid,
                                     const SweepRule& rule, std::string basin_description = {});

/// Runs fn(i) for i in [0, count) on up to jobs threads. Exceptions are
/// rethrown in index order after all workers finish.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

}  // namespace awpds
