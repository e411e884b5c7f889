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

#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "awpds/linalg.hpp"
#include "awpds/projsolve.hpp"

namespace awpds {

/// Nearest point(s) of a closed set. candidates holds every nearest point in
/// lexicographic order; nearest is candidates.front().
struct ProjectionResult {
  Vector nearest;
  double distance = 0.0;
  bool unique = true;
  std::vector<Vector> candidates;
};

/// Reusable working-set hint for repeated projections along a trajectory.
/// Owned by the caller; never shared between threads.
struct ProjectionHint {
  std::optional<WarmStart> warm;
};

/// Active constraint rows at a base point; the cone is {v | rows v <= 0}.
struct TangentCone {
  Vector base_point;
  Matrix generators_matrix;
  std::vector<int> active_indices;

  Index dimension() const { return base_point.size(); }
  bool is_full_space() const { return active_indices.empty(); }
};

/// Tangent-cone projection Pi^G[w] = tangent_part and w = tangent_part + normal_part.
struct ObliqueResult {
  Vector tangent_part;
  Vector normal_part;
  Vector duals;
};

/// Closed subset of R^n with a (selection of the) Euclidean projection.
class ConstraintSet {
 public:
  virtual ~ConstraintSet() = default;

  virtual Index dimension() const = 0;
  virtual bool is_convex() const = 0;
  virtual bool contains(const Vector& point, double tol = kTolerances.feasibility) const = 0;
  virtual ProjectionResult project(const Vector& point, ProjectionHint* hint = nullptr) const = 0;

  /// Throws NotApplicable for sets without polyhedral structure.
  virtual TangentCone tangent_cone(const Vector& point, double activity_tol = kTolerances.activity) const;

  double distance(const Vector& point, ProjectionHint* hint = nullptr) const;
};

/// {v | A v <= b} with unit-norm rows and a stored interior-or-boundary witness.
class PolyhedralSet final : public ConstraintSet {
 public:
  /// Normalizes rows (zero rows are rejected) and computes a witness.
  /// Throws Infeasible if the region is empty.
  PolyhedralSet(Matrix A, Vector b);
  PolyhedralSet(Matrix A, Vector b, Vector witness);

  static PolyhedralSet whole_space(Index n);
  static PolyhedralSet box(const Vector& lower, const Vector& upper);
  static PolyhedralSet nonnegative_orthant(Index n);

  const Matrix& A() const { return a_; }
  const Vector& b() const { return b_; }
  const Vector& witness() const { return witness_; }
  Index constraint_count() const { return a_.rows(); }

  Index dimension() const override { return a_.cols(); }
  bool is_convex() const override { return true; }
  bool contains(const Vector& point, double tol = kTolerances.feasibility) const override;
  ProjectionResult project(const Vector& point, ProjectionHint* hint = nullptr) const override;
  TangentCone tangent_cone(const Vector& point, double activity_tol = kTolerances.activity) const override;

  /// Projection with its KKT certificate (duals refer to normalized rows).
  QpSolution project_with_certificate(const Vector& point, ProjectionHint* hint = nullptr) const;

  /// True iff the recession cone {v | A v <= 0} is {0}.
  bool is_bounded() const;

 private:
  PolyhedralSet(Matrix A, Vector b, std::optional<Vector> witness, bool normalize);

  Matrix a_;
  Vector b_;
  Vector witness_;
};

/// R^free_dims x U; the projection is the identity on the leading free block.
class ProductSet final : public ConstraintSet {
 public:
  ProductSet(Index free_dims, PolyhedralSet constrained);

  Index free_dims() const { return free_dims_; }
  const PolyhedralSet& constrained() const { return constrained_; }

  Index dimension() const override { return free_dims_ + constrained_.dimension(); }
  bool is_convex() const override { return true; }
  bool contains(const Vector& point, double tol = kTolerances.feasibility) const override;
  ProjectionResult project(const Vector& point, ProjectionHint* hint = nullptr) const override;
  TangentCone tangent_cone(const Vector& point, double activity_tol = kTolerances.activity) const override;

 private:
  Index free_dims_;
  PolyhedralSet constrained_;
};

/// {(z1, z2) | |z2| >= max(0, z1)^kappa}, 1/2 < kappa < 1. Closed but not
/// prox-regular at the origin: every (t, 0) with t > 0 has two nearest points.
class KappaCuspSet final : public ConstraintSet {
 public:
  explicit KappaCuspSet(double kappa);

  double kappa() const { return kappa_; }

  Index dimension() const override { return 2; }
  bool is_convex() const override { return false; }
  bool contains(const Vector& point, double tol = 1e-12) const override;
  ProjectionResult project(const Vector& point, ProjectionHint* hint = nullptr) const override;

 private:
  double kappa_;
};

/// Pi^G_{T}[w]: argmin over {v | A_act v <= 0} of ||v - w||_G.
ObliqueResult project_cone_oblique(const TangentCone& cone, const Vector& w, const Metric& metric);

/// Generators of a polyhedral cone whose active rows are linearly independent:
/// the columns of -A^+ (pointed part) plus +-basis of null(A) (lineality).
/// Returns nullopt when the active rows are dependent.
std::optional<std::vector<Vector>> cone_extreme_rays(const TangentCone& cone);

/// Random unit tangent vectors: Euclidean projections of Gaussian samples.
std::vector<Vector> sample_cone_rays(const TangentCone& cone, int count, std::mt19937_64& rng);

/// eta in N^G_x C, i.e. <eta, v>_G <= tol for every generator v of T_x C
/// (generators scaled to unit G-norm). Degenerate cones fall back to the
/// equivalent test ||Pi^G_T[eta]||_G <= tol.
bool normal_cone_membership(const ConstraintSet& set, const Vector& point, const Vector& eta,
                            const Metric& metric, double tol = 1e-8);

/// Residuals of the tangent/normal decomposition of w.
struct MoreauCheck {
  double orthogonality = 0.0;      // |<tangent, normal>_G| / max(1, ||w||_G^2)
  double norm_excess = 0.0;        // ||normal||_G - ||w||_G
  double polar_violation = 0.0;    // max over rays of <normal, v>_G, unit rays
  bool passed(double orth_tol = 1e-8, double norm_tol = 1e-10, double polar_tol = 1e-8) const {
    return orthogonality <= orth_tol && norm_excess <= norm_tol && polar_violation <= polar_tol;
  }
};

MoreauCheck check_moreau_decomposition(const TangentCone& cone, const Vector& w, const Metric& metric,
                                       const ObliqueResult& result, const std::vector<Vector>& rays);

}  // namespace awpds
