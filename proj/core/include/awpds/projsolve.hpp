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
#include <vector>

#include "awpds/linalg.hpp"

namespace awpds {

/// Metric-weighted projection problem
///   minimize ||z - target||_G^2  subject to  A z <= b.
/// homogeneous marks cone problems (b == 0); they start from the origin and
/// skip the feasibility phase.
struct QpSpec {
  Metric metric;
  Vector target;
  Matrix A;
  Vector b;
  bool homogeneous = false;

  Index dimension() const { return target.size(); }
  Index constraint_count() const { return A.rows(); }

  /// Throws DimensionMismatch / NonfiniteValue on malformed data.
  void validate() const;

  static QpSpec cone(Metric metric, Vector target, Matrix A);
};

/// Minimizer with its KKT certificate G(z - t) + A^T y = 0, y >= 0,
/// y_i (A_i z - b_i) = 0.
struct QpSolution {
  Vector minimizer;
  Vector duals;
  std::vector<int> active_set;  // sorted constraint indices
  int iterations = 0;
  double kkt_residual = 0.0;
};

/// Previous solution used to seed the working set of the next solve.
struct WarmStart {
  Vector point;
  std::vector<int> working_set;
};

struct ActiveSetOptions {
  int max_iterations = 0;  // 0 selects 10 (n + r) + 50
  Tolerances tol = kTolerances;
};

/// Solution of the equality-constrained projection
///   G (z - target) + A_eq^T lambda = 0,  A_eq z = b_eq.
struct EqualityKktSolution {
  Vector z;
  Vector lambda;
};

/// Schur-complement solve through the Cholesky factor of G. Throws
/// RankDeficientError naming the largest-index dependent row.
EqualityKktSolution solve_kkt_equality(const Metric& metric, const Vector& target,
                                       const Matrix& a_eq, const Vector& b_eq,
                                       const Tolerances& tol = kTolerances);

/// Indices of rows kept when scanning rows in order and discarding every row
/// that is (numerically) in the span of the rows kept before it.
std::vector<int> independent_rows(const Metric& metric, const Matrix& rows,
                                  const Tolerances& tol = kTolerances);

/// Primal active-set method with Bland's smallest-index rule for both the
/// ratio test and the multiplier drop. Throws Infeasible, MaxIterations,
/// IllConditioned.
QpSolution solve_projection(const QpSpec& spec, const ActiveSetOptions& options = {},
                            const WarmStart* warm = nullptr);

/// Verification oracle: enumerates every active subset of size <= n, solves
/// the augmented KKT matrix by full-pivot LU, and keeps the feasible,
/// dual-feasible candidate with smallest objective. r <= 20.
QpSolution brute_force_projection(const QpSpec& spec, const Tolerances& tol = kTolerances);

/// Point in {A z <= b}, or nullopt when the region is empty.
std::optional<Vector> find_feasible_point(const Matrix& A, const Vector& b,
                                          const Tolerances& tol = kTolerances);

/// max of stationarity, primal violation, dual negativity and complementarity.
double projection_kkt_residual(const QpSpec& spec, const Vector& z, const Vector& duals);

}  // namespace awpds
