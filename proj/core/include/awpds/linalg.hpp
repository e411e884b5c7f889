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

#include <Eigen/Dense>

namespace awpds {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Numerical tolerances shared by every module. Values are absolute unless
/// noted; constraint rows are unit-normalized before any activity test, so an
/// absolute activity tolerance is a geometric distance.
struct Tolerances {
  double feasibility = 1e-9;    // A z <= b + feasibility
  double activity = 1e-8;       // A_i z - b_i >= -activity  =>  i active
  double symmetry = 1e-12;      // |G - G^T| for metrics
  double dual = 1e-10;          // multipliers below -dual are negative
  double rank = 1e-10;          // relative pivot threshold of rank tests
  double step = 1e-13;          // relative size of a vanishing primal step
  double cusp_bisection = 1e-12;
  int cusp_grid_points = 1024;
};

inline constexpr Tolerances kTolerances{};

/// Constant symmetric positive-definite metric G with <a, b>_G = a^T G b.
/// Holds the Cholesky factor and the spectral bounds of G^{-1}.
class Metric {
 public:
  /// Throws InvalidArgument if G is not square/symmetric and IllConditioned
  /// if the Cholesky factorization fails.
  explicit Metric(Matrix g);

  static Metric identity(Index n);

  Index dimension() const { return g_.rows(); }
  const Matrix& matrix() const { return g_; }
  bool is_identity() const { return identity_; }

  double inner(const Vector& a, const Vector& b) const;
  double norm(const Vector& a) const;
  double squared_norm(const Vector& a) const;

  Vector apply(const Vector& v) const;          // G v
  Vector solve(const Vector& v) const;          // G^{-1} v
  Vector solve_lower(const Vector& v) const;    // L^{-1} v, G = L L^T
  Matrix solve_lower(const Matrix& m) const;
  Vector solve_upper(const Vector& v) const;    // L^{-T} v

  /// mu and nu with mu I <= G^{-1} <= nu I.
  double inverse_min_eigenvalue() const { return inv_min_eig_; }
  double inverse_max_eigenvalue() const { return inv_max_eig_; }

 private:
  Metric(Matrix g, bool identity);

  Matrix g_;
  Eigen::LLT<Matrix> llt_;
  bool identity_ = false;
  double inv_min_eig_ = 1.0;
  double inv_max_eig_ = 1.0;
};

bool all_finite(const Vector& v);

}  // namespace awpds
