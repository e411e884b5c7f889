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
#include "awpds/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "awpds/error.hpp"

namespace awpds {

Metric::Metric(Matrix g) : Metric(std::move(g), false) {}

Metric::Metric(Matrix g, bool identity) : g_(std::move(g)), identity_(identity) {
  if (g_.rows() != g_.cols() || g_.rows() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "metric must be a nonempty square matrix");
  }
  if (!g_.allFinite()) {
    throw Error(ErrorCode::kNonfiniteValue, "metric has nonfinite entries");
  }
  const double asym = (g_ - g_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kTolerances.symmetry * std::max(1.0, g_.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::kInvalidArgument,
                "metric not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
  if (identity_) {
    llt_.compute(g_);
    return;
  }
  llt_.compute(g_);
  if (llt_.info() != Eigen::Success) {
    throw Error(ErrorCode::kIllConditioned, "metric is not positive definite");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g_, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::kEigenFailure, "metric eigen-decomposition failed");
  }
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) {
    throw Error(ErrorCode::kIllConditioned, "metric is not positive definite");
  }
  inv_min_eig_ = 1.0 / hi;
  inv_max_eig_ = 1.0 / lo;
}

Metric Metric::identity(Index n) { return Metric(Matrix::Identity(n, n), true); }

double Metric::inner(const Vector& a, const Vector& b) const {
  if (identity_) return a.dot(b);
  return a.dot(g_ * b);
}

double Metric::squared_norm(const Vector& a) const { return inner(a, a); }

double Metric::norm(const Vector& a) const { return std::sqrt(std::max(0.0, squared_norm(a))); }

Vector Metric::apply(const Vector& v) const {
  if (identity_) return v;
  return g_ * v;
}

Vector Metric::solve(const Vector& v) const {
  if (identity_) return v;
  return llt_.solve(v);
}

Vector Metric::solve_lower(const Vector& v) const {
  if (identity_) return v;
  return llt_.matrixL().solve(v);
}

Matrix Metric::solve_lower(const Matrix& m) const {
  if (identity_) return m;
  return llt_.matrixL().solve(m);
}

Vector Metric::solve_upper(const Vector& v) const {
  if (identity_) return v;
  return llt_.matrixU().solve(v);
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace awpds
