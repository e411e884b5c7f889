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
#include "awpds/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "awpds/error.hpp"

namespace awpds {

namespace {

bool lex_less(const Vector& a, const Vector& b) {
  for (Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return false;
}

ProjectionResult single(const Vector& point, Vector nearest) {
  ProjectionResult res;
  res.distance = (point - nearest).norm();
  res.nearest = nearest;
  res.candidates.push_back(std::move(nearest));
  return res;
}

}  // namespace

TangentCone ConstraintSet::tangent_cone(const Vector&, double) const {
  throw Error(ErrorCode::kNotApplicable, "tangent cones are only available for polyhedral sets");
}

double ConstraintSet::distance(const Vector& point, ProjectionHint* hint) const {
  return project(point, hint).distance;
}

// ---------------------------------------------------------------------------
// PolyhedralSet

PolyhedralSet::PolyhedralSet(Matrix A, Vector b) : PolyhedralSet(std::move(A), std::move(b), std::nullopt, true) {}

PolyhedralSet::PolyhedralSet(Matrix A, Vector b, Vector witness)
    : PolyhedralSet(std::move(A), std::move(b), std::optional<Vector>(std::move(witness)), true) {}

PolyhedralSet::PolyhedralSet(Matrix A, Vector b, std::optional<Vector> witness, bool normalize)
    : a_(std::move(A)), b_(std::move(b)) {
  if (a_.rows() != b_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "polyhedron: " + std::to_string(a_.rows()) + " rows but " +
                                                   std::to_string(b_.size()) + " offsets");
  }
  if (!a_.allFinite() || !b_.allFinite()) throw Error(ErrorCode::kNonfiniteValue, "polyhedron data not finite");
  if (normalize) {
    for (Index i = 0; i < a_.rows(); ++i) {
      const double nrm = a_.row(i).norm();
      if (!(nrm > 1e-300)) {
        throw Error(ErrorCode::kInvalidArgument, "polyhedron row " + std::to_string(i) + " is zero");
      }
      a_.row(i) /= nrm;
      b_(i) /= nrm;
    }
  }
  if (witness) {
    if (witness->size() != a_.cols()) throw Error(ErrorCode::kDimensionMismatch, "witness has wrong dimension");
    if (!contains(*witness, 10 * kTolerances.feasibility)) {
      throw Error(ErrorCode::kInvalidArgument, "supplied witness is not in the polyhedron");
    }
    witness_ = std::move(*witness);
  } else {
    auto found = find_feasible_point(a_, b_);
    if (!found) throw Error(ErrorCode::kInfeasible, "polyhedron is empty");
    witness_ = std::move(*found);
  }
}

PolyhedralSet PolyhedralSet::whole_space(Index n) {
  return PolyhedralSet(Matrix(0, n), Vector(0), std::optional<Vector>(Vector::Zero(n)), false);
}

PolyhedralSet PolyhedralSet::box(const Vector& lower, const Vector& upper) {
  const Index n = lower.size();
  if (upper.size() != n) throw Error(ErrorCode::kDimensionMismatch, "box bounds differ in length");
  Matrix a = Matrix::Zero(2 * n, n);
  Vector b(2 * n);
  for (Index i = 0; i < n; ++i) {
    if (!(lower(i) <= upper(i))) throw Error(ErrorCode::kInfeasible, "box lower bound exceeds upper bound");
    a(2 * i, i) = 1.0;
    b(2 * i) = upper(i);
    a(2 * i + 1, i) = -1.0;
    b(2 * i + 1) = -lower(i);
  }
  return PolyhedralSet(std::move(a), std::move(b), std::optional<Vector>(0.5 * (lower + upper)), false);
}

PolyhedralSet PolyhedralSet::nonnegative_orthant(Index n) {
  return PolyhedralSet(-Matrix::Identity(n, n), Vector::Zero(n), std::optional<Vector>(Vector::Zero(n)), false);
}

bool PolyhedralSet::contains(const Vector& point, double tol) const {
  if (point.size() != dimension()) throw Error(ErrorCode::kDimensionMismatch, "point has wrong dimension");
  if (a_.rows() == 0) return true;
  return (a_ * point - b_).maxCoeff() <= tol;
}

QpSolution PolyhedralSet::project_with_certificate(const Vector& point, ProjectionHint* hint) const {
  if (point.size() != dimension()) throw Error(ErrorCode::kDimensionMismatch, "point has wrong dimension");
  QpSpec spec{Metric::identity(dimension()), point, a_, b_, false};
  WarmStart fallback{witness_, {}};
  const WarmStart* warm = (hint != nullptr && hint->warm) ? &*hint->warm : &fallback;
  QpSolution sol;
  try {
    sol = solve_projection(spec, {}, warm);
  } catch (const Error& e) {
    throw Error(ErrorCode::kNumericalFailure, std::string("polyhedral projection failed: ") + e.what());
  }
  if (hint != nullptr) hint->warm = WarmStart{sol.minimizer, sol.active_set};
  return sol;
}

ProjectionResult PolyhedralSet::project(const Vector& point, ProjectionHint* hint) const {
  return single(point, project_with_certificate(point, hint).minimizer);
}

TangentCone PolyhedralSet::tangent_cone(const Vector& point, double activity_tol) const {
  if (!contains(point, activity_tol)) {
    throw Error(ErrorCode::kPointNotInSet, "tangent cone requested at a point outside the set");
  }
  TangentCone cone;
  cone.base_point = point;
  for (Index i = 0; i < a_.rows(); ++i) {
    if (a_.row(i).dot(point) - b_(i) >= -activity_tol) cone.active_indices.push_back(static_cast<int>(i));
  }
  cone.generators_matrix.resize(static_cast<Index>(cone.active_indices.size()), dimension());
  for (std::size_t k = 0; k < cone.active_indices.size(); ++k) {
    cone.generators_matrix.row(static_cast<Index>(k)) = a_.row(cone.active_indices[k]);
  }
  return cone;
}

bool PolyhedralSet::is_bounded() const {
  const Index n = dimension();
  if (n == 0) return true;
  if (a_.rows() == 0) return false;
  // Fast path: rows +-e_i for every coordinate (rows are unit norm).
  bool boxed = true;
  for (Index i = 0; i < n && boxed; ++i) {
    boxed = a_.col(i).maxCoeff() >= 1.0 - 1e-12 && a_.col(i).minCoeff() <= -1.0 + 1e-12;
  }
  if (boxed) return true;
  // Bounded iff the recession cone C = {v | A v <= 0} is {0}, iff C's polar
  // (the cone spanned by the rows) is R^n, iff P_C(+-e_i) = 0 for all i.
  for (Index i = 0; i < n; ++i) {
    for (double sign : {1.0, -1.0}) {
      Vector e = Vector::Zero(n);
      e(i) = sign;
      const QpSolution sol = solve_projection(QpSpec::cone(Metric::identity(n), e, a_));
      if (sol.minimizer.norm() > 1e-9) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// ProductSet

ProductSet::ProductSet(Index free_dims, PolyhedralSet constrained)
    : free_dims_(free_dims), constrained_(std::move(constrained)) {
  if (free_dims_ < 0) throw Error(ErrorCode::kInvalidArgument, "negative free dimension");
}

bool ProductSet::contains(const Vector& point, double tol) const {
  if (point.size() != dimension()) throw Error(ErrorCode::kDimensionMismatch, "point has wrong dimension");
  return constrained_.contains(point.tail(constrained_.dimension()), tol);
}

ProjectionResult ProductSet::project(const Vector& point, ProjectionHint* hint) const {
  if (point.size() != dimension()) throw Error(ErrorCode::kDimensionMismatch, "point has wrong dimension");
  const Index p = constrained_.dimension();
  Vector nearest(dimension());
  nearest.head(free_dims_) = point.head(free_dims_);
  nearest.tail(p) = constrained_.project(point.tail(p), hint).nearest;
  return single(point, std::move(nearest));
}

TangentCone ProductSet::tangent_cone(const Vector& point, double activity_tol) const {
  if (point.size() != dimension()) throw Error(ErrorCode::kDimensionMismatch, "point has wrong dimension");
  const Index p = constrained_.dimension();
  TangentCone inner = constrained_.tangent_cone(point.tail(p), activity_tol);
  TangentCone cone;
  cone.base_point = point;
  cone.active_indices = inner.active_indices;
  cone.generators_matrix = Matrix::Zero(inner.generators_matrix.rows(), dimension());
  cone.generators_matrix.rightCols(p) = inner.generators_matrix;
  return cone;
}

// ---------------------------------------------------------------------------
// KappaCuspSet

KappaCuspSet::KappaCuspSet(double kappa) : kappa_(kappa) {
  if (!(kappa > 0.5 && kappa < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cusp exponent must lie in (1/2, 1)");
  }
}

bool KappaCuspSet::contains(const Vector& point, double tol) const {
  if (point.size() != 2) throw Error(ErrorCode::kDimensionMismatch, "cusp set lives in R^2");
  return std::abs(point(1)) >= std::pow(std::max(0.0, point(0)), kappa_) - tol;
}

ProjectionResult KappaCuspSet::project(const Vector& point, ProjectionHint*) const {
  if (point.size() != 2) throw Error(ErrorCode::kDimensionMismatch, "cusp set lives in R^2");
  if (!point.allFinite()) throw Error(ErrorCode::kNonfiniteValue, "cusp projection of nonfinite point");
  if (contains(point, 0.0)) return single(point, point);

  // Outside points have z1 > 0 and |z2| < z1^kappa; the nearest point lies on
  // a branch s -> (s, +-s^kappa) with s in [0, z1].
  const double z1 = point(0);
  const double z2 = point(1);
  const double k = kappa_;
  struct Branch {
    double s;
    double sq_dist;
    Vector p;
  };
  auto solve_branch = [&](double sign) {
    const double target = sign * z2;
    auto g = [&](double s) {
      const double dy = std::pow(s, k) - target;
      return (s - z1) * (s - z1) + dy * dy;
    };
    auto dg = [&](double s) {
      const double sp = std::max(s, 1e-300);
      return 2.0 * (sp - z1) + 2.0 * k * std::pow(sp, k - 1.0) * (std::pow(sp, k) - target);
    };
    const int n = kTolerances.cusp_grid_points;
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double s = z1 * static_cast<double>(i) / static_cast<double>(n - 1);
      const double v = g(s);
      if (v < best_val) {
        best_val = v;
        best = i;
      }
    }
    double lo = z1 * static_cast<double>(std::max(best - 1, 0)) / static_cast<double>(n - 1);
    double hi = z1 * static_cast<double>(std::min(best + 1, n - 1)) / static_cast<double>(n - 1);
    double s_star = z1 * static_cast<double>(best) / static_cast<double>(n - 1);
    if (dg(lo) < 0.0 && dg(hi) > 0.0) {
      while (hi - lo > kTolerances.cusp_bisection) {
        const double mid = 0.5 * (lo + hi);
        if (dg(mid) < 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      s_star = 0.5 * (lo + hi);
    } else {
      for (double s : {lo, hi}) {
        if (g(s) < g(s_star)) s_star = s;
      }
    }
    Vector p(2);
    p << s_star, sign * std::pow(s_star, k);
    return Branch{s_star, g(s_star), p};
  };

  const Branch up = solve_branch(1.0);
  const Branch down = solve_branch(-1.0);
  ProjectionResult res;
  const double best = std::min(up.sq_dist, down.sq_dist);
  res.distance = std::sqrt(best);
  if (std::abs(up.sq_dist - down.sq_dist) <= 1e-14 * (1.0 + best)) {
    res.unique = false;
    res.candidates = {down.p, up.p};
    if (lex_less(res.candidates[1], res.candidates[0])) std::swap(res.candidates[0], res.candidates[1]);
  } else {
    res.candidates = {up.sq_dist < down.sq_dist ? up.p : down.p};
  }
  res.nearest = res.candidates.front();
  return res;
}

// ---------------------------------------------------------------------------
// Cones

ObliqueResult project_cone_oblique(const TangentCone& cone, const Vector& w, const Metric& metric) {
  if (w.size() != cone.dimension() || metric.dimension() != cone.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch, "oblique projection dimensions disagree");
  }
  ObliqueResult res;
  if (cone.is_full_space()) {
    res.tangent_part = w;
    res.normal_part = Vector::Zero(w.size());
    return res;
  }
  const QpSolution sol = solve_projection(QpSpec::cone(metric, w, cone.generators_matrix));
  res.tangent_part = sol.minimizer;
  res.normal_part = w - sol.minimizer;
  res.duals = sol.duals;
  return res;
}

std::optional<std::vector<Vector>> cone_extreme_rays(const TangentCone& cone) {
  const Index n = cone.dimension();
  const Matrix& a = cone.generators_matrix;
  const Index k = a.rows();
  std::vector<Vector> rays;
  if (k == 0) {
    for (Index i = 0; i < n; ++i) {
      rays.push_back(Vector::Unit(n, i));
      rays.push_back(-Vector::Unit(n, i));
    }
    return rays;
  }
  if (static_cast<Index>(independent_rows(Metric::identity(n), a).size()) < k) return std::nullopt;
  const Matrix pinv = a.transpose() * (a * a.transpose()).llt().solve(Matrix::Identity(k, k));
  for (Index j = 0; j < k; ++j) {
    Vector v = -pinv.col(j);
    rays.push_back(v / v.norm());
  }
  Eigen::HouseholderQR<Matrix> qr(a.transpose());
  const Matrix q = qr.householderQ();
  for (Index j = k; j < n; ++j) {
    rays.push_back(q.col(j));
    rays.push_back(-q.col(j));
  }
  return rays;
}

std::vector<Vector> sample_cone_rays(const TangentCone& cone, int count, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index n = cone.dimension();
  const Metric id = Metric::identity(n);
  std::vector<Vector> rays;
  for (int i = 0; i < count; ++i) {
    Vector v(n);
    for (Index j = 0; j < n; ++j) v(j) = normal(rng);
    const Vector t = project_cone_oblique(cone, v, id).tangent_part;
    const double nrm = t.norm();
    if (nrm > 1e-12) rays.push_back(t / nrm);
  }
  return rays;
}

bool normal_cone_membership(const ConstraintSet& set, const Vector& point, const Vector& eta,
                            const Metric& metric, double tol) {
  const TangentCone cone = set.tangent_cone(point);
  if (eta.size() != cone.dimension()) throw Error(ErrorCode::kDimensionMismatch, "eta has wrong dimension");
  if (auto rays = cone_extreme_rays(cone)) {
    for (const Vector& v : *rays) {
      if (metric.inner(eta, v) / metric.norm(v) > tol) return false;
    }
    return true;
  }
  return metric.norm(project_cone_oblique(cone, eta, metric).tangent_part) <= tol;
}

MoreauCheck check_moreau_decomposition(const TangentCone& cone, const Vector& w, const Metric& metric,
                                       const ObliqueResult& result, const std::vector<Vector>& rays) {
  (void)cone;
  MoreauCheck check;
  const double w2 = metric.squared_norm(w);
  const double cross = std::abs(metric.inner(result.tangent_part, result.normal_part));
  check.orthogonality = w2 > 0.0 ? cross / w2 : cross;
  check.norm_excess = metric.norm(result.normal_part) - std::sqrt(w2);
  if (rays.empty()) return check;
  // All rays at once: one matrix product instead of two matvecs per ray.
  Matrix v(w.size(), static_cast<Index>(rays.size()));
  for (std::size_t j = 0; j < rays.size(); ++j) v.col(static_cast<Index>(j)) = rays[j];
  const Matrix gv = metric.is_identity() ? v : Matrix(metric.matrix() * v);
  const Vector norms = v.cwiseProduct(gv).colwise().sum().transpose().cwiseMax(0.0).cwiseSqrt();
  const Vector inner = gv.transpose() * result.normal_part;
  check.polar_violation = (inner.array() / norms.array()).maxCoeff();
  return check;
}

}  // namespace awpds
