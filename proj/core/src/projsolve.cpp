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
#include "awpds/projsolve.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "awpds/error.hpp"

namespace awpds {

namespace {

Matrix gather_rows(const Matrix& a, const std::vector<int>& rows) {
  Matrix out(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = a.row(rows[k]);
  return out;
}

Vector gather(const Vector& v, const std::vector<int>& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k)) = v(idx[k]);
  return out;
}

// Gram-Schmidt over the columns of B in order; returns the kept columns and
// the first-dropped bookkeeping through dropped.
std::vector<int> scan_independent(const Matrix& b, double rank_tol, std::vector<int>* dropped) {
  std::vector<int> kept;
  Matrix basis(b.rows(), std::min(b.rows(), b.cols()));
  Index nb = 0;
  for (Index j = 0; j < b.cols(); ++j) {
    Vector v = b.col(j);
    const double norm0 = v.norm();
    if (norm0 == 0.0 || nb == b.rows()) {
      if (dropped) dropped->push_back(static_cast<int>(j));
      continue;
    }
    for (int pass = 0; pass < 2; ++pass) {
      for (Index k = 0; k < nb; ++k) v -= basis.col(k).dot(v) * basis.col(k);
    }
    const double rest = v.norm();
    if (rest <= rank_tol * norm0 * 1e2) {
      if (dropped) dropped->push_back(static_cast<int>(j));
      continue;
    }
    basis.col(nb++) = v / rest;
    kept.push_back(static_cast<int>(j));
  }
  return kept;
}

double objective(const Metric& metric, const Vector& z, const Vector& target) {
  return metric.squared_norm(z - target);
}

int default_iteration_cap(Index n, Index r) { return static_cast<int>(10 * (n + r) + 50); }

}  // namespace

void QpSpec::validate() const {
  const Index n = target.size();
  if (metric.dimension() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "metric dimension " + std::to_string(metric.dimension()) +
                                                   " != target dimension " + std::to_string(n));
  }
  if (A.rows() > 0 && A.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "constraint matrix has " + std::to_string(A.cols()) +
                                                   " columns, expected " + std::to_string(n));
  }
  if (b.size() != A.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "offset vector length != constraint rows");
  }
  if (!target.allFinite() || !A.allFinite() || !b.allFinite()) {
    throw Error(ErrorCode::kNonfiniteValue, "projection data has nonfinite entries");
  }
  if (homogeneous && b.size() > 0 && b.cwiseAbs().maxCoeff() != 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "homogeneous projection requires b == 0");
  }
}

QpSpec QpSpec::cone(Metric metric, Vector target, Matrix A) {
  const Index r = A.rows();
  if (r == 0) A.resize(0, target.size());
  return QpSpec{std::move(metric), std::move(target), std::move(A), Vector::Zero(r), true};
}

std::vector<int> independent_rows(const Metric& metric, const Matrix& rows, const Tolerances& tol) {
  if (rows.rows() == 0) return {};
  const Matrix b = metric.solve_lower(Matrix(rows.transpose()));
  return scan_independent(b, tol.rank, nullptr);
}

EqualityKktSolution solve_kkt_equality(const Metric& metric, const Vector& target, const Matrix& a_eq,
                                       const Vector& b_eq, const Tolerances& tol) {
  const Index k = a_eq.rows();
  if (b_eq.size() != k) throw Error(ErrorCode::kDimensionMismatch, "equality rhs length != rows");
  if (k == 0) return {target, Vector(0)};
  if (a_eq.cols() != target.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "equality rows have wrong column count");
  }
  // With G = L L^T and B = L^{-1} A^T: (A G^{-1} A^T) lambda = A t - b,
  // A G^{-1} A^T = B^T B, z = t - L^{-T} B lambda.
  const Matrix b = metric.solve_lower(Matrix(a_eq.transpose()));
  auto dependent = [](int row) {
    return RankDeficientError(row, "equality row " + std::to_string(row) + " is linearly dependent");
  };
  if (k > b.rows()) {
    std::vector<int> dropped;
    scan_independent(b, tol.rank, &dropped);
    throw dependent(dropped.back());
  }
  // Without pivoting, |R_jj| is the part of column j orthogonal to the
  // earlier columns: the same test scan_independent applies.
  Eigen::HouseholderQR<Matrix> qr(b);
  int worst = -1;
  for (Index j = 0; j < k; ++j) {
    if (std::abs(qr.matrixQR()(j, j)) <= tol.rank * b.col(j).norm() * 1e2) worst = static_cast<int>(j);
  }
  if (worst >= 0) throw dependent(worst);
  const Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Vector rhs = a_eq * target - b_eq;
  Vector y = r.transpose().triangularView<Eigen::Lower>().solve(rhs);
  Vector lambda = r.triangularView<Eigen::Upper>().solve(y);
  if (!lambda.allFinite()) throw Error(ErrorCode::kIllConditioned, "equality KKT solve produced nonfinite values");
  const Vector z = target - metric.solve_upper(Vector(b * lambda));
  return {z, lambda};
}

double projection_kkt_residual(const QpSpec& spec, const Vector& z, const Vector& duals) {
  Vector stat = spec.metric.apply(Vector(z - spec.target));
  double res = 0.0;
  if (spec.A.rows() > 0) {
    stat += spec.A.transpose() * duals;
    const Vector slack = spec.A * z - spec.b;
    res = std::max(res, std::max(0.0, slack.maxCoeff()));
    res = std::max(res, std::max(0.0, -duals.minCoeff()));
    res = std::max(res, duals.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  return std::max(res, stat.norm());
}

std::optional<Vector> find_feasible_point(const Matrix& A, const Vector& b, const Tolerances& tol) {
  const Index n = A.cols();
  const Index r = A.rows();
  if (r == 0) return Vector::Zero(n);
  Vector point = Vector::Zero(n);
  Vector offsets = b;
  // Refinement rounds shrink the violation left by dividing through tau.
  for (int round = 0; round < 4; ++round) {
    const double viol = (A * point - b).maxCoeff();
    if (viol <= tol.feasibility) return point;
    offsets = b - A * point;
    Matrix cone(r + 1, n + 1);
    cone.topLeftCorner(r, n) = A;
    cone.topRightCorner(r, 1) = -offsets;
    cone.bottomRows(1).setZero();
    cone(r, n) = -1.0;
    Vector e = Vector::Zero(n + 1);
    e(n) = 1.0;
    const QpSolution sol = solve_projection(QpSpec::cone(Metric::identity(n + 1), e, cone));
    const double tau = sol.minimizer(n);
    if (!(tau > 1e-13)) return std::nullopt;
    point += sol.minimizer.head(n) / tau;
  }
  const double viol = (A * point - b).maxCoeff();
  if (viol <= 1e2 * tol.feasibility) return point;
  return std::nullopt;
}

namespace {

// Goldfarb-Idnani dual active-set method. Each step strictly increases the
// dual objective, so degenerate vertices cannot make it cycle. Restarted from
// the unconstrained minimizer; the QR factor is rebuilt at every step.
std::optional<QpSolution> dual_active_set(const QpSpec& spec, const Tolerances& tol, int cap) {
  const Index n = spec.dimension();
  const Index r = spec.constraint_count();
  const Matrix& A = spec.A;
  const Vector& b = spec.b;
  const Metric& g = spec.metric;
  const Vector row_norms = A.rowwise().norm();
  const double inf = std::numeric_limits<double>::infinity();

  Vector x = spec.target;
  std::vector<int> active;
  std::vector<double> u;
  int iter = 0;
  for (;;) {
    // Most violated constraint, scaled by its row norm; ties take the first.
    int p = -1;
    double worst = tol.feasibility;
    const Vector viol = A * x - b;
    for (Index i = 0; i < r; ++i) {
      const double v = viol(i) / row_norms(i);
      if (v > worst && std::find(active.begin(), active.end(), static_cast<int>(i)) == active.end()) {
        worst = v;
        p = static_cast<int>(i);
      }
    }
    if (p < 0) break;
    const Vector np = -A.row(p).transpose();
    const Vector v = g.solve_lower(np);
    double up = 0.0;
    for (;;) {
      if (++iter > cap) return std::nullopt;
      const Index q = static_cast<Index>(active.size());
      Matrix nb(n, q);
      for (Index j = 0; j < q; ++j) nb.col(j) = -A.row(active[static_cast<std::size_t>(j)]).transpose();
      const Matrix bl = g.solve_lower(nb);
      Eigen::HouseholderQR<Matrix> qr(bl);
      const Matrix qfull = qr.householderQ() * Matrix::Identity(n, n);
      const Vector d = qfull.transpose() * v;
      const Vector z2 = qfull.rightCols(n - q) * d.tail(n - q);
      const Vector z = g.solve_upper(z2);
      Vector dir(q);
      if (q > 0) {
        const Matrix rq = qr.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
        dir = rq.triangularView<Eigen::Upper>().solve(d.head(q));
      }
      double t1 = inf;
      int k = -1;
      for (Index j = 0; j < q; ++j) {
        if (dir(j) > 1e-14) {
          const double ratio = u[static_cast<std::size_t>(j)] / dir(j);
          if (ratio < t1) {
            t1 = ratio;
            k = static_cast<int>(j);
          }
        }
      }
      const bool dependent = z2.norm() <= 1e-12 * std::max(1.0, v.norm());
      const double t2 = dependent ? inf : (A.row(p).dot(x) - b(p)) / z.dot(np);
      if (t1 == inf && t2 == inf) throw Error(ErrorCode::kInfeasible, "constraint region is empty");
      const double step = std::min(t1, t2);
      if (!dependent) x += step * z;
      for (Index j = 0; j < q; ++j) u[static_cast<std::size_t>(j)] -= step * dir(j);
      up += step;
      if (t2 <= t1) {
        active.push_back(p);
        u.push_back(up);
        break;
      }
      active.erase(active.begin() + k);
      u.erase(u.begin() + k);
    }
  }
  QpSolution out;
  out.minimizer = x;
  out.duals = Vector::Zero(r);
  for (std::size_t j = 0; j < active.size(); ++j) out.duals(active[j]) = std::max(0.0, u[j]);
  out.active_set = active;
  std::sort(out.active_set.begin(), out.active_set.end());
  out.iterations = iter;
  out.kkt_residual = projection_kkt_residual(spec, x, out.duals);
  return out;
}

}  // namespace

QpSolution solve_projection(const QpSpec& spec, const ActiveSetOptions& options, const WarmStart* warm) {
  spec.validate();
  const Tolerances& tol = options.tol;
  const Index n = spec.dimension();
  const Index r = spec.constraint_count();
  const Matrix& A = spec.A;
  const Vector& b = spec.b;
  const Vector& t = spec.target;

  QpSolution out;
  out.duals = Vector::Zero(r);
  if (r == 0 || (A * t - b).maxCoeff() <= tol.feasibility) {
    out.minimizer = t;
    return out;
  }

  Vector x;
  std::vector<int> work;
  if (warm != nullptr && warm->point.size() == n && warm->point.allFinite() &&
      (A * warm->point - b).maxCoeff() <= tol.feasibility) {
    x = warm->point;
    std::vector<int> cand;
    for (int i : warm->working_set) {
      if (i >= 0 && i < r && A.row(i).dot(x) - b(i) >= -tol.activity) cand.push_back(i);
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    const std::vector<int> keep = independent_rows(spec.metric, gather_rows(A, cand), tol);
    for (int k : keep) work.push_back(cand[static_cast<std::size_t>(k)]);
  } else if (spec.homogeneous) {
    x = Vector::Zero(n);
  } else {
    auto start = find_feasible_point(A, b, tol);
    if (!start) throw Error(ErrorCode::kInfeasible, "constraint region is empty");
    x = *start;
  }

  std::vector<char> in_work(static_cast<std::size_t>(r), 0);
  for (int i : work) in_work[static_cast<std::size_t>(i)] = 1;
  const Vector row_norms = A.rowwise().norm();

  const int cap = options.max_iterations > 0 ? options.max_iterations : default_iteration_cap(n, r);
  // Long runs of zero-length steps signal a degenerate vertex.
  int stalled = 0;
  const int stall_limit = static_cast<int>(3 * n + 10);
  for (int iter = 1; iter <= cap && stalled <= stall_limit; ++iter) {
    std::sort(work.begin(), work.end());
    EqualityKktSolution eqp;
    try {
      eqp = solve_kkt_equality(spec.metric, t, gather_rows(A, work), gather(b, work), tol);
    } catch (const RankDeficientError& e) {
      const int drop = work[static_cast<std::size_t>(e.dependent_row())];
      in_work[static_cast<std::size_t>(drop)] = 0;
      work.erase(work.begin() + e.dependent_row());
      continue;
    }
    const Vector p = eqp.z - x;
    const double pnorm = p.norm();
    if (pnorm <= tol.step * (1.0 + x.norm() + t.norm())) {
      x = eqp.z;
      const double scale = std::max(1.0, eqp.lambda.size() ? eqp.lambda.cwiseAbs().maxCoeff() : 0.0);
      int drop = -1;
      for (std::size_t k = 0; k < work.size(); ++k) {
        if (eqp.lambda(static_cast<Index>(k)) < -tol.dual * scale) {
          drop = static_cast<int>(k);  // work is sorted: smallest index first
          break;
        }
      }
      if (drop < 0) {
        out.minimizer = x;
        for (std::size_t k = 0; k < work.size(); ++k) {
          out.duals(work[k]) = std::max(0.0, eqp.lambda(static_cast<Index>(k)));
        }
        out.active_set = work;
        out.iterations = iter;
        out.kkt_residual = projection_kkt_residual(spec, x, out.duals);
        return out;
      }
      in_work[static_cast<std::size_t>(work[static_cast<std::size_t>(drop)])] = 0;
      work.erase(work.begin() + drop);
      continue;
    }
    // Ratio test; Bland: smallest index among the minimizing ratios.
    double alpha = 1.0;
    int blocking = -1;
    const Vector ap = A * p;
    const Vector slack = b - A * x;
    for (Index i = 0; i < r; ++i) {
      if (in_work[static_cast<std::size_t>(i)]) continue;
      if (ap(i) <= 1e-12 * row_norms(i) * pnorm) continue;
      const double ratio = std::max(0.0, slack(i)) / ap(i);
      if (ratio < alpha - 1e-15 * (1.0 + alpha)) {
        alpha = ratio;
        blocking = static_cast<int>(i);
      }
    }
    x += alpha * p;
    stalled = alpha == 0.0 ? stalled + 1 : 0;
    if (blocking >= 0) {
      work.push_back(blocking);
      in_work[static_cast<std::size_t>(blocking)] = 1;
    }
  }
  // Degenerate problems can make the primal method cycle; fall back to the
  // dual method before giving up.
  if (auto dual = dual_active_set(spec, tol, options.max_iterations > 0 ? cap : 10 * cap)) return *dual;
  throw Error(ErrorCode::kMaxIterations,
              "active-set iteration cap " + std::to_string(cap) + " reached (n=" + std::to_string(n) +
                  ", r=" + std::to_string(r) + ")");
}

QpSolution brute_force_projection(const QpSpec& spec, const Tolerances& tol) {
  spec.validate();
  const Index n = spec.dimension();
  const Index r = spec.constraint_count();
  if (r > 20) {
    throw Error(ErrorCode::kTooManyConstraints, "enumeration limited to 20 constraints, got " + std::to_string(r));
  }
  const Matrix& g = spec.metric.matrix();
  const Vector gt = g * spec.target;

  bool found = false;
  double best_obj = std::numeric_limits<double>::infinity();
  QpSolution best;
  std::vector<int> subset;
  long long visited = 0;

  auto evaluate = [&]() {
    ++visited;
    const Index k = static_cast<Index>(subset.size());
    Matrix kkt = Matrix::Zero(n + k, n + k);
    Vector rhs(n + k);
    kkt.topLeftCorner(n, n) = g;
    rhs.head(n) = gt;
    for (Index j = 0; j < k; ++j) {
      const int row = subset[static_cast<std::size_t>(j)];
      kkt.block(n + j, 0, 1, n) = spec.A.row(row);
      kkt.block(0, n + j, n, 1) = spec.A.row(row).transpose();
      rhs(n + j) = spec.b(row);
    }
    Eigen::FullPivLU<Matrix> lu(kkt);
    lu.setThreshold(1e-11);
    if (lu.rank() < n + k) return;
    const Vector sol = lu.solve(rhs);
    const Vector z = sol.head(n);
    const Vector y = sol.tail(k);
    const double scale = 1.0 + spec.target.norm();
    if (spec.A.rows() > 0 && (spec.A * z - spec.b).maxCoeff() > 10 * tol.feasibility * scale) return;
    if (k > 0 && y.minCoeff() < -1e2 * tol.dual * scale) return;
    const double obj = objective(spec.metric, z, spec.target);
    if (!found || obj < best_obj) {
      found = true;
      best_obj = obj;
      best.minimizer = z;
      best.duals = Vector::Zero(r);
      for (Index j = 0; j < k; ++j) best.duals(subset[static_cast<std::size_t>(j)]) = std::max(0.0, y(j));
      best.active_set = subset;
    }
  };

  std::function<void(int, Index)> recurse = [&](int start, Index left) {
    evaluate();
    if (left == 0) return;
    for (int i = start; i < r; ++i) {
      subset.push_back(i);
      recurse(i + 1, left - 1);
      subset.pop_back();
    }
  };
  recurse(0, std::min(n, r));

  if (!found) throw Error(ErrorCode::kInfeasible, "no feasible KKT candidate among active subsets");
  best.iterations = static_cast<int>(visited);
  best.kkt_residual = projection_kkt_residual(spec, best.minimizer, best.duals);
  return best;
}

}  // namespace awpds
