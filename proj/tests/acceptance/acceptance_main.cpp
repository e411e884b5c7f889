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
// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 iff all
// ten pass. Run from the build tree; the smoke run reads configs/ from the
// source tree.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "awpds/analysis.hpp"
#include "awpds/dynamics.hpp"
#include "awpds/experiment.hpp"
#include "awpds/flows.hpp"
#include "awpds/geometry.hpp"
#include "awpds/io.hpp"
#include "awpds/projsolve.hpp"
#include "support/oracles.hpp"

namespace awpds {
namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

int jobs() { return static_cast<int>(std::max(1u, std::min(8u, std::thread::hardware_concurrency()))); }

std::shared_ptr<const QpInstance> instance(std::uint64_t seed, Index p = 10, Index r = 30, Index s = 0) {
  return std::make_shared<const QpInstance>(generate_instance(seed, p, 2 * p, r, s));
}

Outcome projection_oracle() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const QpSpec spec = testing::random_projection_spec(rng, 6, 10);
    const Vector a = solve_projection(spec).minimizer;
    const Vector b = testing::enumerate_projection(spec.metric.matrix(), spec.target, spec.A, spec.b);
    worst = std::max(worst, (a - b).norm());
  }
  return {worst <= 1e-8, "200 projections, max |active set - enumeration| = " + fmt(worst)};
}

Outcome moreau_contract() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 6);
  double orth = 0.0, excess = -1.0, polar = -1.0;
  bool ok = true;
  for (int t = 0; t < 500; ++t) {
    const Index n = dim(rng);
    const Index k = std::uniform_int_distribution<int>(1, static_cast<int>(n) + 2)(rng);
    TangentCone cone;
    cone.base_point = Vector::Zero(n);
    cone.generators_matrix.resize(k, n);
    for (Index i = 0; i < k; ++i) {
      const Vector row = testing::random_normal(n, rng);
      cone.generators_matrix.row(i) = row.transpose() / row.norm();
      cone.active_indices.push_back(static_cast<int>(i));
    }
    const Metric g(testing::random_spd(n, rng));
    const Vector w = testing::random_normal(n, rng);
    const ObliqueResult res = project_cone_oblique(cone, w, g);
    const Vector& v = res.tangent_part;
    const Vector& eta = res.normal_part;
    const double w2 = g.squared_norm(w);
    const double o = std::abs(g.inner(v, eta)) / std::max(w2, 1e-300);
    const double e = g.norm(eta) - g.norm(w);
    // eta lies in the G-polar of T = {d | A d <= 0} iff G eta = A^T y with
    // y >= 0; the residual is checked together with sampled rays of T.
    double pv = std::max(0.0, -res.duals.minCoeff());
    pv = std::max(pv, (g.apply(eta) - cone.generators_matrix.transpose() * res.duals).norm());
    for (int j = 0; j < 32; ++j) {
      const Vector d = testing::random_normal(n, rng);
      const Vector dt = project_cone_oblique(cone, d, Metric::identity(n)).tangent_part;
      if (dt.norm() > 1e-12) pv = std::max(pv, g.inner(eta, dt / dt.norm()));
    }
    const double in_cone = (cone.generators_matrix * v).maxCoeff();
    ok = ok && o <= 1e-8 && e <= 1e-10 && pv <= 1e-8 && in_cone <= 1e-8;
    orth = std::max(orth, o);
    excess = std::max(excess, e);
    polar = std::max(polar, pv);
  }
  return {ok, "500 cones, orthogonality " + fmt(orth) + ", norm excess " + fmt(excess) + ", polar " + fmt(polar)};
}

Outcome gradient_checks() {
  const auto inst = instance(11);
  const PolyhedralSet& U = inst->input_set();
  std::mt19937_64 rng(13);
  double worst_grad = 0.0, worst_dist = 0.0;
  const auto rel = [](const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1.0, b.norm()); };
  for (int t = 0; t < 100; ++t) {
    const Vector u = testing::random_normal(10, rng, 1.5);
    const Vector fd = testing::central_difference_gradient([&](const Vector& x) { return inst->reduced_objective(x); }, u);
    worst_grad = std::max(worst_grad, rel(inst->reduced_gradient(u), fd));
    // Points outside U so that the distance is smooth and nonzero.
    const Vector z = testing::random_normal(10, rng, 6.0);
    const auto half_d2 = [&](const Vector& x) {
      const double d = U.distance(x);
      return 0.5 * d * d;
    };
    const Vector analytic = z - U.project(z).nearest;
    worst_dist = std::max(worst_dist, rel(analytic, testing::central_difference_gradient(half_d2, z)));
  }
  return {worst_grad <= 1e-5 && worst_dist <= 1e-5,
          "100 + 100 points, rel. error grad " + fmt(worst_grad) + ", grad d^2/2 " + fmt(worst_dist)};
}

Outcome tube_invariance() {
  const std::vector<double> gains = {0.2, 0.1, 0.05};
  const std::vector<FieldKind> kinds = {FieldKind::kPenaltyGradient, FieldKind::kAwGradient, FieldKind::kAwNewton};
  const int seeds = 3;
  const int cells = seeds * static_cast<int>(kinds.size() * gains.size());
  std::vector<TubeCheck> out(static_cast<std::size_t>(cells));
  std::vector<bool> finished(static_cast<std::size_t>(cells));
  parallel_for(cells, jobs(), [&](int c) {
    const auto inst = instance(static_cast<std::uint64_t>(c / 9));
    const FieldKind kind = kinds[static_cast<std::size_t>((c / 3) % 3)];
    const double k = gains[static_cast<std::size_t>(c % 3)];
    const FieldSpec f = kind == FieldKind::kPenaltyGradient ? FieldSpec::penalty_gradient(inst, k)
                        : kind == FieldKind::kAwGradient   ? FieldSpec::aw_gradient(inst, k)
                                                           : FieldSpec::aw_newton(inst, k);
    // h = 0.1 K; the Newton metric scales it by 1 / nu to stay below 0.5 K / nu.
    IntegratorConfig cfg;
    cfg.step_h = 0.1 * k / f.metric.inverse_max_eigenvalue();
    cfg.horizon_T = 10.0;
    const Trajectory t = integrate_awa(f, inst->input_set().witness(), cfg);
    out[static_cast<std::size_t>(c)] = check_tube(t);
    finished[static_cast<std::size_t>(c)] = t.termination == Termination::kHorizonReached;
  });
  bool ok = true;
  double ratio = 0.0;
  for (int c = 0; c < cells; ++c) {
    const TubeCheck& t = out[static_cast<std::size_t>(c)];
    ok = ok && t.passed && finished[static_cast<std::size_t>(c)];
    ratio = std::max(ratio, t.max_distance / t.bound);
  }
  return {ok, std::to_string(cells) + " runs, max d_Z / (K M / mu + C h) = " + fmt(ratio)};
}

Outcome counterexample() {
  bool ok = true;
  std::string detail;
  for (double k : {0.1, 0.05}) {
    IntegratorConfig cfg;
    cfg.step_h = 0.1 * k;
    cfg.horizon_T = 2.0;
    const CounterexampleResult r = run_counterexample(0.75, k, cfg);
    const double d0 = KappaCuspSet(0.75).distance(r.report.z0);
    ok = ok && std::abs(d0 - k) <= 1e-9 && r.report.violated && r.report.exit_time.has_value() &&
         !r.control_report.violated;
    detail += "K=" + fmt(k) + ": max d " + fmt(r.report.max_distance) + " vs " + fmt(r.report.bound) +
              (r.report.exit_time ? ", exit t=" + fmt(*r.report.exit_time) : ", no exit") + ", control max d " +
              fmt(r.control_report.max_distance) + "; ";
  }
  return {ok, detail};
}

Outcome equilibrium_preservation() {
  double worst_res = 0.0, worst_proj = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = instance(100 + seed, 4, 6);
    const SteadyStateOptimum opt = solve_steady_state_qp(*inst, false, QpOracle::kEnumeration);
    for (const FieldSpec& f : {FieldSpec::aw_gradient(inst, 0.1), FieldSpec::aw_newton(inst, 0.1)}) {
      const Vector z = construct_awa_equilibrium(f, opt.u);
      worst_res = std::max(worst_res, eval_field(f, z).dz.norm());
      worst_proj = std::max(worst_proj, (inst->input_set().project(z).nearest - opt.u).norm());
    }
  }
  // One-dimensional example: U = [0, 1], f(u) = -u + 2, K = 0.2.
  Vector lo(1), hi(1), one(1);
  lo << 0;
  hi << 1;
  one << 1;
  const FieldSpec hand = FieldSpec::custom(std::make_shared<PolyhedralSet>(PolyhedralSet::box(lo, hi)),
                                           Metric::identity(1), 0.2,
                                           [](const Vector&, const Vector& zb) { return Vector((2.0 - zb.array()).matrix()); });
  const Vector zh = construct_awa_equilibrium(hand, one);
  const double hand_err = std::abs(zh(0) - 1.2);
  const double hand_res = eval_field(hand, zh).dz.norm();
  return {worst_res <= 1e-10 && worst_proj <= 1e-10 && hand_err <= 1e-12 && hand_res <= 1e-10,
          "50 instances x 2 fields: residual " + fmt(worst_res) + ", |P z* - u*| " + fmt(worst_proj) +
              "; hand example z*_K = " + fmt(zh(0))};
}

Outcome monotone_convergence() {
  const int seeds = 4;
  std::vector<double> err(seeds), excess(seeds), pair_max(seeds);
  std::vector<bool> lyap(seeds);
  parallel_for(seeds, jobs(), [&](int i) {
    const auto inst = instance(200 + static_cast<std::uint64_t>(i));
    const auto [beta, L] = estimate_monotonicity_constants(*inst);
    const double k = 0.5 * monotonicity_threshold(beta, L);
    const FieldSpec f = FieldSpec::aw_gradient(inst, k);
    const Vector u_star = solve_steady_state_qp(*inst, false).u;
    const Vector z_star = construct_awa_equilibrium(f, u_star);
    IntegratorConfig cfg;
    cfg.step_h = 0.1 * k;
    cfg.horizon_T = 400.0;
    std::mt19937_64 rng(300 + static_cast<std::uint64_t>(i));
    const Trajectory t = integrate_awa(f, testing::random_normal(10, rng, 4.0), cfg);
    err[static_cast<std::size_t>(i)] = (t.final_projected() - u_star).norm();
    const LyapunovCheck ly = check_lyapunov(t, z_star);
    lyap[static_cast<std::size_t>(i)] = ly.passed;
    excess[static_cast<std::size_t>(i)] = ly.max_excess;
    double worst = -std::numeric_limits<double>::infinity();
    for (int q = 0; q < 1000 / seeds; ++q) {
      const Vector z = testing::random_normal(10, rng, 4.0), zp = testing::random_normal(10, rng, 4.0);
      worst = std::max(worst, (z - zp).dot(eval_field(f, z).dz - eval_field(f, zp).dz) / (z - zp).squaredNorm());
    }
    pair_max[static_cast<std::size_t>(i)] = worst;
  });
  const double e = *std::max_element(err.begin(), err.end());
  const double x = *std::max_element(excess.begin(), excess.end());
  const double pm = *std::max_element(pair_max.begin(), pair_max.end());
  const bool lyap_ok = std::all_of(lyap.begin(), lyap.end(), [](bool b) { return b; });
  return {e <= 1e-6 && lyap_ok && pm < 0.0,
          std::to_string(seeds) + " instances: final error " + fmt(e) + ", V excess " + fmt(x) +
              ", max <dF, dz>/|dz|^2 over 1000 pairs " + fmt(pm)};
}

Outcome uniform_convergence() {
  const auto inst = instance(1);
  const std::vector<double> gains = {0.2, 0.1, 0.05, 0.025};
  SweepRule rule;
  rule.theta = 0.1;
  rule.horizon_T = 10.0;
  rule.jobs = jobs();
  bool ok = true;
  std::string detail;
  for (FieldKind kind : {FieldKind::kAwGradient, FieldKind::kAwNewton}) {
    const ConvergenceReport rep = convergence_sweep(inst, kind, gains, rule);
    ok = ok && rep.monotone_flag;
    detail += std::string(to_string(kind)) + " sup d " + fmt(rep.sup_distances.front()) + " -> " +
              fmt(rep.sup_distances.back()) + " (order " + fmt(rep.fitted_order) + "); ";
  }
  const ConvergenceReport pen = convergence_sweep(inst, FieldKind::kPenaltyGradient, gains, rule);
  for (std::size_t i = 0; i < gains.size(); ++i) {
    ok = ok && pen.raw_offsets[i] > 0.0 && (i == 0 || pen.raw_offsets[i] < pen.raw_offsets[i - 1]);
  }
  detail += "penalty raw offset " + fmt(pen.raw_offsets.front()) + " -> " + fmt(pen.raw_offsets.back());
  return {ok, detail};
}

Outcome saddle() {
  const Index p = 3, s = 5;
  const double k = 0.1;
  const auto inst = instance(0, p, 10, s);
  const FieldSpec f = FieldSpec::aw_saddle(inst, k);
  Vector z0 = Vector::Zero(p + s);
  z0.head(p) = inst->input_set().witness();
  IntegratorConfig cfg;
  cfg.step_h = 0.01;
  cfg.horizon_T = 1000.0;
  const Trajectory t = integrate_awa(f, z0, cfg);
  double best = std::numeric_limits<double>::infinity(), reached = -1.0;
  for (Index n = 0; n < t.size(); n += 100) {
    const Vector z = t.state(n), zb = t.projected(n);
    const Vector y = recover_input_duals(*inst, zb.head(p), (z.head(p) - zb.head(p)) / k);
    const double r = kkt_residual(*inst, zb.head(p), y, Vector(zb.tail(s)));
    best = std::min(best, r);
    if (r <= 1e-6 && reached < 0) reached = t.times(n);
  }
  const double min_dual = t.states.rightCols(s).minCoeff();
  return {reached >= 0 && min_dual >= 0.0,
          "KKT residual " + fmt(best) + (reached >= 0 ? " <= 1e-6 from t=" + fmt(reached) : " never <= 1e-6") +
              ", min dual " + fmt(min_dual)};
}

Outcome smoke_run() {
  ExperimentConfig c = load_config(std::filesystem::path(AWPDS_SOURCE_DIR) / "configs" / "fig2_smoke.json");
  c.jobs = jobs();
  const auto base = std::filesystem::temp_directory_path() / "awpds_acceptance_smoke";
  std::filesystem::remove_all(base);
  c.output_dir = (base / "a").string();
  const auto t0 = std::chrono::steady_clock::now();
  const RunOutcome a = run_experiment(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.output_dir = (base / "b").string();
  const RunOutcome b = run_experiment(c);
  bool same = a.files.size() == b.files.size();
  int csvs = 0;
  for (std::size_t i = 0; same && i < a.files.size(); ++i) {
    if (a.files[i].extension() != ".csv") continue;
    ++csvs;
    same = read_text_file(a.files[i]) == read_text_file(b.files[i]);
  }
  std::filesystem::remove_all(base);
  int failed = 0;
  for (const auto& ch : a.checks) failed += ch.passed ? 0 : 1;
  // The 10 min bound applies to one run; the second only checks determinism.
  return {a.exit_status == 0 && same && csvs > 0 && secs < 600.0,
          "first run " + fmt(secs) + " s, " + std::to_string(a.checks.size()) + " checks, " + std::to_string(failed) +
              " failed; " + std::to_string(csvs) + " CSVs " + (same ? "identical" : "differ") + " across runs"};
}

}  // namespace
}  // namespace awpds

int main() {
  using Clock = std::chrono::steady_clock;
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<awpds::Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "projection oracle equivalence", 10, awpds::projection_oracle},
      {2, "oblique cone decomposition", 0, awpds::moreau_contract},
      {3, "gradient finite differences", 0, awpds::gradient_checks},
      {4, "tube invariance", 60, awpds::tube_invariance},
      {5, "cusp counterexample", 0, awpds::counterexample},
      {6, "equilibrium preservation", 0, awpds::equilibrium_preservation},
      {7, "monotone convergence", 0, awpds::monotone_convergence},
      {8, "uniform convergence in K", 0, awpds::uniform_convergence},
      {9, "saddle flow", 30, awpds::saddle},
      {10, "large-scale smoke run", 0, awpds::smoke_run},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = Clock::now();
    awpds::Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = c.budget_s <= 0 || secs < c.budget_s;
    const bool pass = o.passed && in_time;
    failures += pass ? 0 : 1;
    std::printf("criterion %2d %s: %s (%.1f s%s) %s\n", c.id, pass ? "PASS" : "FAIL", c.name, secs,
                in_time ? "" : ", over budget", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
