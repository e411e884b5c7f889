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
#include "awpds/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include "awpds/analysis.hpp"
#include "awpds/error.hpp"
#include "awpds/geometry.hpp"
#include "awpds/io.hpp"
#include "awpds/projsolve.hpp"
#include "json_matrix.hpp"

namespace awpds {

using nlohmann::json;

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kGradientComparison: return "gradient_comparison";
    case ExperimentKind::kSaddle: return "saddle";
    case ExperimentKind::kCounterexample: return "counterexample";
    case ExperimentKind::kConvergenceSweep: return "convergence_sweep";
    case ExperimentKind::kStabilityEnvelope: return "stability_envelope";
    case ExperimentKind::kCheckSuite: return "check_suite";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

std::size_t line_of_key(const std::string& text, const std::string& key) {
  const std::size_t pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

class ConfigReader {
 public:
  ConfigReader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    const std::size_t line = line_of_key(text_, key);
    std::string where = source_;
    if (line > 0) where += ":" + std::to_string(line);
    throw Error(ErrorCode::kConfigParse, where + ": field '" + key + "': " + why);
  }

  double number(const json& j, const std::string& key) const {
    if (!j.is_number()) fail(key, "expected a number");
    return j.get<double>();
  }

  long long integer(const json& j, const std::string& key) const {
    if (!j.is_number_integer()) fail(key, "expected an integer");
    return j.get<long long>();
  }

  std::string string(const json& j, const std::string& key) const {
    if (!j.is_string()) fail(key, "expected a string");
    return j.get<std::string>();
  }

  bool boolean(const json& j, const std::string& key) const {
    if (!j.is_boolean()) fail(key, "expected true or false");
    return j.get<bool>();
  }

  const std::string& text() const { return text_; }
  const std::string& source() const { return source_; }

 private:
  const std::string& text_;
  std::string source_;
};

ExperimentKind experiment_from_string(const ConfigReader& rd, const std::string& name) {
  for (ExperimentKind k : {ExperimentKind::kGradientComparison, ExperimentKind::kSaddle,
                           ExperimentKind::kCounterexample, ExperimentKind::kConvergenceSweep,
                           ExperimentKind::kStabilityEnvelope, ExperimentKind::kCheckSuite}) {
    if (to_string(k) == name) return k;
  }
  rd.fail("experiment", "unknown experiment '" + name + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(ErrorCode::kConfigParse, source + ":" + std::to_string(line) + ": " + e.what());
  }
  ConfigReader rd(text, source);
  if (!j.is_object()) throw Error(ErrorCode::kConfigParse, source + ":1: top level must be an object");
  if (!j.contains("experiment")) throw Error(ErrorCode::kConfigParse, source + ": missing field 'experiment'");

  ExperimentConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "experiment") {
      c.experiment = experiment_from_string(rd, rd.string(v, key));
    } else if (key == "seed") {
      const long long s = rd.integer(v, key);
      if (s < 0) rd.fail(key, "must be nonnegative");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "dims") {
      if (!v.is_object()) rd.fail(key, "expected an object with p, m, r, s");
      for (const auto& [dk, dv] : v.items()) {
        const long long x = rd.integer(dv, dk);
        if (dk == "p") c.p = x;
        else if (dk == "m") c.m = x;
        else if (dk == "r") c.r = x;
        else if (dk == "s") c.s = x;
        else rd.fail(dk, "unknown dimension (expected p, m, r or s)");
      }
    } else if (key == "gains") {
      if (!v.is_array() || v.empty()) rd.fail(key, "expected a nonempty array of numbers");
      c.gains.clear();
      for (const auto& g : v) c.gains.push_back(rd.number(g, key));
    } else if (key == "theta") {
      c.theta = rd.number(v, key);
    } else if (key == "horizon_T") {
      c.horizon_T = rd.number(v, key);
    } else if (key == "output_dir") {
      c.output_dir = rd.string(v, key);
    } else if (key == "scheme") {
      const std::string name = rd.string(v, key);
      if (name == "euler") c.scheme = Scheme::kEuler;
      else if (name == "rk4") c.scheme = Scheme::kRk4;
      else rd.fail(key, "expected \"euler\" or \"rk4\"");
    } else if (key == "kappa") {
      c.kappa = rd.number(v, key);
    } else if (key == "fields") {
      if (!v.is_array()) rd.fail(key, "expected an array of field names");
      for (const auto& f : v) {
        try {
          c.fields.push_back(field_kind_from_string(rd.string(f, key)));
        } catch (const Error& e) {
          if (e.code() == ErrorCode::kConfigParse) throw;
          rd.fail(key, e.what());
        }
      }
    } else if (key == "initial_points") {
      c.initial_points = static_cast<int>(rd.integer(v, key));
    } else if (key == "instances") {
      c.instances = static_cast<int>(rd.integer(v, key));
    } else if (key == "inject_sign_flip") {
      c.inject_sign_flip = rd.boolean(v, key);
    } else if (key == "jobs") {
      c.jobs = static_cast<int>(rd.integer(v, key));
    } else if (key == "instance") {
      if (!v.is_object()) rd.fail(key, "expected an object");
      c.instance_json = v.dump();
      try {
        (void)instance_from_json(*c.instance_json);
      } catch (const Error& e) {
        rd.fail(key, e.what());
      }
    } else {
      rd.fail(key, "unknown field");
    }
  }
  try {
    validate_config(c);
  } catch (const Error& e) {
    // validate_config already reports ConfigParse; prepend the source only.
    const std::string what = e.what();
    const std::string prefix = std::string(to_string(ErrorCode::kConfigParse)) + ": ";
    throw Error(ErrorCode::kConfigParse,
                source + ": " + (what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what));
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path), path.string());
}

void validate_config(const ExperimentConfig& c) {
  auto bad = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::kConfigParse, "field '" + field + "': " + why);
  };
  if (c.gains.empty()) bad("gains", "at least one gain is required");
  for (double g : c.gains) {
    if (!(g > 0.0) || !std::isfinite(g)) bad("gains", "every gain must be positive");
  }
  if (!(c.theta > 0.0 && c.theta <= 0.5)) {
    bad("theta", "must lie in (0, 0.5] for the explicit step bound h <= 0.5 K / nu");
  }
  if (!(c.horizon_T > 0.0) || !std::isfinite(c.horizon_T)) bad("horizon_T", "must be positive");
  if (c.p < 1) bad("dims", "p must be >= 1");
  if (c.m < 0) bad("dims", "m must be >= 0 (0 selects 2 p)");
  if (c.r < 0 || c.s < 0) bad("dims", "r and s must be >= 0");
  if (c.experiment == ExperimentKind::kSaddle && c.s < 1 && !c.instance_json) bad("dims", "saddle needs s >= 1");
  if (c.experiment == ExperimentKind::kCounterexample && !(c.kappa > 0.5 && c.kappa < 1.0)) {
    bad("kappa", "must lie in (1/2, 1)");
  }
  if (c.initial_points < 1) bad("initial_points", "must be >= 1");
  if (c.instances < 1) bad("instances", "must be >= 1");
  if (c.jobs < 1) bad("jobs", "must be >= 1");
}

std::string resolve_output_dir(const std::string& from_config, const char* from_env,
                               const std::optional<std::string>& from_flag) {
  if (from_flag && !from_flag->empty()) return *from_flag;
  if (from_env && *from_env) return from_env;
  return from_config;
}

QpInstance experiment_instance(const ExperimentConfig& config, Index s) {
  if (config.instance_json) return instance_from_json(*config.instance_json);
  return generate_instance(config.seed, config.p, config.state_dim(), config.r, s);
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::string gain_tag(double k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "K%.6g", k);
  return buf;
}

std::vector<double> sorted_gains(const ExperimentConfig& c) {
  std::vector<double> g = c.gains;
  std::sort(g.begin(), g.end(), std::greater<double>());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

FieldSpec make_qp_field(FieldKind kind, const std::shared_ptr<const QpInstance>& inst, double k, bool flip) {
  FieldSpec f = [&] {
    switch (kind) {
      case FieldKind::kPenaltyGradient: return FieldSpec::penalty_gradient(inst, k);
      case FieldKind::kAwGradient: return FieldSpec::aw_gradient(inst, k);
      case FieldKind::kAwNewton: return FieldSpec::aw_newton(inst, k);
      case FieldKind::kAwSaddle: return FieldSpec::aw_saddle(inst, k);
      case FieldKind::kCustom: break;
    }
    throw Error(ErrorCode::kInvalidArgument, "custom fields cannot be built from a config");
  }();
  if (flip) f.antiwindup_sign = -1.0;
  return f;
}

// Collects checks, output files and the JSON report of one run.
class Run {
 public:
  explicit Run(const ExperimentConfig& c) : config_(c), dir_(c.output_dir) {
    report_["schema_version"] = kReportSchemaVersion;
    report_["experiment"] = std::string(to_string(c.experiment));
    report_["seed"] = c.seed;
    report_["config"] = {{"p", c.p},         {"m", c.state_dim()},         {"r", c.r},
                         {"s", c.s},         {"gains", c.gains},           {"theta", c.theta},
                         {"horizon_T", c.horizon_T}, {"scheme", std::string(to_string(c.scheme))}};
  }

  void check(const std::string& name, bool passed, const std::string& detail) {
    checks_.push_back({name, passed, detail});
  }

  void line(const std::string& text) { summary_ += text + "\n"; }

  void write_trajectory(const std::string& stem, const Trajectory& t) {
    files_.push_back(awpds::write_trajectory(dir_, stem, t, config_.seed));
  }

  void write_file(const std::string& name, const std::string& content) {
    const std::filesystem::path path = dir_ / name;
    write_text_file(path, content);
    files_.push_back(path);
  }

  json& results() { return report_["results"]; }

  RunOutcome finish(const std::string& report_name) {
    RunOutcome out;
    json checks = json::array();
    bool all = true;
    for (const auto& c : checks_) {
      checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
      all = all && c.passed;
      summary_ += std::string(c.passed ? "PASS " : "FAIL ") + c.name + ": " + c.detail + "\n";
    }
    report_["checks"] = checks;
    report_["passed"] = all;
    out.report_json = report_.dump(2) + "\n";
    write_file(report_name, out.report_json);
    write_file("summary.txt", summary_);
    out.exit_status = all ? 0 : 1;
    out.checks = checks_;
    out.files = files_;
    out.summary = summary_;
    return out;
  }

 private:
  const ExperimentConfig& config_;
  std::filesystem::path dir_;
  json report_;
  std::vector<CheckResult> checks_;
  std::vector<std::filesystem::path> files_;
  std::string summary_;
};

json vec_json(const std::vector<double>& v) { return json(v); }

// Shared body of gradient_comparison and convergence_sweep.
void run_sweeps(const ExperimentConfig& c, Run& run, bool sweep_checks) {
  auto inst = std::make_shared<const QpInstance>(experiment_instance(c, 0));
  const SteadyStateOptimum opt = solve_steady_state_qp(*inst, false);
  const std::vector<double> gains = sorted_gains(c);
  std::vector<FieldKind> kinds = c.fields;
  if (kinds.empty()) kinds = {FieldKind::kPenaltyGradient, FieldKind::kAwGradient, FieldKind::kAwNewton};

  SweepRule rule;
  rule.theta = c.theta;
  rule.horizon_T = c.horizon_T;
  rule.scheme = c.scheme;
  rule.jobs = c.jobs;

  run.line(std::string(to_string(c.experiment)) + ": p=" + std::to_string(inst->input_dim()) +
           " m=" + std::to_string(inst->state_dim()) + " r=" + std::to_string(inst->input_set().constraint_count()) +
           " (including box rows), T=" + fmt(c.horizon_T));
  for (FieldKind kind : kinds) {
    if (kind == FieldKind::kAwSaddle || kind == FieldKind::kCustom) {
      throw Error(ErrorCode::kInvalidArgument, "sweeps support penalty_gradient, aw_gradient and aw_newton");
    }
    const std::string name(to_string(kind));
    const ConvergenceReport rep = convergence_sweep(
        [&](double k) { return make_qp_field(kind, inst, k, c.inject_sign_flip); },
        inst->input_set().witness(), gains, rule);

    run.write_trajectory(name + "_reference", rep.reference);
    json cells = json::array();
    bool tube = true, speed = true;
    for (std::size_t i = 0; i < gains.size(); ++i) {
      const Trajectory& t = rep.trajectories[i];
      run.write_trajectory(name + "_" + gain_tag(gains[i]), t);
      const double err = (t.final_projected() - opt.u).norm();
      cells.push_back({{"K", gains[i]},
                       {"h", t.step_h},
                       {"sup_distance", rep.sup_distances[i]},
                       {"raw_offset", rep.raw_offsets[i]},
                       {"projected_offset", rep.projected_offsets[i]},
                       {"final_projected_error", err},
                       {"termination", std::string(to_string(t.termination))},
                       {"tube_passed", static_cast<bool>(rep.tube_passed[i])},
                       {"speed_passed", static_cast<bool>(rep.speed_passed[i])}});
      tube = tube && rep.tube_passed[i] && t.termination == Termination::kHorizonReached;
      speed = speed && rep.speed_passed[i];
      run.line("  " + name + " K=" + fmt(gains[i]) + ": sup|P z - u_pds| = " + fmt(rep.sup_distances[i]) +
               ", final |P z - u*| = " + fmt(err) + ", raw offset = " + fmt(rep.raw_offsets[i]));
    }
    run.results()[name] = {{"cells", cells},
                           {"fitted_order", rep.fitted_order},
                           {"order_valid", rep.order_valid},
                           {"monotone", rep.monotone_flag},
                           {"reference_step", rep.reference_step},
                           {"reference_final_error", (rep.reference.final_state() - opt.u).norm()}};
    run.check(name + ".tube", tube, "max_t d_Z <= K M / mu + C h on every run");
    run.check(name + ".speed", speed, "|dz|/h <= (1 + nu/mu) M + 1e-6 on every run");
    if (!sweep_checks) continue;
    if (kind == FieldKind::kPenaltyGradient) {
      bool ok = true;
      for (std::size_t i = 0; i < gains.size(); ++i) {
        ok = ok && rep.raw_offsets[i] > 0.0 && (i == 0 || rep.raw_offsets[i] < rep.raw_offsets[i - 1]);
      }
      run.check(name + ".raw_offset", ok, "raw-state offset positive and decreasing in K");
    } else {
      run.check(name + ".monotone", rep.monotone_flag,
                "sup distances nonincreasing within factor 1.1, order " + fmt(rep.fitted_order));
    }
  }
  run.results()["optimizer"] = detail::vector_to_json(opt.u);
}

void run_saddle(const ExperimentConfig& c, Run& run) {
  auto inst = std::make_shared<const QpInstance>(experiment_instance(c, c.s));
  const Index p = inst->input_dim();
  const Index s = inst->state_constraint_count();
  const SteadyStateOptimum opt = solve_steady_state_qp(*inst, true);
  const std::vector<double> gains = sorted_gains(c);
  std::vector<Trajectory> trajs(gains.size());
  parallel_for(static_cast<int>(gains.size()), c.jobs, [&](int i) {
    const FieldSpec f = make_qp_field(FieldKind::kAwSaddle, inst, gains[static_cast<std::size_t>(i)], c.inject_sign_flip);
    IntegratorConfig cfg;
    cfg.scheme = c.scheme;
    cfg.step_h = c.theta * f.gain_K;
    cfg.horizon_T = c.horizon_T;
    Vector z0 = Vector::Zero(p + s);
    z0.head(p) = inst->input_set().witness();
    trajs[static_cast<std::size_t>(i)] = integrate_awa(f, z0, cfg);
  });
  run.line("saddle: p=" + std::to_string(p) + " m=" + std::to_string(inst->state_dim()) + " s=" + std::to_string(s));
  json cells = json::array();
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const Trajectory& t = trajs[i];
    const double k = gains[i];
    run.write_trajectory("saddle_" + gain_tag(k), t);
    std::string trace = "t,kkt_residual\n";
    double final_kkt = 0.0;
    for (Index n = 0; n < t.size(); ++n) {
      const Vector z = t.state(n), zb = t.projected(n);
      const Vector eta = (z.head(p) - zb.head(p)) / k;
      const Vector y = recover_input_duals(*inst, zb.head(p), eta);
      final_kkt = kkt_residual(*inst, zb.head(p), y, Vector(zb.tail(s)));
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", t.times(n), final_kkt);
      trace += buf;
    }
    run.write_file("saddle_" + gain_tag(k) + "_kkt.csv", trace);
    const double min_dual = t.states.rightCols(s).minCoeff();
    const double err = (t.final_projected().head(p) - opt.u).norm();
    const TubeCheck tube = check_tube(t);
    cells.push_back({{"K", k}, {"final_kkt_residual", final_kkt}, {"min_dual", min_dual},
                     {"final_error", err}, {"tube_passed", tube.passed}});
    run.line("  K=" + fmt(k) + ": final KKT residual " + fmt(final_kkt) + ", |u_bar - u*| = " + fmt(err));
    run.check("saddle." + gain_tag(k) + ".kkt", final_kkt <= 1e-6, "final KKT residual " + fmt(final_kkt) + " <= 1e-6");
    run.check("saddle." + gain_tag(k) + ".duals", min_dual >= 0.0, "min dual iterate " + fmt(min_dual) + " >= 0");
    run.check("saddle." + gain_tag(k) + ".tube", tube.passed && t.termination == Termination::kHorizonReached,
              "max d_Z " + fmt(tube.max_distance) + " <= " + fmt(tube.bound));
  }
  run.results()["cells"] = cells;
  run.results()["optimizer"] = detail::vector_to_json(opt.u);
}

void run_counterexample_experiment(const ExperimentConfig& c, Run& run) {
  const std::vector<double> gains = sorted_gains(c);
  std::vector<CounterexampleResult> res(gains.size());
  parallel_for(static_cast<int>(gains.size()), c.jobs, [&](int i) {
    const double k = gains[static_cast<std::size_t>(i)];
    IntegratorConfig cfg;
    cfg.scheme = c.scheme;
    cfg.step_h = c.theta * k;
    cfg.horizon_T = c.horizon_T;
    res[static_cast<std::size_t>(i)] = run_counterexample(c.kappa, k, cfg);
  });
  run.line("counterexample: kappa=" + fmt(c.kappa) + ", f = (1, 0), M = nu = mu = 1");
  json cells = json::array();
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const CounterexampleResult& r = res[i];
    const std::string tag = gain_tag(gains[i]);
    run.write_trajectory("cusp_" + tag, r.trajectory);
    run.write_trajectory("control_" + tag, r.control);
    cells.push_back({{"K", gains[i]},
                     {"z0", detail::vector_to_json(r.report.z0)},
                     {"M", r.report.M},
                     {"mu", r.report.mu},
                     {"nu", r.report.nu},
                     {"max_distance", r.report.max_distance},
                     {"max_distance_time", r.report.max_distance_time},
                     {"violated", r.report.violated},
                     {"exit_time", r.report.exit_time ? json(*r.report.exit_time) : json(nullptr)},
                     {"control_max_distance", r.control_report.max_distance},
                     {"control_violated", r.control_report.violated}});
    run.line("  K=" + fmt(gains[i]) + ": max d_Z = " + fmt(r.report.max_distance) +
             (r.report.exit_time ? ", leaves Z + K B at t = " + fmt(*r.report.exit_time) : ", stays in the tube") +
             "; control max d_Z = " + fmt(r.control_report.max_distance));
    run.check("counterexample." + tag + ".exit", r.report.violated, "cusp trajectory leaves the tube");
    run.check("counterexample." + tag + ".control", !r.control_report.violated, "convex control stays in the tube");
  }
  run.results()["cells"] = cells;
}

void run_stability(const ExperimentConfig& c, Run& run) {
  auto inst = std::make_shared<const QpInstance>(experiment_instance(c, 0));
  const SteadyStateOptimum opt = solve_steady_state_qp(*inst, false);
  const auto [beta, L] = estimate_monotonicity_constants(*inst);
  const double threshold = monotonicity_threshold(beta, L, 0.0);
  const std::vector<double> gains = sorted_gains(c);

  const Index p = inst->input_dim();
  std::vector<Vector> grid{inst->input_set().witness()};
  std::mt19937_64 rng(c.seed ^ 0x5eedULL);
  std::uniform_real_distribution<double> box(-3.0, 3.0);
  while (static_cast<int>(grid.size()) < c.initial_points) {
    Vector v(p);
    for (Index i = 0; i < p; ++i) v(i) = box(rng);
    grid.push_back(v);
  }
  SweepRule rule;
  rule.theta = c.theta;
  rule.horizon_T = c.horizon_T;
  rule.scheme = c.scheme;
  rule.jobs = c.jobs;
  const std::string basin = "witness of U plus " + std::to_string(c.initial_points - 1) + " points uniform in [-3, 3]^p";

  std::vector<FieldKind> kinds = c.fields;
  if (kinds.empty()) kinds = {FieldKind::kAwGradient, FieldKind::kPenaltyGradient};
  run.line("stability_envelope: 4 beta / L^2 = " + fmt(threshold) + ", basin: " + basin);
  for (FieldKind kind : kinds) {
    const std::string name(to_string(kind));
    const StabilityEnvelope env = stability_envelope(
        [&](double k) { return make_qp_field(kind, inst, k, c.inject_sign_flip); }, opt.u, gains, grid, rule, basin);
    run.results()[name] = {{"gains", vec_json(env.gains)},
                           {"offsets_zeta", vec_json(env.offsets_zeta)},
                           {"monotone", env.monotone_flag}};
    for (std::size_t i = 0; i < gains.size(); ++i) {
      run.line("  " + name + " K=" + fmt(gains[i]) + ": tail offset " + fmt(env.offsets_zeta[i]));
    }
    if (kind == FieldKind::kPenaltyGradient) {
      bool positive = true;
      for (double z : env.offsets_zeta) positive = positive && z > 0.0;
      run.check(name + ".offsets", positive && env.monotone_flag,
                "offsets positive and nonincreasing within factor 1.1");
    } else if (kind == FieldKind::kAwGradient) {
      bool ok = true;
      for (std::size_t i = 0; i < gains.size(); ++i) {
        if (gains[i] < threshold) ok = ok && env.offsets_zeta[i] <= 1e-6;
      }
      run.check(name + ".exact", ok, "offsets <= 1e-6 for every K below 4 beta / L^2");
    } else {
      run.check(name + ".envelope", env.monotone_flag, "offsets nonincreasing within factor 1.1");
    }
  }
  run.results()["threshold_K"] = threshold;
  run.results()["beta"] = beta;
  run.results()["lipschitz_L"] = L;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  if (config.experiment == ExperimentKind::kCheckSuite) return run_checks(config);
  Run run(config);
  switch (config.experiment) {
    case ExperimentKind::kGradientComparison: run_sweeps(config, run, false); break;
    case ExperimentKind::kConvergenceSweep: run_sweeps(config, run, true); break;
    case ExperimentKind::kSaddle: run_saddle(config, run); break;
    case ExperimentKind::kCounterexample: run_counterexample_experiment(config, run); break;
    case ExperimentKind::kStabilityEnvelope: run_stability(config, run); break;
    case ExperimentKind::kCheckSuite: break;
  }
  return run.finish("report.json");
}

// ---------------------------------------------------------------------------
// Invariant suite

namespace {

Matrix random_spd(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix b(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) b(i, j) = normal(rng);
  Matrix g = b * b.transpose() / static_cast<double>(n) + 0.5 * Matrix::Identity(n, n);
  return 0.5 * (g + g.transpose());
}

Vector random_vector(Index n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = scale * normal(rng);
  return v;
}

CheckResult family_projection_oracle(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 6), rows(0, 10);
  std::uniform_real_distribution<double> slack(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Index n = dim(rng), r = rows(rng);
    Matrix a(r, n);
    for (Index i = 0; i < r; ++i) a.row(i) = random_vector(n, 1.0, rng).transpose();
    const Vector x0 = random_vector(n, 1.0, rng);
    Vector b = a * x0;
    for (Index i = 0; i < r; ++i) b(i) += slack(rng);
    const QpSpec spec{Metric(random_spd(n, rng)), random_vector(n, 2.0, rng), a, b, false};
    const QpSolution fast = solve_projection(spec);
    const QpSolution slow = brute_force_projection(spec);
    worst = std::max(worst, (fast.minimizer - slow.minimizer).norm());
  }
  return {"projection_oracle", worst <= 1e-8, "200 specs, max |active set - enumeration| = " + fmt(worst)};
}

CheckResult family_moreau(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 1);
  std::uniform_int_distribution<int> dim(1, 6);
  double orth = 0.0, excess = -1.0, polar = -1.0;
  bool ok = true;
  for (int t = 0; t < 500; ++t) {
    const Index n = dim(rng);
    std::uniform_int_distribution<int> rows(0, static_cast<int>(n) + 2);
    const Index k = rows(rng);
    TangentCone cone;
    cone.base_point = Vector::Zero(n);
    cone.generators_matrix.resize(k, n);
    for (Index i = 0; i < k; ++i) {
      const Vector row = random_vector(n, 1.0, rng);
      cone.generators_matrix.row(i) = row.transpose() / row.norm();
      cone.active_indices.push_back(static_cast<int>(i));
    }
    const Metric g(random_spd(n, rng));
    const Vector w = random_vector(n, 1.0, rng);
    const ObliqueResult res = project_cone_oblique(cone, w, g);
    std::vector<Vector> rays = cone_extreme_rays(cone).value_or(sample_cone_rays(cone, 64, rng));
    const MoreauCheck mc = check_moreau_decomposition(cone, w, g, res, rays);
    ok = ok && mc.passed();
    orth = std::max(orth, mc.orthogonality);
    excess = std::max(excess, mc.norm_excess);
    polar = std::max(polar, mc.polar_violation);
  }
  return {"moreau_contract", ok,
          "500 cones, orthogonality " + fmt(orth) + ", norm excess " + fmt(excess) + ", polar " + fmt(polar)};
}

CheckResult family_finite_difference(const QpInstance& inst, std::uint64_t seed) {
  std::mt19937_64 rng(seed + 2);
  const Index p = inst.input_dim();
  const double step = 1e-6;
  double worst_grad = 0.0, worst_dist = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Vector u = random_vector(p, 1.5, rng);
    Vector fd(p), fd_d(p);
    for (Index i = 0; i < p; ++i) {
      Vector up = u, um = u;
      up(i) += step;
      um(i) -= step;
      fd(i) = (inst.reduced_objective(up) - inst.reduced_objective(um)) / (2 * step);
      const double dp = inst.input_set().distance(up), dm = inst.input_set().distance(um);
      fd_d(i) = (0.5 * dp * dp - 0.5 * dm * dm) / (2 * step);
    }
    const Vector g = inst.reduced_gradient(u);
    worst_grad = std::max(worst_grad, (g - fd).norm() / std::max(1.0, g.norm()));
    const Vector r = u - inst.input_set().project(u).nearest;
    worst_dist = std::max(worst_dist, (r - fd_d).norm() / std::max(1.0, r.norm()));
  }
  return {"finite_difference", worst_grad <= 1e-5 && worst_dist <= 1e-5,
          "rel. error: reduced gradient " + fmt(worst_grad) + ", d^2/2 gradient " + fmt(worst_dist)};
}

CheckResult family_tube(const ExperimentConfig& c, const std::shared_ptr<const QpInstance>& inst) {
  const std::vector<double> gains = sorted_gains(c);
  const std::vector<FieldKind> kinds{FieldKind::kPenaltyGradient, FieldKind::kAwGradient, FieldKind::kAwNewton};
  const int cells = static_cast<int>(gains.size() * kinds.size());
  std::vector<char> pass(static_cast<std::size_t>(cells), 0);
  std::vector<double> ratio(static_cast<std::size_t>(cells), 0.0);
  parallel_for(cells, c.jobs, [&](int i) {
    const FieldKind kind = kinds[static_cast<std::size_t>(i) % kinds.size()];
    const double k = gains[static_cast<std::size_t>(i) / kinds.size()];
    const FieldSpec f = make_qp_field(kind, inst, k, c.inject_sign_flip);
    IntegratorConfig cfg;
    cfg.scheme = c.scheme;
    cfg.step_h = c.theta * k / f.metric.inverse_max_eigenvalue();
    cfg.horizon_T = std::min(c.horizon_T, 5.0);
    // Two starts: the witness and a point halfway into the tube outside U.
    const PolyhedralSet& U = inst->input_set();
    const Vector far = U.witness() + Vector::Constant(U.dimension(), 10.0);
    const Vector edge = U.project(far).nearest;
    const double d0 = 0.5 * k * pds_drift(f, edge).norm() / f.metric.inverse_min_eigenvalue();
    const Vector outside = edge + d0 * (far - edge).normalized();
    bool ok = true;
    double worst = 0.0;
    for (const Vector& z0 : {U.witness(), outside}) {
      const Trajectory t = integrate_awa(f, z0, cfg);
      const TubeCheck tube = check_tube(t);
      const SpeedCheck speed = check_speed(t);
      ok = ok && t.termination == Termination::kHorizonReached && tube.passed && speed.passed;
      worst = std::max(worst, tube.bound > 0 ? tube.max_distance / tube.bound : 0.0);
    }
    pass[static_cast<std::size_t>(i)] = ok;
    ratio[static_cast<std::size_t>(i)] = worst;
  });
  const bool ok = std::all_of(pass.begin(), pass.end(), [](char x) { return x != 0; });
  return {"tube_speed", ok,
          std::to_string(2 * cells) + " runs, worst d_Z / bound = " + fmt(*std::max_element(ratio.begin(), ratio.end()))};
}

CheckResult family_equilibrium(const ExperimentConfig& c) {
  double worst = 0.0;
  bool ok = true;
  for (int i = 0; i < c.instances; ++i) {
    auto inst = std::make_shared<const QpInstance>(generate_instance(c.seed * 1000 + static_cast<std::uint64_t>(i), 4, 8, 8, 0));
    const SteadyStateOptimum opt = solve_steady_state_qp(*inst, false);
    for (FieldKind kind : {FieldKind::kAwGradient, FieldKind::kAwNewton}) {
      const FieldSpec f = make_qp_field(kind, inst, 0.1, false);
      try {
        const Vector z = construct_awa_equilibrium(f, opt.u);
        worst = std::max(worst, equilibrium_residual(f, z));
      } catch (const Error& e) {
        ok = false;
      }
    }
  }
  ok = ok && worst <= 1e-10;
  return {"equilibrium_residual", ok, std::to_string(c.instances) + " instances, max |F_K(z*_K)| = " + fmt(worst)};
}

CheckResult family_monotonicity(const std::shared_ptr<const QpInstance>& inst, std::uint64_t seed) {
  const auto [beta, L] = estimate_monotonicity_constants(*inst);
  const double k = 0.5 * monotonicity_threshold(beta, L, 0.0);
  const FieldSpec f = FieldSpec::aw_gradient(inst, k);
  std::mt19937_64 rng(seed + 3);
  double worst = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < 1000; ++t) {
    const Vector z = random_vector(inst->input_dim(), 2.0, rng);
    const Vector zp = random_vector(inst->input_dim(), 2.0, rng);
    worst = std::max(worst, (z - zp).dot(eval_field(f, z).dz - eval_field(f, zp).dz));
  }
  return {"monotonicity_pairs", worst <= 1e-10, "1000 pairs at K = " + fmt(k) + ", max <dz, dF> = " + fmt(worst)};
}

}  // namespace

RunOutcome run_checks(const ExperimentConfig& config) {
  validate_config(config);
  Run run(config);
  auto inst = std::make_shared<const QpInstance>(experiment_instance(config, 0));
  std::vector<std::function<CheckResult()>> families{
      [&] { return family_projection_oracle(config.seed); },
      [&] { return family_moreau(config.seed); },
      [&] { return family_finite_difference(*inst, config.seed); },
      [&] { return family_tube(config, inst); },
      [&] { return family_equilibrium(config); },
      [&] { return family_monotonicity(inst, config.seed); },
  };
  std::vector<CheckResult> results(families.size());
  parallel_for(static_cast<int>(families.size()), config.jobs,
               [&](int i) { results[static_cast<std::size_t>(i)] = families[static_cast<std::size_t>(i)](); });
  run.line("check_suite: seed " + std::to_string(config.seed) + (config.inject_sign_flip ? " (sign flip injected)" : ""));
  for (const auto& r : results) run.check(r.name, r.passed, r.detail);
  return run.finish("checks.json");
}

}  // namespace awpds
