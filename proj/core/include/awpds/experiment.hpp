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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "awpds/dynamics.hpp"
#include "awpds/flows.hpp"

namespace awpds {

enum class ExperimentKind {
  kGradientComparison,
  kSaddle,
  kCounterexample,
  kConvergenceSweep,
  kStabilityEnvelope,
  kCheckSuite,
};

std::string_view to_string(ExperimentKind kind);

/// Parsed experiment file. Keys absent from the file keep these defaults.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kCheckSuite;
  std::uint64_t seed = 0;
  Index p = 10;
  Index m = 0;  // 0 selects 2 p
  Index r = 30;
  Index s = 0;
  std::vector<double> gains = {0.2, 0.1, 0.05};
  double theta = 0.1;
  double horizon_T = 10.0;
  std::string output_dir = "awpds_out";
  Scheme scheme = Scheme::kEuler;
  double kappa = 0.75;
  std::vector<FieldKind> fields;  // empty selects the experiment default
  int initial_points = 4;         // stability_envelope grid size
  int instances = 50;             // check_suite equilibrium family
  bool inject_sign_flip = false;  // mutation hook: flips the anti-windup sign
  std::optional<std::string> instance_json;  // explicit instance instead of a generated one
  int jobs = 1;

  Index state_dim() const { return m > 0 ? m : 2 * p; }
};

/// Throws ConfigParse with the line and field of the first problem.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigParse for gains <= 0, theta outside (0, 0.5], or bad dims.
void validate_config(const ExperimentConfig& config);

/// --output-dir flag, then the AWPDS_OUTPUT_DIR variable, then the file.
std::string resolve_output_dir(const std::string& from_config, const char* from_env,
                               const std::optional<std::string>& from_flag);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunOutcome {
  int exit_status = 0;  // 0 iff every check passed
  std::vector<CheckResult> checks;
  std::vector<std::filesystem::path> files;
  std::string summary;
  std::string report_json;
};

/// Runs the configured experiment and writes CSVs, report.json and
/// summary.txt into config.output_dir.
RunOutcome run_experiment(const ExperimentConfig& config);

/// Runs the invariant suite; writes checks.json into config.output_dir.
RunOutcome run_checks(const ExperimentConfig& config);

/// The instance an experiment works on: the explicit one or a generated one.
QpInstance experiment_instance(const ExperimentConfig& config, Index s);

}  // namespace awpds
