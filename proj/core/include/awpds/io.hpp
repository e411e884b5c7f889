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
#include <string>

#include "awpds/dynamics.hpp"
#include "awpds/flows.hpp"

namespace awpds {

inline constexpr int kReportSchemaVersion = 1;

/// Columns t, z_1..z_n, zbar_1..zbar_n, d_Z, step_norm; values in %.17g so
/// that a read followed by a write reproduces the file byte for byte.
std::string trajectory_to_csv(const Trajectory& traj);

/// Inverse of trajectory_to_csv. The drift and field norms are not stored,
/// so the result has has_diagnostics = false.
Trajectory trajectory_from_csv(const std::string& text);

/// JSON metadata: scheme, field, h, K, mu, nu, seed, samples, termination.
std::string trajectory_metadata_json(const Trajectory& traj, std::uint64_t seed);

/// Instance data with matrices as {"shape": [r, c], "data": [row-major]}.
std::string instance_to_json(const QpInstance& instance);
QpInstance instance_from_json(const std::string& text);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

/// Writes <stem>.csv and <stem>.json; returns the CSV path.
std::filesystem::path write_trajectory(const std::filesystem::path& dir, const std::string& stem,
                                       const Trajectory& traj, std::uint64_t seed);

}  // namespace awpds
