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
#include "awpds/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "awpds/error.hpp"
#include "json_matrix.hpp"

namespace awpds {

namespace detail {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json data = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) data.push_back(v(i));
  return data;
}

Matrix matrix_from_json(const nlohmann::json& j, const std::string& field) {
  auto fail = [&](const std::string& why) { throw Error(ErrorCode::kConfigParse, "field '" + field + "': " + why); };
  if (!j.is_object() || !j.contains("shape") || !j.contains("data")) fail("expected {\"shape\": [r, c], \"data\": [...]}");
  const auto& shape = j.at("shape");
  if (!shape.is_array() || shape.size() != 2 || !shape[0].is_number_integer() || !shape[1].is_number_integer()) {
    fail("shape must be two integers");
  }
  const long long r = shape[0].get<long long>(), c = shape[1].get<long long>();
  if (r < 0 || c < 0) fail("shape must be nonnegative");
  const auto& data = j.at("data");
  if (!data.is_array() || static_cast<long long>(data.size()) != r * c) {
    fail("data must hold " + std::to_string(r * c) + " numbers");
  }
  Matrix m(r, c);
  for (long long i = 0; i < r; ++i) {
    for (long long k = 0; k < c; ++k) {
      const auto& x = data[static_cast<std::size_t>(i * c + k)];
      if (!x.is_number()) fail("entry " + std::to_string(i * c + k) + " is not a number");
      m(i, k) = x.get<double>();
    }
  }
  return m;
}

Vector vector_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array()) throw Error(ErrorCode::kConfigParse, "field '" + field + "': expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw Error(ErrorCode::kConfigParse, "field '" + field + "': entry " + std::to_string(i) + " is not a number");
    }
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

}  // namespace detail

namespace {

void append_number(std::string& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out += buf;
}

double parse_number(const std::string& cell, std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE) {
    throw Error(ErrorCode::kIo, "CSV line " + std::to_string(line) + ": bad number '" + cell + "'");
  }
  return x;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

std::string trajectory_to_csv(const Trajectory& traj) {
  const Index n = traj.dimension();
  std::string out = "t";
  for (Index i = 1; i <= n; ++i) out += ",z_" + std::to_string(i);
  for (Index i = 1; i <= n; ++i) out += ",zbar_" + std::to_string(i);
  out += ",d_Z,step_norm\n";
  for (Index k = 0; k < traj.size(); ++k) {
    append_number(out, traj.times(k));
    for (Index i = 0; i < n; ++i) {
      out += ',';
      append_number(out, traj.states(k, i));
    }
    for (Index i = 0; i < n; ++i) {
      out += ',';
      append_number(out, traj.projected_states(k, i));
    }
    out += ',';
    append_number(out, traj.dist_to_set(k));
    out += ',';
    append_number(out, traj.step_norms(k));
    out += '\n';
  }
  return out;
}

Trajectory trajectory_from_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw Error(ErrorCode::kIo, "CSV is empty");
  const std::vector<std::string> header = split(line);
  if (header.size() < 5 || (header.size() - 3) % 2 != 0 || header.front() != "t") {
    throw Error(ErrorCode::kIo, "CSV header is not a trajectory header");
  }
  const Index n = static_cast<Index>((header.size() - 3) / 2);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(ss, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kIo, "CSV line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(header.size()) + " columns");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_number(c, line_no));
    rows.push_back(std::move(row));
  }
  const Index m = static_cast<Index>(rows.size());
  Trajectory t;
  t.times.resize(m);
  t.states.resize(m, n);
  t.projected_states.resize(m, n);
  t.dist_to_set.resize(m);
  t.step_norms.resize(m);
  for (Index k = 0; k < m; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    t.times(k) = r[0];
    for (Index i = 0; i < n; ++i) {
      t.states(k, i) = r[static_cast<std::size_t>(1 + i)];
      t.projected_states(k, i) = r[static_cast<std::size_t>(1 + n + i)];
    }
    t.dist_to_set(k) = r[static_cast<std::size_t>(1 + 2 * n)];
    t.step_norms(k) = r[static_cast<std::size_t>(2 + 2 * n)];
  }
  t.step_h = m > 1 ? t.times(1) - t.times(0) : 0.0;
  t.termination_time = m > 0 ? t.times(m - 1) : 0.0;
  return t;
}

std::string trajectory_metadata_json(const Trajectory& traj, std::uint64_t seed) {
  nlohmann::json j = {
      {"schema_version", kReportSchemaVersion},
      {"scheme", std::string(to_string(traj.scheme))},
      {"field", traj.field},
      {"h", traj.step_h},
      {"K", traj.gain_K},
      {"mu", traj.mu},
      {"nu", traj.nu},
      {"seed", seed},
      {"samples", traj.size()},
      {"dimension", traj.dimension()},
      {"termination", std::string(to_string(traj.termination))},
      {"termination_time", traj.termination_time},
  };
  return j.dump(2) + "\n";
}

std::string instance_to_json(const QpInstance& instance) {
  using detail::matrix_to_json;
  using detail::vector_to_json;
  nlohmann::json j = {
      {"Q", matrix_to_json(instance.Q())},
      {"c", vector_to_json(instance.c())},
      {"d", instance.d()},
      {"H", matrix_to_json(instance.H())},
      {"w", vector_to_json(instance.w())},
      {"A_u", matrix_to_json(instance.input_set().A())},
      {"b_u", vector_to_json(instance.input_set().b())},
  };
  if (const auto& sc = instance.state_constraints()) {
    j["A_x"] = matrix_to_json(sc->A_x);
    j["b_x"] = vector_to_json(sc->b_x);
  }
  return j.dump(2) + "\n";
}

QpInstance instance_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kConfigParse, std::string("instance JSON: ") + e.what());
  }
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw Error(ErrorCode::kConfigParse, std::string("instance is missing field '") + key + "'");
    return j.at(key);
  };
  using detail::matrix_from_json;
  using detail::vector_from_json;
  Matrix Q = matrix_from_json(need("Q"), "Q");
  Vector c = vector_from_json(need("c"), "c");
  const double d = j.value("d", 0.0);
  Matrix H = matrix_from_json(need("H"), "H");
  Vector w = vector_from_json(need("w"), "w");
  PolyhedralSet U(matrix_from_json(need("A_u"), "A_u"), vector_from_json(need("b_u"), "b_u"));
  std::optional<StateConstraints> sc;
  if (j.contains("A_x")) {
    sc = StateConstraints{matrix_from_json(j.at("A_x"), "A_x"), vector_from_json(need("b_x"), "b_x")};
  }
  return QpInstance(std::move(Q), std::move(c), d, std::move(H), std::move(w), std::move(U), std::move(sc));
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "write to " + path.string() + " failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path write_trajectory(const std::filesystem::path& dir, const std::string& stem,
                                       const Trajectory& traj, std::uint64_t seed) {
  const std::filesystem::path csv = dir / (stem + ".csv");
  write_text_file(csv, trajectory_to_csv(traj));
  write_text_file(dir / (stem + ".json"), trajectory_metadata_json(traj, seed));
  return csv;
}

}  // namespace awpds
