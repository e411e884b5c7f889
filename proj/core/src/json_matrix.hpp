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

// Internal: shared JSON helpers. Requires nlohmann/json on the include path.

#include <string>

#include "json.hpp"

#include "awpds/linalg.hpp"

namespace awpds::detail {

nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json vector_to_json(const Vector& v);
/// Throws ConfigParse naming field on malformed input.
Matrix matrix_from_json(const nlohmann::json& j, const std::string& field);
Vector vector_from_json(const nlohmann::json& j, const std::string& field);

}  // namespace awpds::detail
