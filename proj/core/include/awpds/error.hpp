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

#include <stdexcept>
#include <string>
#include <string_view>

namespace awpds {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kInfeasible,
  kMaxIterations,
  kIllConditioned,
  kRankDeficient,
  kTooManyConstraints,
  kNumericalFailure,
  kPointNotInSet,
  kNonfiniteValue,
  kNotApplicable,
  kEigenFailure,
  kNotAnEquilibrium,
  kResidualCheckFailed,
  kStepTooLarge,
  kInitialPointInfeasible,
  kGridMismatch,
  kMissingDiagnostics,
  kConfigParse,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable error code. All library failures
/// are reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Thrown by solve_kkt_equality when the equality rows are dependent.
/// dependent_row() is the largest row index that lies in the span of the
/// rows before it.
class RankDeficientError : public Error {
 public:
  RankDeficientError(int dependent_row, const std::string& what);

  int dependent_row() const noexcept { return dependent_row_; }

 private:
  int dependent_row_;
};

}  // namespace awpds
