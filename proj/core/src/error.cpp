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

#include "awpds/error.hpp"

namespace awpds {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kMaxIterations: return "MaxIterations";
    case ErrorCode::kIllConditioned: return "IllConditioned";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kTooManyConstraints: return "TooManyConstraints";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kPointNotInSet: return "PointNotInSet";
    case ErrorCode::kNonfiniteValue: return "NonfiniteValue";
    case ErrorCode::kNotApplicable: return "NotApplicable";
    case ErrorCode::kEigenFailure: return "EigenFailure";
    case ErrorCode::kNotAnEquilibrium: return "NotAnEquilibrium";
    case ErrorCode::kResidualCheckFailed: return "ResidualCheckFailed";
    case ErrorCode::kStepTooLarge: return "StepTooLarge";
    case ErrorCode::kInitialPointInfeasible: return "InitialPointInfeasible";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kMissingDiagnostics: return "MissingDiagnostics";
    case ErrorCode::kConfigParse: return "ConfigParse";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code) {}

RankDeficientError::RankDeficientError(int dependent_row,
                                       const std::string& what)
    : Error(ErrorCode::kRankDeficient, what), dependent_row_(dependent_row) {}

}  // namespace awpds
