/*
 * Copyright 2026 The hekan Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "hekan/error.hpp"

namespace hekan {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDepthExhausted: return "DepthExhausted";
    case ErrorCode::kInputTooLong: return "InputTooLong";
    case ErrorCode::kEmptySamples: return "EmptySamples";
    case ErrorCode::kIllConditioned: return "IllConditioned";
    case ErrorCode::kRemezNonConvergence: return "RemezNonConvergence";
    case ErrorCode::kInputOutOfRange: return "InputOutOfRange";
    case ErrorCode::kPackingOverflow: return "PackingOverflow";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kInsufficientKnots: return "InsufficientKnots";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDepthBudgetInfeasible: return "DepthBudgetInfeasible";
  }
  return "Unknown";
}

}  // namespace hekan
