// Copyright 2026 The kdprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kdprobe/error.hpp"

namespace kdprobe {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kMissingInput: return "missing_input";
    case ErrorCode::kSchemaViolation: return "schema_violation";
    case ErrorCode::kParameterContradiction: return "parameter_contradiction";
    case ErrorCode::kCorruptData: return "corrupt_data";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kService: return "service_error";
    case ErrorCode::kBusy: return "busy";
  }
  return "unknown";
}

}  // namespace kdprobe
