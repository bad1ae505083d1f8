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

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "kdprobe/error.hpp"

namespace kdprobe::cli {

// Process exit statuses. Every failure class has its own code so scripts can
// branch without parsing messages.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitMissingInput = 3,
  kExitSchema = 4,
  kExitContradiction = 5,
  kExitCorrupt = 6,
  kExitIo = 7,
  kExitService = 8,
  kExitBusy = 9,
};

int exit_code_for(ErrorCode code) noexcept;

// Environment variable that overrides embedder.endpoint (a flag still wins).
inline constexpr const char* kEndpointEnv = "KDPROBE_EMBED_ENDPOINT";

// Runs one invocation. `args` excludes the program name. Progress and results
// go to `out`; failures produce exactly one JSON line on `err`:
//   {"error":"<code name>","exit_code":N,"message":"..."}
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kdprobe::cli
