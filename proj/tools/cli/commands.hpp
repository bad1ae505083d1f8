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

#include "config.hpp"

namespace kdprobe::cli {

// Each stage reads its inputs, writes its artifacts and a manifest into
// cfg.out_dir, and reports progress lines on `log`. Errors propagate as
// kdprobe::Error.
void cmd_segment(const RunConfig& cfg, std::ostream& log);
void cmd_embed(const RunConfig& cfg, std::ostream& log);
void cmd_index(const RunConfig& cfg, std::ostream& log);
void cmd_kde(const RunConfig& cfg, std::ostream& log);
void cmd_analyze(const RunConfig& cfg, std::ostream& log);
void cmd_synth(const RunConfig& cfg, std::ostream& log);

}  // namespace kdprobe::cli
