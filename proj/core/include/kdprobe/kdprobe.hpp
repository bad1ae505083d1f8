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

#include "kdprobe/analysis.hpp"
#include "kdprobe/corpus.hpp"
#include "kdprobe/csv.hpp"
#include "kdprobe/embed.hpp"
#include "kdprobe/error.hpp"
#include "kdprobe/kde.hpp"
#include "kdprobe/knn.hpp"
#include "kdprobe/matrix.hpp"
#include "kdprobe/parallel.hpp"
#include "kdprobe/sampling.hpp"
#include "kdprobe/synthlab.hpp"
