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

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kdprobe::csv {

// Shortest decimal that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);
std::uint64_t parse_uint(std::string_view s);

// RFC-4180 field quoting; fields containing , " CR or LF are quoted.
void write_row(std::ostream& out, std::span<const std::string> fields);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws kSchemaViolation if absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

// Reads a full RFC-4180 document with a header row. Every record must have
// the header's field count.
Table read_table(std::istream& in);

}  // namespace kdprobe::csv
