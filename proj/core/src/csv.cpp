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

#include "kdprobe/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "kdprobe/error.hpp"

namespace kdprobe::csv {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  require(ec == std::errc(), ErrorCode::kInvalidArgument, "cannot format double");
  return std::string(buf, end);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && end == s.data() + s.size(), ErrorCode::kSchemaViolation,
          "not a number: '" + std::string(s) + "'");
  return v;
}

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && end == s.data() + s.size(), ErrorCode::kSchemaViolation,
          "not an integer: '" + std::string(s) + "'");
  return v;
}

std::uint64_t parse_uint(std::string_view s) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && end == s.data() + s.size(), ErrorCode::kSchemaViolation,
          "not an unsigned integer: '" + std::string(s) + "'");
  return v;
}

void write_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out << f;
      continue;
    }
    out << '"';
    for (char c : f) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  }
  out << "\r\n";
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  fail(ErrorCode::kSchemaViolation, "missing CSV column '" + std::string(name) + "'");
}

bool Table::has_column(std::string_view name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

namespace {

// Parses one record; returns false at clean end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  int c = in.get();
  if (c == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool field_started_quoted = false;
  for (;; c = in.get()) {
    if (c == std::char_traits<char>::eof()) {
      require(!quoted, ErrorCode::kSchemaViolation, "unterminated quoted CSV field");
      fields.push_back(std::move(field));
      return true;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && field.empty() && !field_started_quoted) {
      quoted = true;
      field_started_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_started_quoted = false;
    } else if (ch == '\r' || ch == '\n') {
      if (ch == '\r' && in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else {
      require(!field_started_quoted, ErrorCode::kSchemaViolation,
              "characters after closing quote in CSV field");
      field.push_back(ch);
    }
  }
}

}  // namespace

Table read_table(std::istream& in) {
  Table t;
  require(read_record(in, t.header), ErrorCode::kSchemaViolation, "CSV has no header row");
  if (!t.header.empty() && t.header[0].starts_with("\xEF\xBB\xBF")) {
    t.header[0].erase(0, 3);
  }
  std::vector<std::string> rec;
  std::size_t line = 1;
  while (read_record(in, rec)) {
    ++line;
    if (rec.size() == 1 && rec[0].empty()) continue;  // blank line
    require(rec.size() == t.header.size(), ErrorCode::kSchemaViolation,
            "CSV record " + std::to_string(line) + " has " + std::to_string(rec.size()) +
                " fields, expected " + std::to_string(t.header.size()));
    t.rows.push_back(rec);
  }
  return t;
}

}  // namespace kdprobe::csv
