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

#include <gtest/gtest.h>

#include <limits>
#include <random>
#include <sstream>

#include "kdprobe/csv.hpp"
#include "kdprobe/error.hpp"

namespace kdprobe::csv {
namespace {

TEST(Csv, DoubleFormattingRoundTrips) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<double>(rng() % 40) - 20.0);
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(parse_double(format_double(std::numeric_limits<double>::denorm_min())),
            std::numeric_limits<double>::denorm_min());
}

TEST(Csv, StrictNumberParsing) {
  EXPECT_THROW(parse_double("1.5x"), Error);
  EXPECT_THROW(parse_double(""), Error);
  EXPECT_THROW(parse_uint("-1"), Error);
  EXPECT_THROW(parse_uint("12 "), Error);
  EXPECT_EQ(parse_int("-12"), -12);
  EXPECT_EQ(parse_uint("18446744073709551615"), 18446744073709551615ull);
}

TEST(Csv, QuotingRoundTrip) {
  std::stringstream ss;
  const std::vector<std::string> header{"a", "b"};
  const std::vector<std::string> row{"x,y", "say \"hi\"\nbye"};
  write_row(ss, header);
  write_row(ss, row);
  const auto t = read_table(ss);
  EXPECT_EQ(t.header, header);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0], row);
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_FALSE(t.has_column("c"));
  EXPECT_THROW(t.column("c"), Error);
}

TEST(Csv, RaggedRowIsSchemaViolation) {
  std::stringstream ss("a,b\r\n1\r\n");
  try {
    read_table(ss);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaViolation);
  }
}

}  // namespace
}  // namespace kdprobe::csv
