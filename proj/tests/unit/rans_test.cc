// Copyright 2026 The SCIC Authors
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

#include "scic/rans.h"

#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "scic/error.h"
#include "test_util.h"

namespace scic::entropy {
namespace {

using nlohmann::json;

std::vector<uint8_t> FromHex(const std::string& hex) {
  std::vector<uint8_t> out;
  for (size_t i = 0; i + 1 < hex.size(); i += 2) {
    out.push_back(static_cast<uint8_t>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  }
  return out;
}

json Vectors() {
  std::ifstream in(std::string(SCIC_TEST_DATA) + "/coder_conformance.json");
  return json::parse(in);
}

std::vector<CdfTable> TablesOf(const json& c) {
  std::vector<CdfTable> out;
  for (const json& t : c.at("tables")) {
    out.push_back(
        CdfTable::FromFrequencies(t.at("offset"), t.at("freq").get<std::vector<uint32_t>>()));
  }
  return out;
}

TEST(RansTest, EmptyStreamIsInitialState) {
  const std::vector<CdfTable> tables = {BuildGaussianCdf(1.0)};
  const auto bytes = EncodeSymbols({}, {}, tables);
  EXPECT_EQ(bytes, (std::vector<uint8_t>{0x00, 0x00, 0x80, 0x00}));
  EXPECT_TRUE(DecodeSymbols(bytes, {}, tables).empty());
}

TEST(RansTest, ConformanceVectors) {
  const json v = Vectors();
  ASSERT_EQ(v.at("format"), "scic-coder-conformance");
  int encoded = 0, rejected = 0;
  for (const json& c : v.at("cases")) {
    SCOPED_TRACE(c.at("name").get<std::string>());
    const auto tables = TablesOf(c);
    const auto contexts = c.at("contexts").get<std::vector<int32_t>>();
    const auto bytes = FromHex(c.at("bytes"));
    if (c.contains("error")) {
      if (c.at("error") == "corrupt_stream") {
        EXPECT_THROW(DecodeSymbols(bytes, contexts, tables), CorruptStreamError);
      } else {
        EXPECT_THROW(DecodeSymbols(bytes, contexts, tables), UserError);
      }
      ++rejected;
      continue;
    }
    const auto symbols = c.at("symbols").get<std::vector<int32_t>>();
    EXPECT_EQ(EncodeSymbols(symbols, contexts, tables), bytes);
    EXPECT_EQ(DecodeSymbols(bytes, contexts, tables), symbols);
    ++encoded;
  }
  EXPECT_GE(encoded, 40);
  EXPECT_GE(rejected, 6);
}

TEST(RansTest, RandomRoundTripsWithEscapes) {
  Rng rng(11);
  const auto scales = DefaultScaleTable();
  const auto tables = BuildScaleCdfs(scales);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = static_cast<int>(rng.UniformInt(0, 500));
    std::vector<int32_t> symbols(n), contexts(n);
    for (int i = 0; i < n; ++i) {
      contexts[i] = static_cast<int32_t>(rng.UniformInt(0, 63));
      const double s = scales[contexts[i]];
      symbols[i] = rng.Uniform() < 0.02 ? static_cast<int32_t>(rng.UniformInt(INT32_MIN, INT32_MAX))
                                        : static_cast<int32_t>(std::lround(rng.Normal() * s));
    }
    const auto bytes = EncodeSymbols(symbols, contexts, tables);
    ASSERT_EQ(DecodeSymbols(bytes, contexts, tables), symbols) << "trial " << trial;
    EXPECT_LE(bytes.size(), TableCodeLengthBits(symbols, contexts, tables) / 8 * 1.01 + 32);
  }
}

TEST(RansTest, CorruptionIsDetected) {
  const std::vector<CdfTable> tables = {BuildGaussianCdf(2.0)};
  std::vector<int32_t> symbols = {0, 1, -2, 3, 0, 0, 7, -1};
  std::vector<int32_t> contexts(symbols.size(), 0);
  auto bytes = EncodeSymbols(symbols, contexts, tables);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(DecodeSymbols(trailing, contexts, tables), CorruptStreamError);
  EXPECT_THROW(DecodeSymbols({bytes.data(), 3}, contexts, tables), CorruptStreamError);
  contexts.push_back(0);
  EXPECT_THROW(DecodeSymbols(bytes, contexts, tables), CorruptStreamError);
}

TEST(RansTest, ContextOutOfRange) {
  const std::vector<CdfTable> tables = {BuildGaussianCdf(2.0)};
  const std::vector<int32_t> s = {0}, c = {1};
  EXPECT_THROW(EncodeSymbols(s, c, tables), UserError);
}

TEST(CdfTableTest, LargestRemainderQuantization) {
  const std::vector<double> probs = {0.5, 0.3, 0.2 - 1e-6};
  const CdfTable t = CdfTable::FromProbabilities(-1, probs, 1e-6);
  uint64_t sum = 0;
  for (uint32_t f : t.freq) {
    EXPECT_GE(f, 1u);
    sum += f;
  }
  EXPECT_EQ(sum, kCdfTotal);
  EXPECT_EQ(t.cdf.front(), 0u);
  EXPECT_EQ(t.cdf.back(), kCdfTotal);
  // Scaled: 32768, 19660.8, 13107.13, 0.066. The floors plus the minimum of
  // one for the escape already sum to the total.
  EXPECT_EQ(t.freq, (std::vector<uint32_t>{32768, 19660, 13107, 1}));
  // Scaled: 30000.2, 20000.7, 15534.05, 1.05: one unit left, to the .7 entry.
  const std::vector<double> p2 = {30000.2 / 65536, 20000.7 / 65536, 15534.05 / 65536};
  const CdfTable t2 = CdfTable::FromProbabilities(0, p2, 1.05 / 65536);
  EXPECT_EQ(t2.freq, (std::vector<uint32_t>{30000, 20001, 15534, 1}));
}

TEST(CdfTableTest, RejectsInvalidInput) {
  EXPECT_THROW(CdfTable::FromFrequencies(0, {100, 200}), UserError);
  EXPECT_THROW(CdfTable::FromFrequencies(0, {0, kCdfTotal}), UserError);
  std::vector<double> wide(kCdfTotal, 1.0);
  EXPECT_THROW(CdfTable::FromProbabilities(0, wide, 0.0), UserError);
  const std::vector<double> unsorted = {1.0, 0.5};
  EXPECT_THROW(BuildScaleCdfs(unsorted), UserError);
  const std::vector<double> ok = {1.0};
  EXPECT_THROW(BuildScaleCdfs(ok, 12), UserError);
}

TEST(GaussianTableTest, TailRuleAndCentreFrequency) {
  const boost::math::normal_distribution<double> unit;
  for (double s : {0.11, 0.5, 1.0, 7.3, 256.0}) {
    int t = 0;
    while (boost::math::cdf(unit, -(t + 0.5) / s) >= std::ldexp(1.0, -16)) ++t;
    const CdfTable table = BuildGaussianCdf(s);
    EXPECT_EQ(table.offset, -t) << s;
    EXPECT_EQ(table.num_symbols(), 2 * t + 1) << s;
  }
  const CdfTable unit_table = BuildGaussianCdf(1.0);
  const double mass = boost::math::cdf(unit, 0.5) - boost::math::cdf(unit, -0.5);
  EXPECT_NEAR(unit_table.freq[-unit_table.offset], mass * kCdfTotal, 1.0);
  EXPECT_EQ(unit_table.freq[-unit_table.offset], 25095u);
}

TEST(ScaleTableTest, LogSpacedAndLowerBound) {
  const auto s = DefaultScaleTable();
  ASSERT_EQ(s.size(), 64u);
  EXPECT_DOUBLE_EQ(s.front(), 0.11);
  EXPECT_NEAR(s.back(), 256.0, 1e-9);
  const double ratio = s[1] / s[0];
  for (size_t i = 1; i < s.size(); ++i) EXPECT_NEAR(s[i] / s[i - 1], ratio, 1e-9);
  EXPECT_EQ(ScaleIndex(s, 0.0), 0);
  EXPECT_EQ(ScaleIndex(s, 0.11), 0);
  EXPECT_EQ(ScaleIndex(s, std::nextafter(0.11, 1.0)), 1);
  EXPECT_EQ(ScaleIndex(s, s[10]), 10);
  EXPECT_EQ(ScaleIndex(s, 1e6), 63);
}

}  // namespace
}  // namespace scic::entropy
