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

#include "scic/coder.h"

#include <gtest/gtest.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <mutex>

#include "scic/error.h"
#include "scic/native_coder_abi.h"
#include "test_util.h"

namespace scic::entropy {
namespace {

using nlohmann::json;

// Routes the default logger into a string for the lifetime of the object.
class LogCapture {
 public:
  LogCapture() : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(stream_);
    spdlog::set_default_logger(std::make_shared<spdlog::logger>("capture", sink));
  }
  ~LogCapture() { spdlog::set_default_logger(previous_); }
  std::string text() const { return stream_.str(); }

 private:
  std::ostringstream stream_;
  std::shared_ptr<spdlog::logger> previous_;
};

int Count(const std::string& haystack, const std::string& needle) {
  int n = 0;
  for (size_t p = haystack.find(needle); p != std::string::npos; p = haystack.find(needle, p + 1))
    ++n;
  return n;
}

std::vector<uint8_t> FromHex(const std::string& hex) {
  std::vector<uint8_t> out;
  for (size_t i = 0; i + 1 < hex.size(); i += 2) {
    out.push_back(static_cast<uint8_t>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  }
  return out;
}

TEST(CoderLoaderTest, FallbackIsLoggedOnce) {
  setenv("SCIC_NATIVE_CODER", "/nonexistent/libscic_native_coder.so", 1);
  ResetCoderDetectionForTesting();
  LogCapture log;
  for (int i = 0; i < 5; ++i) EXPECT_EQ(ActiveCoder().name(), ReferenceCoder().name());
  EXPECT_EQ(Count(log.text(), "using reference coder"), 1) << log.text();
  unsetenv("SCIC_NATIVE_CODER");
  ResetCoderDetectionForTesting();
}

TEST(CoderLoaderTest, DetectsNativeLibraryFromEnvironment) {
  setenv("SCIC_NATIVE_CODER", SCIC_SHIM_PATH, 1);
  ResetCoderDetectionForTesting();
  LogCapture log;
  EXPECT_NE(ActiveCoder().name(), ReferenceCoder().name());
  EXPECT_EQ(Count(log.text(), "using reference coder"), 0);
  unsetenv("SCIC_NATIVE_CODER");
  ResetCoderDetectionForTesting();
}

TEST(CoderLoaderTest, RejectsForeignAbi) {
  EXPECT_THROW(LoadNativeCoder(SCIC_BAD_SHIM_PATH), CapabilityError);
  EXPECT_THROW(LoadNativeCoder("/nonexistent/lib.so"), CapabilityError);
}

TEST(CoderLoaderTest, DefaultLibraryName) {
  unsetenv("SCIC_NATIVE_CODER");
  EXPECT_EQ(NativeCoderLibraryName(), "libscic_native_coder.so");
}

// Differential check of a coder behind the C ABI against the reference on
// the shipped vectors and random cases.
TEST(CoderLoaderTest, AbiShimMatchesReference) {
  const auto native = LoadNativeCoder(SCIC_SHIM_PATH);
  std::ifstream in(std::string(SCIC_TEST_DATA) + "/coder_conformance.json");
  const json v = json::parse(in);
  for (const json& c : v.at("cases")) {
    SCOPED_TRACE(c.at("name").get<std::string>());
    std::vector<CdfTable> tables;
    for (const json& t : c.at("tables")) {
      tables.push_back(
          CdfTable::FromFrequencies(t.at("offset"), t.at("freq").get<std::vector<uint32_t>>()));
    }
    const auto ref = ReferenceCoder().BuildTables(tables);
    const auto nat = native->BuildTables(tables);
    const auto contexts = c.at("contexts").get<std::vector<int32_t>>();
    const auto bytes = FromHex(c.at("bytes"));
    if (c.contains("error")) {
      EXPECT_THROW(ref->Decode(bytes, contexts), UserError);
      if (c.at("error") == "corrupt_stream") {
        EXPECT_THROW(nat->Decode(bytes, contexts), CorruptStreamError);
      } else {
        EXPECT_THROW(nat->Decode(bytes, contexts), UserError);
      }
      continue;
    }
    const auto symbols = c.at("symbols").get<std::vector<int32_t>>();
    EXPECT_EQ(nat->Encode(symbols, contexts), bytes);
    EXPECT_EQ(nat->Decode(bytes, contexts), symbols);
  }

  Rng rng(5);
  const auto tables = BuildScaleCdfs(DefaultScaleTable());
  const auto ref = ReferenceCoder().BuildTables(tables);
  const auto nat = native->BuildTables(tables);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = static_cast<int>(rng.UniformInt(0, 300));
    std::vector<int32_t> s(n), c(n);
    for (int i = 0; i < n; ++i) {
      c[i] = static_cast<int32_t>(rng.UniformInt(0, 63));
      s[i] = static_cast<int32_t>(rng.UniformInt(-40, 40));
    }
    const auto bytes = ref->Encode(s, c);
    ASSERT_EQ(nat->Encode(s, c), bytes);
    ASSERT_EQ(nat->Decode(bytes, c), s);
    auto flipped = bytes;
    flipped[rng.UniformInt(0, static_cast<int64_t>(flipped.size()) - 1)] ^= 0x5A;
    bool ref_ok = true, nat_ok = true;
    std::vector<int32_t> a, b;
    try {
      a = ref->Decode(flipped, c);
    } catch (const CorruptStreamError&) {
      ref_ok = false;
    }
    try {
      b = nat->Decode(flipped, c);
    } catch (const CorruptStreamError&) {
      nat_ok = false;
    }
    ASSERT_EQ(ref_ok, nat_ok);
    ASSERT_EQ(a, b);
  }
}

TEST(CoderLoaderTest, GrowsBufferOnCapacityStatus) {
  // Escapes cost over four bytes each, beyond the first-guess buffer.
  const auto native = LoadNativeCoder(SCIC_SHIM_PATH);
  const std::vector<CdfTable> tables = {
      CdfTable::FromFrequencies(0, {kCdfTotal / 2, kCdfTotal / 2 - 1, 1})};
  const std::vector<int32_t> s(1000, 123456), c(1000, 0);
  const auto bytes = native->BuildTables(tables)->Encode(s, c);
  EXPECT_GT(bytes.size(), 4000u);
  EXPECT_EQ(bytes, ReferenceCoder().BuildTables(tables)->Encode(s, c));
}

}  // namespace
}  // namespace scic::entropy
