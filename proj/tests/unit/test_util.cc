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

#include "test_util.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace scic::testing {

TempDir::TempDir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  std::string name = info ? std::string(info->test_suite_name()) + "." + info->name() : "scic";
  for (char& c : name) {
    if (c == '/') c = '_';
  }
  path_ = std::filesystem::temp_directory_path() / ("scic_test_" + name);
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

Tensor RandomTensor(std::vector<int> shape, uint64_t seed, double lo, double hi) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (double& v : t.values()) v = rng.Uniform(lo, hi);
  return t;
}

Tensor TestImage(int channels, int height, int width, uint64_t seed) {
  Tensor t({channels, height, width});
  Rng rng(seed);
  const double fx = rng.Uniform(0.5, 3.0), fy = rng.Uniform(0.5, 3.0);
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double v =
            0.5 + 0.3 * std::sin(fx * x / width * 6.28 + c) * std::cos(fy * y / height * 6.28);
        if ((x / 8 + y / 8 + c) % 5 == 0) v = 0.1 * c;
        v += 0.02 * (rng.Uniform() - 0.5);
        t.at(c, y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return t;
}

std::vector<uint8_t> ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFile(const std::filesystem::path& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::string ReadText(const std::filesystem::path& path) {
  const auto b = ReadFile(path);
  return {b.begin(), b.end()};
}

}  // namespace scic::testing
