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

#ifndef SCIC_RNG_H_
#define SCIC_RNG_H_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace scic {

// Deterministic random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the distribution helpers below are
// implemented here because the std:: distributions are not required to be
// reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Derives an independent stream from a base seed and a list of indices
  // (sample index, step, ...). Pure function of its arguments.
  template <typename... Ts>
  static Rng Derive(uint64_t seed, Ts... indices) {
    uint64_t h = Mix(seed ^ 0x9E3779B97F4A7C15ull);
    ((h = Mix(h ^ (static_cast<uint64_t>(indices) + 0x632BE59BD9B4E019ull))), ...);
    return Rng(h);
  }

  uint64_t NextU64() { return engine_(); }

  // Uniform integer in [lo, hi] (inclusive), unbiased via rejection.
  int64_t UniformInt(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(engine_());
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return lo + static_cast<int64_t>(v % span);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  double Normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = Uniform();
    } while (u1 <= 0.0);
    const double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static uint64_t Mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace scic

#endif  // SCIC_RNG_H_
