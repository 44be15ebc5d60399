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

#ifndef SCIC_RANS_H_
#define SCIC_RANS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "scic/entropy_models.h"

namespace scic::entropy {

inline constexpr int kCdfPrecision = 16;
inline constexpr uint32_t kCdfTotal = 1u << kCdfPrecision;
// rANS state lower bound; the state lives in [kRansLow, kRansLow << 8).
inline constexpr uint32_t kRansLow = 1u << 23;

// Quantized distribution over the integer values
// [offset, offset + num_symbols()) plus one trailing escape symbol. Values
// outside the range are coded as the escape symbol followed by the raw
// 32-bit value.
struct CdfTable {
  int32_t offset = 0;
  std::vector<uint32_t> freq;  // num_symbols() + 1 entries, escape last
  std::vector<uint32_t> cdf;   // freq.size() + 1 entries, cdf[0] = 0

  int num_symbols() const { return static_cast<int>(freq.size()) - 1; }
  int escape_index() const { return num_symbols(); }

  // Largest-remainder quantization to kCdfTotal with every frequency >= 1.
  static CdfTable FromProbabilities(int32_t offset, std::span<const double> probs,
                                    double escape_mass);
  // Builds from explicit frequencies (escape last); validates.
  static CdfTable FromFrequencies(int32_t offset, std::vector<uint32_t> freq);
  void Validate() const;
  friend bool operator==(const CdfTable&, const CdfTable&) = default;
};

// 64 log-spaced scales from kScaleMin to 256.
std::vector<double> DefaultScaleTable();

// Index of the smallest table entry >= scale (the last entry if none).
int ScaleIndex(std::span<const double> table, double scale);

// Zero-mean Gaussian of the given scale, bin-integrated over [-tail, tail]
// where each truncated tail holds less than 2^-16 of the mass.
CdfTable BuildGaussianCdf(double scale);
std::vector<CdfTable> BuildScaleCdfs(std::span<const double> scales, int precision = kCdfPrecision);

// One table per hyper-latent channel, spanning the values whose CDF lies
// inside [2^-16, 1 - 2^-16].
std::vector<CdfTable> BuildFactorizedCdfs(const FactorizedDensity& density);

// rANS, 32-bit state, byte-wise renormalization. Symbols are pushed in
// reverse so the decoder runs forward. An empty input encodes to the four
// flush bytes of the initial state.
std::vector<uint8_t> EncodeSymbols(std::span<const int32_t> symbols,
                                   std::span<const int32_t> contexts,
                                   std::span<const CdfTable> tables);

// Exact inverse of EncodeSymbols. Throws CorruptStreamError when the stream
// runs out early, has trailing bytes, or does not end in the initial state.
std::vector<int32_t> DecodeSymbols(std::span<const uint8_t> bytes,
                                   std::span<const int32_t> contexts,
                                   std::span<const CdfTable> tables);

// Ideal code length of the sequence under the quantized tables, in bits
// (escapes count their 32 raw bits).
double TableCodeLengthBits(std::span<const int32_t> symbols, std::span<const int32_t> contexts,
                           std::span<const CdfTable> tables);

}  // namespace scic::entropy

#endif  // SCIC_RANS_H_
