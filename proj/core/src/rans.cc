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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scic/error.h"

namespace scic::entropy {
namespace {

constexpr double kTailMass = 1.0 / kCdfTotal;
constexpr int kMaxTail = 30000;

struct Op {
  uint32_t start;
  uint32_t freq;
};

const CdfTable& TableFor(std::span<const CdfTable> tables, int32_t ctx) {
  if (ctx < 0 || static_cast<size_t>(ctx) >= tables.size()) {
    throw UserError("context index " + std::to_string(ctx) + " out of range [0, " +
                    std::to_string(tables.size()) + ")");
  }
  return tables[ctx];
}

// Forward-order coding operations for one symbol.
void AppendOps(int32_t value, const CdfTable& t, std::vector<Op>& ops) {
  const int64_t idx = static_cast<int64_t>(value) - t.offset;
  if (idx >= 0 && idx < t.num_symbols()) {
    ops.push_back({t.cdf[idx], t.freq[idx]});
    return;
  }
  const int esc = t.escape_index();
  ops.push_back({t.cdf[esc], t.freq[esc]});
  const uint32_t raw = static_cast<uint32_t>(value);
  ops.push_back({raw >> 16, 1});
  ops.push_back({raw & 0xFFFF, 1});
}

}  // namespace

CdfTable CdfTable::FromProbabilities(int32_t offset, std::span<const double> probs,
                                     double escape_mass) {
  const size_t m = probs.size() + 1;
  if (m > kCdfTotal) {
    throw UserError("table of " + std::to_string(m) +
                    " symbols overflows the 16-bit precision; widen the table");
  }
  std::vector<double> p(probs.begin(), probs.end());
  p.push_back(escape_mass);
  double total = 0.0;
  for (double v : p) total += std::max(v, 0.0);
  if (!(total > 0.0)) throw InvariantViolation("distribution has no mass");

  std::vector<double> scaled(m), frac(m);
  std::vector<int64_t> f(m);
  int64_t sum = 0;
  for (size_t i = 0; i < m; ++i) {
    scaled[i] = std::max(p[i], 0.0) / total * kCdfTotal;
    const double fl = std::floor(scaled[i]);
    frac[i] = scaled[i] - fl;
    f[i] = std::max<int64_t>(1, static_cast<int64_t>(fl));
    sum += f[i];
  }
  int64_t diff = static_cast<int64_t>(kCdfTotal) - sum;
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  if (diff > 0) {
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return frac[a] > frac[b]; });
    for (size_t k = 0; diff > 0; k = (k + 1) % m, --diff) ++f[order[k]];
  } else if (diff < 0) {
    // Take back from the symbols that were rounded least favourably first.
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return scaled[a] - static_cast<double>(f[a]) < scaled[b] - static_cast<double>(f[b]);
    });
    while (diff < 0) {
      bool progressed = false;
      for (size_t k = 0; k < m && diff < 0; ++k) {
        if (f[order[k]] > 1) {
          --f[order[k]];
          ++diff;
          progressed = true;
        }
      }
      if (!progressed) throw InvariantViolation("cannot normalize frequency table");
    }
  }
  std::vector<uint32_t> freq(f.begin(), f.end());
  return FromFrequencies(offset, std::move(freq));
}

CdfTable CdfTable::FromFrequencies(int32_t offset, std::vector<uint32_t> freq) {
  CdfTable t;
  t.offset = offset;
  t.freq = std::move(freq);
  t.cdf.assign(t.freq.size() + 1, 0);
  uint64_t acc = 0;
  for (size_t i = 0; i < t.freq.size(); ++i) {
    acc += t.freq[i];
    if (acc > kCdfTotal) throw UserError("frequency table exceeds 2^16");
    t.cdf[i + 1] = static_cast<uint32_t>(acc);
  }
  t.Validate();
  return t;
}

void CdfTable::Validate() const {
  if (freq.size() < 1 || cdf.size() != freq.size() + 1) {
    throw UserError("malformed frequency table");
  }
  if (cdf.front() != 0 || cdf.back() != kCdfTotal) {
    throw UserError("frequency table does not sum to 2^16");
  }
  for (size_t i = 0; i < freq.size(); ++i) {
    if (freq[i] == 0 || cdf[i + 1] - cdf[i] != freq[i]) {
      throw UserError("frequency table is not strictly monotone");
    }
  }
}

std::vector<double> DefaultScaleTable() {
  constexpr int kEntries = 64;
  const double lo = std::log(kScaleMin), hi = std::log(256.0);
  std::vector<double> t(kEntries);
  for (int i = 0; i < kEntries; ++i) t[i] = std::exp(lo + (hi - lo) * i / (kEntries - 1));
  t.front() = kScaleMin;
  t.back() = 256.0;
  return t;
}

int ScaleIndex(std::span<const double> table, double scale) {
  auto it = std::lower_bound(table.begin(), table.end(), scale);
  if (it == table.end()) return static_cast<int>(table.size()) - 1;
  return static_cast<int>(it - table.begin());
}

CdfTable BuildGaussianCdf(double scale) {
  int tail = 0;
  while (StdNormalCdf(-(tail + 0.5) / scale) >= kTailMass) {
    if (++tail > kMaxTail) throw UserError("scale too wide for the coding table");
  }
  std::vector<double> probs;
  probs.reserve(2 * tail + 1);
  for (int v = -tail; v <= tail; ++v) probs.push_back(GaussianBinMass(v, 0.0, scale));
  const double escape = 2.0 * StdNormalCdf(-(tail + 0.5) / scale);
  return CdfTable::FromProbabilities(-tail, probs, escape);
}

std::vector<CdfTable> BuildScaleCdfs(std::span<const double> scales, int precision) {
  if (precision != kCdfPrecision) {
    throw UserError("only 16-bit table precision is supported");
  }
  if (!std::is_sorted(scales.begin(), scales.end())) {
    throw UserError("scale table must be sorted ascending");
  }
  std::vector<CdfTable> tables;
  tables.reserve(scales.size());
  for (double s : scales) tables.push_back(BuildGaussianCdf(s));
  return tables;
}

std::vector<CdfTable> BuildFactorizedCdfs(const FactorizedDensity& density) {
  std::vector<CdfTable> tables;
  for (int c = 0; c < density.channels(); ++c) {
    // Widen outward from the median region until both tails are small.
    int lo = 0, hi = 0;
    while (density.Cdf(c, lo - 0.5) >= kTailMass && lo > -kMaxTail) --lo;
    while (1.0 - density.Cdf(c, hi + 0.5) >= kTailMass && hi < kMaxTail) ++hi;
    while (lo < hi && density.Cdf(c, lo + 0.5) < kTailMass) ++lo;
    while (hi > lo && 1.0 - density.Cdf(c, hi - 0.5) < kTailMass) --hi;
    std::vector<double> probs;
    for (int v = lo; v <= hi; ++v) probs.push_back(density.BinMass(c, v));
    const double escape = density.Cdf(c, lo - 0.5) + (1.0 - density.Cdf(c, hi + 0.5));
    tables.push_back(CdfTable::FromProbabilities(lo, probs, escape));
  }
  return tables;
}

std::vector<uint8_t> EncodeSymbols(std::span<const int32_t> symbols,
                                   std::span<const int32_t> contexts,
                                   std::span<const CdfTable> tables) {
  if (symbols.size() != contexts.size()) {
    throw UserError("symbol and context counts differ");
  }
  std::vector<Op> ops;
  ops.reserve(symbols.size());
  for (size_t i = 0; i < symbols.size(); ++i) {
    AppendOps(symbols[i], TableFor(tables, contexts[i]), ops);
  }
  std::vector<uint8_t> emitted;
  emitted.reserve(ops.size() / 2 + 8);
  uint32_t x = kRansLow;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    const uint32_t x_max = ((kRansLow >> kCdfPrecision) << 8) * it->freq;
    while (x >= x_max) {
      emitted.push_back(static_cast<uint8_t>(x & 0xFF));
      x >>= 8;
    }
    x = ((x / it->freq) << kCdfPrecision) + (x % it->freq) + it->start;
  }
  for (int shift = 24; shift >= 0; shift -= 8) {
    emitted.push_back(static_cast<uint8_t>(x >> shift));
  }
  std::reverse(emitted.begin(), emitted.end());
  return emitted;
}

std::vector<int32_t> DecodeSymbols(std::span<const uint8_t> bytes,
                                   std::span<const int32_t> contexts,
                                   std::span<const CdfTable> tables) {
  if (bytes.size() < 4) throw CorruptStreamError("rANS stream shorter than its state");
  size_t pos = 0;
  uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<uint32_t>(bytes[pos++]) << (8 * i);
  if (x < kRansLow || x >= (kRansLow << 8)) {
    throw CorruptStreamError("invalid rANS initial state");
  }
  auto advance = [&](uint32_t start, uint32_t freq) {
    x = freq * (x >> kCdfPrecision) + (x & (kCdfTotal - 1)) - start;
    while (x < kRansLow) {
      if (pos >= bytes.size()) throw CorruptStreamError("rANS stream truncated");
      x = (x << 8) | bytes[pos++];
    }
  };
  std::vector<int32_t> out;
  out.reserve(contexts.size());
  for (int32_t ctx : contexts) {
    const CdfTable& t = TableFor(tables, ctx);
    const uint32_t cum = x & (kCdfTotal - 1);
    const auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), cum);
    const int s = static_cast<int>(it - t.cdf.begin()) - 1;
    advance(t.cdf[s], t.freq[s]);
    if (s != t.escape_index()) {
      out.push_back(t.offset + s);
      continue;
    }
    uint32_t raw = 0;
    for (int half = 0; half < 2; ++half) {
      const uint32_t v = x & (kCdfTotal - 1);
      advance(v, 1);
      raw = (raw << 16) | v;
    }
    const int64_t idx = static_cast<int64_t>(static_cast<int32_t>(raw)) - t.offset;
    if (idx >= 0 && idx < t.num_symbols()) {
      throw CorruptStreamError("escaped value lies inside the table range");
    }
    out.push_back(static_cast<int32_t>(raw));
  }
  if (x != kRansLow || pos != bytes.size()) {
    throw CorruptStreamError("rANS stream did not end in the initial state");
  }
  return out;
}

double TableCodeLengthBits(std::span<const int32_t> symbols, std::span<const int32_t> contexts,
                           std::span<const CdfTable> tables) {
  double bits = 0.0;
  for (size_t i = 0; i < symbols.size(); ++i) {
    const CdfTable& t = TableFor(tables, contexts[i]);
    const int64_t idx = static_cast<int64_t>(symbols[i]) - t.offset;
    if (idx >= 0 && idx < t.num_symbols()) {
      bits += kCdfPrecision - std::log2(static_cast<double>(t.freq[idx]));
    } else {
      bits += kCdfPrecision - std::log2(static_cast<double>(t.freq[t.escape_index()])) + 32.0;
    }
  }
  return bits;
}

}  // namespace scic::entropy
