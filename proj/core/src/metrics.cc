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

#include "scic/metrics.h"

#include <algorithm>
#include <cmath>

#include "scic/error.h"

namespace scic::metrics {
namespace {

constexpr double kUnit96 = 0x1p96;
constexpr double kUnit32 = 0x1p32;

void RequireSameShape(const Tensor& a, const Tensor& b) {
  if (!a.SameShape(b)) {
    throw ShapeError("shape mismatch: " + a.ShapeString() + " vs " + b.ShapeString());
  }
  if (a.rank() != 3) throw ShapeError("expected a {C,H,W} image, got " + a.ShapeString());
}

// Mask value at pixel (y, x) for a {1,H,W} or {H,W} mask.
struct MaskView {
  const Tensor& m;
  int h, w;
  explicit MaskView(const Tensor& mask)
      : m(mask),
        h(mask.rank() == 3 ? mask.dim(1) : mask.dim(0)),
        w(mask.rank() == 3 ? mask.dim(2) : mask.dim(1)) {
    if (mask.rank() != 2 && !(mask.rank() == 3 && mask.dim(0) == 1)) {
      throw ShapeError("mask must be {1,H,W} or {H,W}, got " + mask.ShapeString());
    }
  }
  bool at(int y, int x) const { return m[static_cast<size_t>(y) * w + x] >= 0.5; }
};

void RequireMaskSize(const MaskView& m, int h, int w) {
  if (m.h != h || m.w != w) {
    throw ShapeError("mask size " + std::to_string(m.h) + "x" + std::to_string(m.w) +
                     " does not match image " + std::to_string(h) + "x" + std::to_string(w));
  }
}

Tensor Pool2(const Tensor& luma) {
  const int h = luma.dim(1) / 2, w = luma.dim(2) / 2;
  Tensor out({1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(0, y, x) = (luma.at(0, 2 * y, 2 * x) + luma.at(0, 2 * y, 2 * x + 1) +
                         luma.at(0, 2 * y + 1, 2 * x) + luma.at(0, 2 * y + 1, 2 * x + 1)) /
                        4.0;
    }
  }
  return out;
}

Tensor GradientMagnitude(const Tensor& p) {
  const int h = p.dim(1), w = p.dim(2);
  auto px = [&](int y, int x) { return p.at(0, std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)); };
  Tensor m({1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gx = 0.0, gy = 0.0;
      for (int d = -1; d <= 1; ++d) {
        gx += px(y + d, x - 1) - px(y + d, x + 1);
        gy += px(y - 1, x + d) - px(y + 1, x + d);
      }
      gx /= 3.0;
      gy /= 3.0;
      m.at(0, y, x) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return m;
}

double PopulationStd(const Tensor& map, const Tensor* selection) {
  double sum = 0.0;
  int64_t n = 0;
  for (size_t i = 0; i < map.size(); ++i) {
    if (selection == nullptr || (*selection)[i] >= 0.5) {
      sum += map[i];
      ++n;
    }
  }
  if (n == 0) throw UserError("mask selects no GMS pixels");
  const double mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (size_t i = 0; i < map.size(); ++i) {
    if (selection == nullptr || (*selection)[i] >= 0.5) var += (map[i] - mean) * (map[i] - mean);
  }
  return std::sqrt(var / static_cast<double>(n));
}

}  // namespace

void ExactSum::Add(double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw InvariantViolation("ExactSum takes finite v >= 0");
  if (v >= 0x1p30) throw InvariantViolation("ExactSum term too large");
  units_ += static_cast<__int128>(std::ldexp(v, 96));
}

double ExactSum::value() const { return static_cast<double>(units_) / kUnit96; }

SquaredError SquaredErrors(const Tensor& a, const Tensor& b, const Tensor* mask) {
  RequireSameShape(a, b);
  const int c = a.dim(0), h = a.dim(1), w = a.dim(2);
  SquaredError se;
  if (mask == nullptr) {
    for (size_t i = 0; i < a.size(); ++i) se.sum.Add((a[i] - b[i]) * (a[i] - b[i]));
    se.count = static_cast<int64_t>(a.size());
    return se;
  }
  const MaskView m(*mask);
  RequireMaskSize(m, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m.at(y, x)) continue;
      for (int ch = 0; ch < c; ++ch) {
        const double d = a.at(ch, y, x) - b.at(ch, y, x);
        se.sum.Add(d * d);
      }
      se.count += c;
    }
  }
  return se;
}

double Mse(const Tensor& a, const Tensor& b) { return SquaredErrors(a, b).mse(); }

double PsnrFromMse(double mse) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double Psnr(const Tensor& a, const Tensor& b) { return PsnrFromMse(Mse(a, b)); }

Tensor Luma(const Tensor& image) {
  if (image.rank() != 3) throw ShapeError("expected a {C,H,W} image");
  const int h = image.dim(1), w = image.dim(2);
  if (image.dim(0) == 1) return image;
  if (image.dim(0) != 3) throw ShapeError("expected 1 or 3 channels");
  Tensor y({1, h, w});
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      y.at(0, r, c) =
          0.299 * image.at(0, r, c) + 0.587 * image.at(1, r, c) + 0.114 * image.at(2, r, c);
    }
  }
  return y;
}

Tensor GmsMap(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b);
  if (a.dim(1) < 6 || a.dim(2) < 6) throw ShapeError("GMSD needs images of at least 6x6");
  const Tensor ma = GradientMagnitude(Pool2(Luma(a)));
  const Tensor mb = GradientMagnitude(Pool2(Luma(b)));
  Tensor gms(ma.shape());
  for (size_t i = 0; i < gms.size(); ++i) {
    // (2 ma mb + c) / (ma^2 + mb^2 + c), written so equal magnitudes give 1.
    const double d = ma[i] - mb[i];
    gms[i] = 1.0 - d * d / (ma[i] * ma[i] + mb[i] * mb[i] + kGmsdC);
  }
  return gms;
}

double Gmsd(const Tensor& a, const Tensor& b) { return PopulationStd(GmsMap(a, b), nullptr); }

Tensor DownsampleMask(const Tensor& mask) {
  const MaskView m(mask);
  const int h = m.h / 2, w = m.w / 2;
  Tensor out({1, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int votes = m.at(2 * y, 2 * x) + m.at(2 * y, 2 * x + 1) + m.at(2 * y + 1, 2 * x) +
                        m.at(2 * y + 1, 2 * x + 1);
      out.at(0, y, x) = votes >= 2 ? 1.0 : 0.0;
    }
  }
  return out;
}

double MaskedMse(const Tensor& a, const Tensor& b, const Tensor& mask) {
  const SquaredError se = SquaredErrors(a, b, &mask);
  if (se.count == 0) throw UserError("mask selects no pixels");
  return se.mse();
}

double MaskedPsnr(const Tensor& a, const Tensor& b, const Tensor& mask) {
  return PsnrFromMse(MaskedMse(a, b, mask));
}

double MaskedGmsd(const Tensor& a, const Tensor& b, const Tensor& mask) {
  RequireSameShape(a, b);
  RequireMaskSize(MaskView(mask), a.dim(1), a.dim(2));
  const Tensor gms = GmsMap(a, b);
  const Tensor sel = DownsampleMask(mask);
  return PopulationStd(gms, &sel);
}

RegionBits RegionRate(const Tensor& y_bits, double z_bits, const Tensor& mask, int footprint) {
  if (y_bits.rank() != 3) throw ShapeError("y bits must be {C,h,w}");
  if (footprint < 1) throw UserError("footprint must be positive");
  const MaskView m(mask);
  const int c = y_bits.dim(0), h = y_bits.dim(1), w = y_bits.dim(2);
  auto units = [](double bits) {
    if (!(bits >= 0.0) || !std::isfinite(bits)) throw InvariantViolation("invalid bit count");
    return static_cast<__int128>(std::llround(bits * kUnit32));
  };
  RegionBits r;
  __int128 y_nat = 0, y_syn = 0;
  for (int i = 0; i < h; ++i) {
    const int py = std::min(i * footprint + footprint / 2, m.h - 1);
    for (int j = 0; j < w; ++j) {
      const int px = std::min(j * footprint + footprint / 2, m.w - 1);
      const bool natural = m.at(py, px);
      __int128 cell = 0;
      for (int ch = 0; ch < c; ++ch) cell += units(y_bits.at(ch, i, j));
      if (natural) {
        y_nat += cell;
        r.natural_cells += 1;
      } else {
        y_syn += cell;
        r.synthetic_cells += 1;
      }
    }
  }
  const __int128 z = units(z_bits);
  const __int128 y_total = y_nat + y_syn;
  __int128 z_nat;
  if (y_total > 0) {
    z_nat = z * y_nat / y_total;
  } else {
    z_nat = z * r.natural_cells / std::max<int64_t>(1, r.natural_cells + r.synthetic_cells);
  }
  r.natural_units = y_nat + z_nat;
  r.synthetic_units = y_syn + (z - z_nat);
  r.total_units = y_total + z;
  r.natural = static_cast<double>(r.natural_units) / kUnit32;
  r.synthetic = static_cast<double>(r.synthetic_units) / kUnit32;
  r.total = static_cast<double>(r.total_units) / kUnit32;
  return r;
}

}  // namespace scic::metrics
