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

#ifndef SCIC_METRICS_H_
#define SCIC_METRICS_H_

#include <cstdint>

#include "scic/tensor.h"

namespace scic::metrics {

inline constexpr double kPsnrCap = 100.0;
inline constexpr double kGmsdC = 0.0026;

// Order-independent sum of non-negative reals on a 2^-96 fixed-point grid,
// so partial sums over a partition add up to the whole bit for bit.
class ExactSum {
 public:
  void Add(double v);
  ExactSum& operator+=(const ExactSum& o) {
    units_ += o.units_;
    return *this;
  }
  double value() const;
  __int128 units() const { return units_; }
  friend bool operator==(const ExactSum&, const ExactSum&) = default;

 private:
  __int128 units_ = 0;
};

struct SquaredError {
  ExactSum sum;
  int64_t count = 0;
  double mse() const { return sum.value() / static_cast<double>(count); }
};

// Images are {C,H,W} with values in [0,1]; masks are {1,H,W} (or {H,W})
// with 1 marking selected pixels.
SquaredError SquaredErrors(const Tensor& a, const Tensor& b, const Tensor* mask = nullptr);
double Mse(const Tensor& a, const Tensor& b);
// 10 log10(1 / MSE), kPsnrCap when the images are identical.
double PsnrFromMse(double mse);
double Psnr(const Tensor& a, const Tensor& b);

// ITU-R BT.601 luma of an RGB image; single-channel images pass through.
Tensor Luma(const Tensor& image);
// Gradient magnitude similarity map at half resolution: luma, 2x2 average
// pooling, Prewitt/3 gradients with replicated borders.
Tensor GmsMap(const Tensor& a, const Tensor& b);
// Population standard deviation of the GMS map.
double Gmsd(const Tensor& a, const Tensor& b);

// 2x2 majority vote with ties (2 of 4) counted as selected.
Tensor DownsampleMask(const Tensor& mask);

double MaskedMse(const Tensor& a, const Tensor& b, const Tensor& mask);
double MaskedPsnr(const Tensor& a, const Tensor& b, const Tensor& mask);
double MaskedGmsd(const Tensor& a, const Tensor& b, const Tensor& mask);

struct RegionBits {
  double natural = 0.0;
  double synthetic = 0.0;
  double total = 0.0;
  // Exact accounting in units of 2^-32 bit; natural + synthetic == total.
  __int128 natural_units = 0;
  __int128 synthetic_units = 0;
  __int128 total_units = 0;
  int64_t natural_cells = 0;
  int64_t synthetic_cells = 0;
};

// Attributes every latent element to the region under the centre pixel of
// its footprint (pixel (i*f + f/2, j*f + f/2), clamped to the mask), and
// splits the hyper-latent bits in proportion to the resulting y-bit split.
// y_bits is {C,h,w}; mask is at image resolution with 1 = natural.
RegionBits RegionRate(const Tensor& y_bits, double z_bits, const Tensor& mask, int footprint);

}  // namespace scic::metrics

#endif  // SCIC_METRICS_H_
