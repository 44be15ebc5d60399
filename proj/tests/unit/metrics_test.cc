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

#include <gtest/gtest.h>

#include <cmath>

#include "scic/dataset.h"
#include "test_util.h"

namespace scic::metrics {
namespace {

using scic::testing::RandomTensor;
using scic::testing::TestImage;

Tensor Scaled(Tensor t, double k) {
  for (double& v : t.values()) v *= k;
  return t;
}

TEST(MetricsTest, UniformDifferenceGivesTwentyDecibels) {
  const Tensor a = Scaled(TestImage(3, 16, 16, 1), 0.8);
  Tensor b = a;
  for (double& v : b.values()) v += 0.1;
  EXPECT_NEAR(Psnr(a, b), 20.0, 1e-6);
  EXPECT_EQ(Psnr(a, a), kPsnrCap);
}

TEST(MetricsTest, GmsdIsZeroForIdenticalAndDcShiftedPairs) {
  const Tensor a = Scaled(TestImage(3, 32, 32, 2), 0.5);
  Tensor shifted = a;
  for (double& v : shifted.values()) v += 0.25;
  EXPECT_EQ(Gmsd(a, a), 0.0);
  EXPECT_EQ(Gmsd(a, shifted), 0.0);
  EXPECT_GT(Gmsd(a, TestImage(3, 32, 32, 3)), 0.0);
}

// Direct evaluation of the standard similarity (2 ma mb + c)/(ma^2 + mb^2 + c)
// on a single interior pixel of a ramp pair.
TEST(MetricsTest, GmsMapMatchesScalarOracle) {
  Tensor a({1, 8, 8}), b({1, 8, 8});
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      a.at(0, y, x) = 0.05 * x;
      b.at(0, y, x) = 0.02 * y;
    }
  }
  // After 2x2 pooling the ramps step by 0.1 and 0.04 per pixel; Prewitt/3
  // on a linear ramp returns twice the step.
  const double ma = 0.2, mb = 0.08;
  const double oracle = (2 * ma * mb + kGmsdC) / (ma * ma + mb * mb + kGmsdC);
  const Tensor map = GmsMap(a, b);
  EXPECT_NEAR(map.at(0, 2, 2), oracle, 1e-12);
}

TEST(MetricsTest, MaskedPartitionIdentityIsExact) {
  const Tensor a = RandomTensor({3, 24, 20}, 1, 0, 1);
  const Tensor b = RandomTensor({3, 24, 20}, 2, 0, 1);
  const Tensor mask = dataset::RectMask(20, 24, {3, 5, 9, 11});
  Tensor inverse = mask;
  for (double& v : inverse.values()) v = 1 - v;
  const SquaredError all = SquaredErrors(a, b);
  const SquaredError nat = SquaredErrors(a, b, &mask);
  const SquaredError syn = SquaredErrors(a, b, &inverse);
  EXPECT_EQ(nat.count + syn.count, all.count);
  ExactSum sum = nat.sum;
  sum += syn.sum;
  EXPECT_EQ(sum, all.sum);
  EXPECT_NEAR(nat.count * nat.mse() + syn.count * syn.mse(), all.count * all.mse(),
              1e-12 * all.count * all.mse());
  EXPECT_DOUBLE_EQ(MaskedMse(a, b, mask), nat.mse());
}

TEST(MetricsTest, RegionBitsConserveTotalExactly) {
  const Tensor bits = RandomTensor({5, 6, 7}, 3, 0, 9);
  const Tensor mask = dataset::RectMask(7 * 16, 6 * 16, {20, 10, 50, 40});
  const RegionBits r = RegionRate(bits, 123.456, mask, 16);
  EXPECT_EQ(r.natural_units + r.synthetic_units, r.total_units);
  EXPECT_EQ(r.natural_cells + r.synthetic_cells, 6 * 7);
  double total = 123.456;
  for (double v : bits.values()) total += v;
  EXPECT_NEAR(r.total, total, 1e-6);
  const RegionBits none = RegionRate(bits, 10, Tensor({1, 96, 112}), 16);
  EXPECT_EQ(none.natural_units, 0);
  EXPECT_EQ(none.synthetic_units, none.total_units);
}

TEST(MetricsTest, RegionAttributionUsesFootprintCentre) {
  Tensor bits({1, 1, 2}, std::vector<double>{1.0, 2.0});
  Tensor mask({1, 4, 8});
  mask.at(0, 2, 6) = 1;  // centre pixel of the second cell
  const RegionBits r = RegionRate(bits, 0, mask, 4);
  EXPECT_EQ(r.natural, 2.0);
  EXPECT_EQ(r.synthetic, 1.0);
}

TEST(MetricsTest, MaskDownsampleTiesCountAsSelected) {
  Tensor m({1, 2, 6}, std::vector<double>{1, 1, 1, 0, 0, 0, 1, 0, 1, 0, 0, 0});
  EXPECT_EQ(DownsampleMask(m).storage(), (AlignedVector{1, 1, 0}));
}

}  // namespace
}  // namespace scic::metrics
