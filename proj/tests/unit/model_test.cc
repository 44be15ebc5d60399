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

#include "scic/model.h"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "scic/autograd.h"
#include "scic/error.h"
#include "test_util.h"

namespace scic::codec {
namespace {

using scic::testing::RandomTensor;
using scic::testing::TestImage;

// Direct-summation convolution, zero padding.
Tensor NaiveConv(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  const int ci = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int co = w.dim(0), k = w.dim(2);
  const int oh = (h + 2 * pad - k) / stride + 1, ow = (wd + 2 * pad - k) / stride + 1;
  Tensor out({co, oh, ow});
  for (int o = 0; o < co; ++o)
    for (int y = 0; y < oh; ++y)
      for (int xx = 0; xx < ow; ++xx) {
        double acc = b[o];
        for (int i = 0; i < ci; ++i)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int sy = y * stride - pad + ky, sx = xx * stride - pad + kx;
              if (sy < 0 || sy >= h || sx < 0 || sx >= wd) continue;
              acc += x.at(i, sy, sx) * w[((static_cast<size_t>(o) * ci + i) * k + ky) * k + kx];
            }
        out.at(o, y, xx) = acc;
      }
  return out;
}

// Scatter form of the transposed convolution, weights {C_in, C_out, K, K}.
Tensor NaiveDeconv(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad,
                   int output_pad) {
  const int ci = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int co = w.dim(1), k = w.dim(2);
  const int oh = (h - 1) * stride - 2 * pad + k + output_pad;
  const int ow = (wd - 1) * stride - 2 * pad + k + output_pad;
  Tensor out({co, oh, ow});
  for (int o = 0; o < co; ++o)
    for (int y = 0; y < oh; ++y)
      for (int xx = 0; xx < ow; ++xx) out.at(o, y, xx) = b[o];
  for (int i = 0; i < ci; ++i)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < wd; ++xx)
        for (int o = 0; o < co; ++o)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int ty = y * stride - pad + ky, tx = xx * stride - pad + kx;
              if (ty < 0 || ty >= oh || tx < 0 || tx >= ow) continue;
              out.at(o, ty, tx) +=
                  x.at(i, y, xx) * w[((static_cast<size_t>(i) * co + o) * k + ky) * k + kx];
            }
  return out;
}

void ExpectClose(const Tensor& a, const Tensor& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], tol) << "at " << i;
}

TEST(ConvOracleTest, ForwardMatchesDirectSummation) {
  nn::NoGradGuard guard;
  for (int stride : {1, 2}) {
    const Tensor x = RandomTensor({3, 9, 11}, 1), w = RandomTensor({4, 3, 5, 5}, 2);
    const Tensor b = RandomTensor({4}, 3);
    ExpectClose(
        nn::Conv2d(nn::ConstantRef(x), nn::ConstantRef(w), nn::ConstantRef(b), stride, 2)->value(),
        NaiveConv(x, w, b, stride, 2), 1e-12);
  }
}

TEST(ConvOracleTest, TransposedMatchesScatter) {
  nn::NoGradGuard guard;
  const Tensor x = RandomTensor({3, 4, 5}, 4), w = RandomTensor({3, 2, 5, 5}, 5);
  const Tensor b = RandomTensor({2}, 6);
  ExpectClose(
      nn::ConvTranspose2d(nn::ConstantRef(x), nn::ConstantRef(w), nn::ConstantRef(b), 2, 2, 1)
          ->value(),
      NaiveDeconv(x, w, b, 2, 2, 1), 1e-12);
  const Tensor w3 = RandomTensor({3, 2, 3, 3}, 7);
  ExpectClose(
      nn::ConvTranspose2d(nn::ConstantRef(x), nn::ConstantRef(w3), nn::ConstantRef(b), 2, 1, 1)
          ->value(),
      NaiveDeconv(x, w3, b, 2, 1, 1), 1e-12);
}

ModelConfig Small(Backbone b, int decoders) {
  ModelConfig c;
  c.backbone = b;
  c.decoders = decoders;
  c.stages = 2;
  c.transform_channels = 6;
  c.latent_channels = 8;
  c.hyper_channels = 4;
  c.slices = 2;
  return c;
}

TEST(ModelTest, LatentShapesFollowStages) {
  for (Backbone b : {Backbone::kHyperprior, Backbone::kChannelAr}) {
    const Model m = Model::Create(Small(b, 2), 1);
    const Tensor x = TestImage(3, 32, 48, 1);
    const LatentCode code = m.Encode(x);
    EXPECT_EQ(code.y_hat.shape(), (std::vector<int>{8, 8, 12}));
    EXPECT_EQ(code.z_hat.shape(), (std::vector<int>{4, 2, 3}));
    EXPECT_EQ(m.Reconstruct(code.y_hat).shape(), x.shape());
    EXPECT_EQ(m.Segment(code.y_hat).shape(), (std::vector<int>{1, 32, 48}));
  }
}

TEST(ModelTest, InitializationIsDeterministicAndNameKeyed) {
  const Model a = Model::Create(Small(Backbone::kChannelAr, 1), 9);
  const Model b = Model::Create(Small(Backbone::kChannelAr, 1), 9);
  const Model two = Model::Create(Small(Backbone::kChannelAr, 2), 9);
  const Model other = Model::Create(Small(Backbone::kChannelAr, 1), 10);
  ASSERT_EQ(a.parameters().size(), b.parameters().size());
  std::set<std::string> names;
  for (size_t i = 0; i < a.parameters().size(); ++i) {
    const auto& p = a.parameters()[i];
    EXPECT_TRUE(names.insert(p.name).second) << p.name;
    EXPECT_EQ(p.value.storage(), b.parameters()[i].value.storage());
    const nn::Parameter* q = two.FindParameter(p.name);
    ASSERT_NE(q, nullptr) << p.name;
    EXPECT_EQ(p.value.storage(), q->value.storage()) << p.name;
  }
  EXPECT_GT(two.parameters().size(), a.parameters().size());
  EXPECT_NE(a.FindParameter("analysis.0.conv.weight")->value.storage(),
            other.FindParameter("analysis.0.conv.weight")->value.storage());
}

TEST(ModelTest, ResidualQuantizationIsMeanCentred) {
  const Model m = Model::Create(Small(Backbone::kChannelAr, 1), 2);
  const LatentCode code = m.Encode(TestImage(3, 16, 16, 2));
  ASSERT_EQ(code.y_residuals.size(), code.y_hat.size());
  for (size_t i = 0; i < code.y_hat.size(); ++i) {
    EXPECT_EQ(code.y_hat[i], code.y_residuals[i] + code.y_params.mean[i]);
  }
  for (double v : code.z_hat.values()) EXPECT_EQ(v, std::round(v));
}

TEST(ModelTest, RoundHalfAwayFromZero) {
  EXPECT_EQ(RoundHalfAway(0.5), 1.0);
  EXPECT_EQ(RoundHalfAway(-0.5), -1.0);
  EXPECT_EQ(RoundHalfAway(2.4999), 2.0);
  EXPECT_EQ(RoundHalfAway(-2.5), -3.0);
}

TEST(ModelTest, ScalesRespectFloor) {
  const Model m = Model::Create(Small(Backbone::kHyperprior, 1), 3);
  const LatentCode code = m.Encode(TestImage(3, 16, 16, 3));
  for (double s : code.y_params.scale.values()) EXPECT_GT(s, 0.11);
}

TEST(ModelTest, SegmentRequiresTwoDecoders) {
  const Model m = Model::Create(Small(Backbone::kHyperprior, 1), 3);
  EXPECT_THROW(m.Segment(Tensor({8, 4, 4})), CapabilityError);
}

TEST(ModelTest, InvalidConfigsAreRejected) {
  ModelConfig c = Small(Backbone::kChannelAr, 1);
  c.slices = 3;  // 8 channels do not split into 3 slices
  EXPECT_THROW(Model::Create(c, 0), UserError);
  c = Small(Backbone::kHyperprior, 3);
  EXPECT_THROW(Model::Create(c, 0), UserError);
}

TEST(ModelTest, TrainForwardBitsArePositive) {
  const Model m = Model::Create(Small(Backbone::kChannelAr, 2), 4);
  Rng noise(1);
  const Tensor x = TestImage(3, 16, 16, 4);
  const TrainForward f = m.ForwardTrain(x, noise);
  EXPECT_EQ(f.y_bits->value().shape(), (std::vector<int>{8, 4, 4}));
  for (double b : f.y_bits->value().values()) EXPECT_GE(b, 0.0);
  for (double b : f.z_bits->value().values()) EXPECT_GE(b, 0.0);
  ASSERT_TRUE(f.s_hat);
  for (double s : f.s_hat->value().values()) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
}

// Regression values frozen from the reference build: checksums of each
// transform's output on a fixed input, all in double precision.
constexpr double GOLDEN_Y = -16.875288357802177;
constexpr double GOLDEN_Z = 0.3255037972425241;
constexpr double GOLDEN_H = 1.2757217514234145;
constexpr double GOLDEN_R = -22.657371566940522;
constexpr double GOLDEN_S = 477.37577936937458;

TEST(ModelTest, GoldenTransformChecksums) {
  const Model m = Model::Create(Small(Backbone::kChannelAr, 2), 2024);
  const Tensor x = TestImage(3, 16, 16, 77);
  nn::NoGradGuard guard;
  auto checksum = [](const Tensor& t) {
    double s = 0.0;
    for (size_t i = 0; i < t.size(); ++i) s += t[i] * static_cast<double>(i % 7 + 1);
    return s;
  };
  const Tensor y = m.AnalysisTransform(x);
  const Tensor z = m.HyperAnalysis(nn::ConstantRef(y))->value();
  const Tensor h = m.HyperFeatures(Tensor(z.shape(), 1.0));
  const Tensor r = m.SynthesisReconstruction(nn::ConstantRef(y))->value();
  const Tensor s = m.SynthesisSegmentation(nn::ConstantRef(y))->value();
  if (std::getenv("SCIC_PRINT_GOLDEN")) {
    std::printf("%.17g %.17g %.17g %.17g %.17g\n", checksum(y), checksum(z), checksum(h),
                checksum(r), checksum(s));
  }
  EXPECT_NEAR(checksum(y), GOLDEN_Y, 1e-9);
  EXPECT_NEAR(checksum(z), GOLDEN_Z, 1e-9);
  EXPECT_NEAR(checksum(h), GOLDEN_H, 1e-9);
  EXPECT_NEAR(checksum(r), GOLDEN_R, 1e-9);
  EXPECT_NEAR(checksum(s), GOLDEN_S, 1e-9);
}

}  // namespace
}  // namespace scic::codec
