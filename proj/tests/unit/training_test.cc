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

#include "scic/training.h"

#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "scic/error.h"
#include "test_util.h"

namespace scic::training {
namespace {

using scic::testing::ReadText;
using scic::testing::TempDir;
using scic::testing::TestImage;

std::vector<TrainingImage> MaskedCorpus(int n, int size) {
  std::vector<TrainingImage> out;
  for (int i = 0; i < n; ++i) {
    const Tensor img = TestImage(3, size, size, 100 + i);
    TrainingImage t;
    t.width = t.height = size;
    t.id = "img" + std::to_string(i);
    for (double v : img.values()) t.rgb.push_back(static_cast<uint8_t>(std::lround(v * 255)));
    t.mask.assign(static_cast<size_t>(size) * size, 0);
    for (int y = 4 + i; y < size / 2 + i; ++y) {
      for (int x = 6; x < size / 2 + 6; ++x) t.mask[static_cast<size_t>(y) * size + x] = 1;
    }
    out.push_back(std::move(t));
  }
  return out;
}

TrainConfig Tiny(int decoders) {
  TrainConfig c;
  c.decoders = decoders;
  c.corpus = Corpus::kComposite;
  c.lambda = 100;
  c.phi = decoders == 2 ? 1.0 : 0.0;
  c.lr = 1e-3;
  c.epochs = 1;
  c.batch = 2;
  c.crop = 16;
  c.stages = 2;
  c.transform_channels = 4;
  c.latent_channels = 4;
  c.hyper_channels = 3;
  c.seed = 7;
  return c;
}

TEST(TrainConfigTest, JsonRoundTripAndUnknownKeys) {
  TrainConfig c = Tiny(2);
  c.backbone = codec::Backbone::kChannelAr;
  c.slices = 2;
  c.data = "some/manifest.json";
  const TrainConfig back = TrainConfigFromJson(ToJson(c));
  EXPECT_EQ(ToJson(back), ToJson(c));
  EXPECT_EQ(back.phi, 1.0);
  EXPECT_THROW(TrainConfigFromJson(R"({"lamda": 1})"), UserError);
  EXPECT_THROW(TrainConfigFromJson("[1]"), UserError);
}

TEST(TrainConfigTest, NamesFollowCodecScheme) {
  TrainConfig c = Tiny(1);
  EXPECT_EQ(c.Name(), "bmshj2018-1-Decoder-S/N");
  EXPECT_EQ(c.FileStem(), "bmshj2018-1-Decoder-SN");
  c.corpus = Corpus::kNatural;
  EXPECT_EQ(c.Name(), "bmshj2018-1-Decoder-Natural");
  c = Tiny(2);
  c.backbone = codec::Backbone::kChannelAr;
  EXPECT_EQ(c.Name(), "ms2020-2-Decoder");
  EXPECT_EQ(ParseCorpus(CorpusTag(Corpus::kComposite)), Corpus::kComposite);
}

TEST(TrainConfigTest, ValidationRejectsInconsistentConfigs) {
  TrainConfig c = Tiny(2);
  c.corpus = Corpus::kNatural;
  EXPECT_THROW(c.Validate(), UserError);
  c = Tiny(1);
  c.phi = 0.1;
  EXPECT_THROW(c.Validate(), UserError);
  c = Tiny(1);
  c.crop = 24;
  EXPECT_THROW(c.Validate(), UserError);
  c = Tiny(1);
  c.lambda = 0;
  EXPECT_THROW(c.Validate(), UserError);
}

TEST(GridTest, ExpandsPairsIntoNamedConfigs) {
  const auto two = ExpandGrid(Tiny(2), DefaultGrid());
  ASSERT_EQ(two.size(), 5u);
  EXPECT_EQ(two[2].lambda, 1e-2);
  EXPECT_EQ(two[2].phi, 1e-6);
  EXPECT_NE(two[0].Name(), two[1].Name());
  const auto one = ExpandGrid(Tiny(1), {{1.0, 0.5}, {2.0, 0.5}});
  EXPECT_EQ(one[0].phi, 0.0);
  EXPECT_THROW(ExpandGrid(Tiny(1), {{1.0, 0.0}, {1.0, 0.5}}), UserError);
  EXPECT_THROW(ExpandGrid(Tiny(1), {}), UserError);
}

TEST(LossTest, TotalIsRatePlusWeightedDistortions) {
  const Tensor x = TestImage(3, 8, 8, 1);
  const Tensor xh = TestImage(3, 8, 8, 2);
  const Tensor s({1, 8, 8}, 1.0);
  const Tensor sh({1, 8, 8}, 0.75);
  const LossBreakdown l = Loss(x, xh, &s, &sh, 0.4, 10.0, 2.0);
  EXPECT_DOUBLE_EQ(l.distortion_s, 0.0625);
  EXPECT_EQ(l.total, l.rate + 10.0 * l.distortion_x + 2.0 * l.distortion_s);
  EXPECT_THROW(Loss(x, xh, nullptr, nullptr, 0.4, 10.0, 2.0), UserError);
}

TEST(TrainTest, LoggedTotalsSatisfyLossIdentity) {
  TempDir dir;
  const TrainConfig c = Tiny(2);
  TrainOptions o;
  o.out_dir = dir.path();
  o.max_steps = 3;
  const TrainResult r = Train(c, MaskedCorpus(4, 24), o);
  ASSERT_EQ(r.log.size(), 2u);  // one epoch of floor(4/2) steps
  for (const StepRecord& s : r.log) {
    EXPECT_EQ(s.loss.total,
              s.loss.rate + c.lambda * s.loss.distortion_x + c.phi * s.loss.distortion_s);
    EXPECT_GT(s.loss.distortion_s, 0.0);
  }
  const std::string log = ReadText(dir / "train_log.jsonl");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 2);
  EXPECT_TRUE(std::filesystem::exists(dir / "best.ckpt"));
  // A rerun truncates the log instead of appending to it.
  Train(c, MaskedCorpus(4, 24), o);
  EXPECT_EQ(ReadText(dir / "train_log.jsonl"), log);
}

TEST(TrainTest, SampleLossGraphMatchesIdentity) {
  const codec::Model m = codec::Model::Create(Tiny(2).Model(), 3);
  const Tensor x = TestImage(3, 16, 16, 4);
  Tensor mask({1, 16, 16});
  mask.at(0, 3, 3) = 1;
  Rng noise(1);
  const SampleLoss g = BuildSampleLoss(m, x, &mask, noise, 5.0, 0.5);
  ASSERT_TRUE(g.distortion_s);
  EXPECT_DOUBLE_EQ(g.total->value()[0], g.rate->value()[0] + 5.0 * g.distortion_x->value()[0] +
                                            0.5 * g.distortion_s->value()[0]);
  Rng again(1);
  EXPECT_THROW(BuildSampleLoss(m, x, nullptr, again, 5.0, 0.5), UserError);
}

TEST(TrainTest, PhiZeroLeavesSharedTrajectoryUnchanged) {
  TrainConfig one = Tiny(1), two = Tiny(2);
  two.phi = 0.0;
  one.epochs = two.epochs = 3;
  const auto corpus = MaskedCorpus(4, 24);
  const TrainResult a = Train(one, corpus);
  const TrainResult b = Train(two, corpus);
  for (const nn::Parameter& p : a.model.parameters()) {
    const nn::Parameter* q = b.model.FindParameter(p.name);
    ASSERT_NE(q, nullptr) << p.name;
    for (size_t i = 0; i < p.value.size(); ++i) {
      ASSERT_NEAR(p.value[i], q->value[i], 1e-6) << p.name;
    }
  }
}

TEST(TrainTest, NonFiniteLossDumpsBatch) {
  TempDir dir;
  TrainConfig c = Tiny(1);
  c.lr = 1e30;
  c.epochs = 5;
  TrainOptions o;
  o.out_dir = dir.path();
  EXPECT_THROW(Train(c, MaskedCorpus(4, 24), o), Error);
  bool dumped = false;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    if (e.path().filename().string().rfind("nonfinite_step", 0) == 0) {
      dumped = std::filesystem::exists(e.path() / "batch.json");
    }
  }
  EXPECT_TRUE(dumped);
}

TEST(TrainTest, RejectsBadCorpora) {
  auto corpus = MaskedCorpus(2, 24);
  corpus[1].mask.clear();
  EXPECT_THROW(Train(Tiny(2), corpus), UserError);
  EXPECT_THROW(Train(Tiny(1), std::vector<TrainingImage>{}), UserError);
}

}  // namespace
}  // namespace scic::training
