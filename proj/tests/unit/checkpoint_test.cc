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

#include "scic/checkpoint.h"

#include <gtest/gtest.h>

#include <json.hpp>

#include "scic/error.h"
#include "test_util.h"

namespace scic::checkpoint {
namespace {

using scic::testing::ReadFile;
using scic::testing::TempDir;
using scic::testing::WriteFile;

codec::Model Small() {
  codec::ModelConfig c;
  c.backbone = codec::Backbone::kChannelAr;
  c.decoders = 2;
  c.stages = 2;
  c.transform_channels = 4;
  c.latent_channels = 4;
  c.hyper_channels = 3;
  c.slices = 2;
  return codec::Model::Create(c, 3);
}

TEST(CheckpointTest, RoundTripsParametersAndHeader) {
  TempDir dir;
  codec::Model m = Small();
  m.parameters()[0].value[0] = 0.125;
  Save(dir / "m.ckpt", m, R"({"lambda":0.5})", R"({"epoch":3})");
  Header h;
  const codec::Model back = Load(dir / "m.ckpt", &h);
  ASSERT_EQ(back.parameters().size(), m.parameters().size());
  for (size_t i = 0; i < m.parameters().size(); ++i) {
    EXPECT_EQ(back.parameters()[i].name, m.parameters()[i].name);
    EXPECT_EQ(back.parameters()[i].value.storage(), m.parameters()[i].value.storage());
  }
  EXPECT_EQ(h.version, kFormatVersion);
  EXPECT_EQ(nlohmann::json::parse(h.train_config_json)["lambda"], 0.5);
  EXPECT_EQ(nlohmann::json::parse(h.metadata_json)["epoch"], 3);
  EXPECT_EQ(h.model.slices, 2);
  EXPECT_EQ(ReadHeader(dir / "m.ckpt").tensors.size(), m.parameters().size());
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    EXPECT_EQ(e.path().filename(), "m.ckpt");
  }
}

TEST(CheckpointTest, SerializationIsDeterministic) {
  EXPECT_EQ(Serialize(Small(), "{}", "{}"), Serialize(Small(), "{}", "{}"));
}

TEST(CheckpointTest, RejectsDamagedFiles) {
  TempDir dir;
  Save(dir / "m.ckpt", Small(), "{}", "{}");
  auto bytes = ReadFile(dir / "m.ckpt");
  auto bad = bytes;
  bad[0] = 'Z';
  WriteFile(dir / "magic.ckpt", bad);
  EXPECT_THROW(Load(dir / "magic.ckpt"), FormatError);
  bad = bytes;
  bad.push_back(0);
  WriteFile(dir / "trailing.ckpt", bad);
  EXPECT_THROW(Load(dir / "trailing.ckpt"), FormatError);
  bad.assign(bytes.begin(), bytes.end() - 9);
  WriteFile(dir / "short.ckpt", bad);
  EXPECT_THROW(Load(dir / "short.ckpt"), FormatError);
  EXPECT_THROW(Load(dir / "missing.ckpt"), UserError);
}

TEST(CheckpointTest, ModelConfigJsonRoundTrip) {
  codec::ModelConfig c;
  c.backbone = codec::Backbone::kChannelAr;
  c.latent_channels = 320;
  c.slices = 10;
  const codec::ModelConfig back = ModelConfigFromJson(ModelConfigToJson(c));
  EXPECT_EQ(back.backbone, c.backbone);
  EXPECT_EQ(back.latent_channels, 320);
  EXPECT_EQ(back.slices, 10);
  EXPECT_THROW(ModelConfigFromJson(R"({"backbone":"nope"})"), UserError);
}

}  // namespace
}  // namespace scic::checkpoint
