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

#include "scic/bitstream.h"

#include <gtest/gtest.h>

#include <cstring>

#include "scic/coder.h"
#include "scic/error.h"
#include "test_util.h"

namespace scic::codec {
namespace {

using scic::testing::TestImage;

Model SmallModel(Backbone b, int decoders) {
  ModelConfig c;
  c.backbone = b;
  c.decoders = decoders;
  c.stages = 2;
  c.transform_channels = 6;
  c.latent_channels = 8;
  c.hyper_channels = 4;
  c.slices = 2;
  return Model::Create(c, 17);
}

uint32_t LeU32(const std::vector<uint8_t>& b, size_t at) {
  return b[at] | b[at + 1] << 8 | b[at + 2] << 16 | static_cast<uint32_t>(b[at + 3]) << 24;
}
uint16_t LeU16(const std::vector<uint8_t>& b, size_t at) { return b[at] | b[at + 1] << 8; }

TEST(BitstreamTest, HeaderLayoutIsByteExact) {
  const Model m = SmallModel(Backbone::kChannelAr, 1);
  const EncodeResult r = EncodeImage(m, TestImage(3, 21, 37, 1), entropy::ReferenceCoder());
  const auto& b = r.bytes;
  ASSERT_EQ(std::memcmp(b.data(), "SCIC", 4), 0);
  EXPECT_EQ(LeU16(b, 4), 1);     // version
  EXPECT_EQ(b[6], 1);            // channel-ar
  EXPECT_EQ(b[7], 2);            // stages
  EXPECT_EQ(LeU32(b, 8), 37u);   // width
  EXPECT_EQ(LeU32(b, 12), 21u);  // height
  EXPECT_EQ(LeU32(b, 16), 48u);  // padded to 16-pixel hyper grid
  EXPECT_EQ(LeU32(b, 20), 32u);
  EXPECT_EQ(LeU16(b, 24), 8);  // latent channels
  EXPECT_EQ(LeU16(b, 26), 4);  // hyper channels
  EXPECT_EQ(LeU16(b, 28), 2);  // slices
  EXPECT_EQ(LeU16(b, 30), 0);  // reserved
  const uint32_t z = LeU32(b, 32), y0 = LeU32(b, 36), y1 = LeU32(b, 40);
  EXPECT_EQ(b.size(), 44u + z + y0 + y1);
  EXPECT_EQ(r.header.header_size(), 44u);
  EXPECT_EQ(r.payload_bytes(), static_cast<size_t>(z) + y0 + y1);
  const BitstreamHeader h = ParseHeader(b);
  EXPECT_EQ(h.width, 37);
  EXPECT_EQ(h.y_bytes, (std::vector<uint32_t>{y0, y1}));
}

TEST(BitstreamTest, RoundTripReproducesEncoderLatents) {
  for (Backbone bb : {Backbone::kHyperprior, Backbone::kChannelAr}) {
    const Model m = SmallModel(bb, 2);
    const Tensor x = TestImage(3, 30, 19, 2);
    const EncodeResult enc = EncodeImage(m, x, entropy::ReferenceCoder());
    const DecodeResult dec = DecodeImage(m, enc.bytes, true, entropy::ReferenceCoder());
    EXPECT_EQ(dec.y_hat.storage(), enc.code.y_hat.storage());
    EXPECT_EQ(dec.z_hat.storage(), enc.code.z_hat.storage());
    EXPECT_EQ(dec.x_hat.shape(), x.shape());
    ASSERT_TRUE(dec.s_hat.has_value());
    EXPECT_EQ(dec.s_hat->shape(), (std::vector<int>{1, 30, 19}));
  }
}

TEST(BitstreamTest, PayloadTracksRateEstimate) {
  const Model m = SmallModel(Backbone::kHyperprior, 1);
  const EncodeResult enc = EncodeImage(m, TestImage(3, 64, 64, 3), entropy::ReferenceCoder());
  const double estimate = m.EstimateRate(enc.code).total_bits() / 8.0;
  EXPECT_LE(static_cast<double>(enc.payload_bytes()), estimate * 1.01 + 32);
  EXPECT_GE(static_cast<double>(enc.payload_bytes()), estimate * 0.9 - 32);
}

TEST(BitstreamTest, RejectsMalformedStreams) {
  const Model m = SmallModel(Backbone::kHyperprior, 1);
  EncodeResult enc = EncodeImage(m, TestImage(3, 16, 16, 4), entropy::ReferenceCoder());
  auto bad = enc.bytes;
  bad[0] = 'X';
  EXPECT_THROW(ParseHeader(bad), FormatError);
  bad = enc.bytes;
  bad[4] = 9;
  EXPECT_THROW(ParseHeader(bad), FormatError);
  bad.assign(enc.bytes.begin(), enc.bytes.begin() + 20);
  EXPECT_THROW(ParseHeader(bad), FormatError);
  bad.assign(enc.bytes.begin(), enc.bytes.end() - 1);
  EXPECT_THROW(DecodeImage(m, bad, false, entropy::ReferenceCoder()), UserError);
}

TEST(BitstreamTest, CapabilityAndGeometryChecks) {
  const Model one = SmallModel(Backbone::kHyperprior, 1);
  const EncodeResult enc = EncodeImage(one, TestImage(3, 16, 16, 5), entropy::ReferenceCoder());
  EXPECT_THROW(DecodeImage(one, enc.bytes, true, entropy::ReferenceCoder()), CapabilityError);
  const Model other = SmallModel(Backbone::kChannelAr, 1);
  EXPECT_THROW(DecodeImage(other, enc.bytes, false, entropy::ReferenceCoder()), UserError);
}

}  // namespace
}  // namespace scic::codec
