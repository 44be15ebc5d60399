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

#include <cstring>
#include <numeric>

#include "scic/error.h"
#include "scic/image_io.h"
#include "scic/rans.h"

namespace scic::codec {
namespace {

constexpr char kMagic[4] = {'S', 'C', 'I', 'C'};

class Writer {
 public:
  void Bytes(const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void U8(uint8_t v) { out_.push_back(v); }
  void U16(uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  std::vector<uint8_t>& out() { return out_; }

 private:
  std::vector<uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> in) : in_(in) {}
  void Need(size_t n) const {
    if (pos_ + n > in_.size()) throw FormatError("bitstream truncated in header");
  }
  uint8_t U8() {
    Need(1);
    return in_[pos_++];
  }
  uint16_t U16() {
    Need(2);
    uint16_t v = in_[pos_] | (in_[pos_ + 1] << 8);
    pos_ += 2;
    return v;
  }
  uint32_t U32() {
    Need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  size_t pos() const { return pos_; }

 private:
  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

const std::vector<double>& ScaleTable() {
  static const std::vector<double> table = entropy::DefaultScaleTable();
  return table;
}

const std::vector<entropy::CdfTable>& ScaleTables() {
  static const std::vector<entropy::CdfTable> tables = entropy::BuildScaleCdfs(ScaleTable());
  return tables;
}

std::vector<int32_t> ScaleContexts(const Tensor& scale) {
  std::vector<int32_t> ctx(scale.size());
  for (size_t i = 0; i < scale.size(); ++i) {
    if (!(scale[i] >= entropy::kScaleMin)) throw InvariantViolation("scale below floor");
    ctx[i] = entropy::ScaleIndex(ScaleTable(), scale[i]);
  }
  return ctx;
}

std::vector<int32_t> ChannelContexts(const std::vector<int>& shape) {
  std::vector<int32_t> ctx(NumElements(shape));
  const size_t plane = ctx.size() / shape[0];
  for (size_t i = 0; i < ctx.size(); ++i) ctx[i] = static_cast<int32_t>(i / plane);
  return ctx;
}

void CheckAgainstModel(const BitstreamHeader& h, const ModelConfig& c) {
  if (h.backbone != c.backbone) {
    throw UserError("bitstream backbone " + BackboneTag(h.backbone) +
                    " does not match checkpoint backbone " + BackboneTag(c.backbone));
  }
  if (h.stages != c.stages || h.latent_channels != c.latent_channels ||
      h.hyper_channels != c.hyper_channels || h.slices != c.EffectiveSlices()) {
    throw UserError("bitstream geometry does not match the checkpoint");
  }
}

}  // namespace

size_t BitstreamHeader::payload_size() const {
  return std::accumulate(y_bytes.begin(), y_bytes.end(), static_cast<size_t>(z_bytes));
}

BitstreamHeader ParseHeader(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a bitstream (bad magic)");
  }
  Reader r(bytes.subspan(4));
  BitstreamHeader h;
  h.version = r.U16();
  if (h.version != kBitstreamVersion) {
    throw FormatError("unsupported bitstream version " + std::to_string(h.version));
  }
  const uint8_t backbone = r.U8();
  if (backbone > 1) throw FormatError("unknown backbone code " + std::to_string(backbone));
  h.backbone = backbone == 0 ? Backbone::kHyperprior : Backbone::kChannelAr;
  h.stages = r.U8();
  h.width = static_cast<int>(r.U32());
  h.height = static_cast<int>(r.U32());
  h.padded_width = static_cast<int>(r.U32());
  h.padded_height = static_cast<int>(r.U32());
  h.latent_channels = r.U16();
  h.hyper_channels = r.U16();
  h.slices = r.U16();
  r.U16();
  if (h.slices < 1 || h.stages < 1 || h.stages > 8 || h.width <= 0 || h.height <= 0 ||
      h.padded_width < h.width || h.padded_height < h.height) {
    throw FormatError("invalid bitstream header fields");
  }
  h.z_bytes = r.U32();
  for (int k = 0; k < h.slices; ++k) h.y_bytes.push_back(r.U32());
  if (bytes.size() != h.header_size() + h.payload_size()) {
    throw FormatError("bitstream length " + std::to_string(bytes.size()) +
                      " does not match header (" +
                      std::to_string(h.header_size() + h.payload_size()) + ")");
  }
  return h;
}

EncodeResult EncodeImage(const Model& model, const Tensor& image,
                         const entropy::CoderBackend& coder) {
  const ModelConfig& cfg = model.config();
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("expected a {3,H,W} image, got " + image.ShapeString());
  }
  const Tensor padded = image::PadReflect(image, cfg.HyperFactor());

  EncodeResult res;
  res.code = model.Encode(padded);
  BitstreamHeader& h = res.header;
  h.backbone = cfg.backbone;
  h.stages = cfg.stages;
  h.width = image.dim(2);
  h.height = image.dim(1);
  h.padded_width = padded.dim(2);
  h.padded_height = padded.dim(1);
  h.latent_channels = cfg.latent_channels;
  h.hyper_channels = cfg.hyper_channels;
  h.slices = cfg.EffectiveSlices();

  const Tensor& z = res.code.z_hat;
  std::vector<int32_t> z_symbols(z.size());
  for (size_t i = 0; i < z.size(); ++i) z_symbols[i] = static_cast<int32_t>(z[i]);
  const auto z_tables = entropy::BuildFactorizedCdfs(model.HyperPrior());
  const auto z_payload = coder.BuildTables(z_tables)->Encode(z_symbols, ChannelContexts(z.shape()));
  h.z_bytes = static_cast<uint32_t>(z_payload.size());

  const auto session = coder.BuildTables(ScaleTables());
  const size_t per_slice = res.code.y_hat.size() / h.slices;
  const std::vector<int32_t> ctx = ScaleContexts(res.code.y_params.scale);
  std::vector<std::vector<uint8_t>> y_payloads;
  for (int k = 0; k < h.slices; ++k) {
    const size_t begin = k * per_slice;
    y_payloads.push_back(session->Encode(std::span(res.code.y_residuals).subspan(begin, per_slice),
                                         std::span(ctx).subspan(begin, per_slice)));
    h.y_bytes.push_back(static_cast<uint32_t>(y_payloads.back().size()));
  }

  Writer w;
  w.Bytes(kMagic, 4);
  w.U16(h.version);
  w.U8(h.backbone == Backbone::kHyperprior ? 0 : 1);
  w.U8(static_cast<uint8_t>(h.stages));
  w.U32(h.width);
  w.U32(h.height);
  w.U32(h.padded_width);
  w.U32(h.padded_height);
  w.U16(static_cast<uint16_t>(h.latent_channels));
  w.U16(static_cast<uint16_t>(h.hyper_channels));
  w.U16(static_cast<uint16_t>(h.slices));
  w.U16(0);
  w.U32(h.z_bytes);
  for (uint32_t n : h.y_bytes) w.U32(n);
  w.Bytes(z_payload.data(), z_payload.size());
  for (const auto& p : y_payloads) w.Bytes(p.data(), p.size());
  res.bytes = std::move(w.out());
  return res;
}

DecodeResult DecodeImage(const Model& model, std::span<const uint8_t> bytes, bool segmentation,
                         const entropy::CoderBackend& coder) {
  const ModelConfig& cfg = model.config();
  DecodeResult res;
  res.header = ParseHeader(bytes);
  const BitstreamHeader& h = res.header;
  CheckAgainstModel(h, cfg);
  if (h.padded_width % cfg.HyperFactor() != 0 || h.padded_height % cfg.HyperFactor() != 0) {
    throw FormatError("padded size is not aligned to the hyper-latent grid");
  }
  if (segmentation && cfg.decoders < 2) {
    throw CapabilityError("checkpoint has no segmentation decoder");
  }
  size_t pos = h.header_size();
  auto take = [&](size_t n) {
    auto s = bytes.subspan(pos, n);
    pos += n;
    return s;
  };

  const int zh = h.padded_height / cfg.HyperFactor(), zw = h.padded_width / cfg.HyperFactor();
  const std::vector<int> z_shape = {cfg.hyper_channels, zh, zw};
  const auto z_tables = entropy::BuildFactorizedCdfs(model.HyperPrior());
  const auto z_symbols =
      coder.BuildTables(z_tables)->Decode(take(h.z_bytes), ChannelContexts(z_shape));
  res.z_hat = Tensor(z_shape);
  for (size_t i = 0; i < z_symbols.size(); ++i) res.z_hat[i] = z_symbols[i];

  const Tensor hyper = model.HyperFeatures(res.z_hat);
  const auto session = coder.BuildTables(ScaleTables());
  std::vector<Tensor> slices;
  for (int k = 0; k < h.slices; ++k) {
    EntropyParams ep = model.SliceParams(hyper, slices, k);
    const auto symbols = session->Decode(take(h.y_bytes[k]), ScaleContexts(ep.scale));
    Tensor yk(ep.mean.shape());
    for (size_t i = 0; i < yk.size(); ++i) yk[i] = static_cast<double>(symbols[i]) + ep.mean[i];
    slices.push_back(std::move(yk));
  }
  std::vector<const Tensor*> parts;
  for (const Tensor& t : slices) parts.push_back(&t);
  res.y_hat = ConcatChannels(parts);

  res.x_hat = image::Crop(model.Reconstruct(res.y_hat), 0, 0, h.width, h.height);
  if (segmentation) res.s_hat = image::Crop(model.Segment(res.y_hat), 0, 0, h.width, h.height);
  return res;
}

}  // namespace scic::codec
