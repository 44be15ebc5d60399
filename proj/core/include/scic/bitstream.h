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

#ifndef SCIC_BITSTREAM_H_
#define SCIC_BITSTREAM_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scic/coder.h"
#include "scic/model.h"
#include "scic/tensor.h"

namespace scic::codec {

inline constexpr uint16_t kBitstreamVersion = 1;

struct BitstreamHeader {
  uint16_t version = kBitstreamVersion;
  Backbone backbone = Backbone::kHyperprior;
  int stages = 4;
  int width = 0;
  int height = 0;
  int padded_width = 0;
  int padded_height = 0;
  int latent_channels = 0;
  int hyper_channels = 0;
  int slices = 1;
  uint32_t z_bytes = 0;
  std::vector<uint32_t> y_bytes;  // one entry per slice, in decode order

  size_t header_size() const { return 36 + 4 * y_bytes.size(); }
  size_t payload_size() const;
};

struct EncodeResult {
  BitstreamHeader header;
  std::vector<uint8_t> bytes;
  LatentCode code;  // latents of the padded image
  size_t payload_bytes() const { return header.payload_size(); }
};

struct DecodeResult {
  BitstreamHeader header;
  Tensor y_hat;
  Tensor z_hat;
  Tensor x_hat;                 // cropped to the original size
  std::optional<Tensor> s_hat;  // cropped; only when requested
};

// Parses and validates the fixed header only.
BitstreamHeader ParseHeader(std::span<const uint8_t> bytes);

// Reflect-pads `image` ({3,H,W} in [0,1]) to the hyper-latent alignment,
// quantizes the latents and entropy codes them.
EncodeResult EncodeImage(const Model& model, const Tensor& image,
                         const entropy::CoderBackend& coder = entropy::ActiveCoder());

DecodeResult DecodeImage(const Model& model, std::span<const uint8_t> bytes,
                         bool segmentation = false,
                         const entropy::CoderBackend& coder = entropy::ActiveCoder());

}  // namespace scic::codec

#endif  // SCIC_BITSTREAM_H_
