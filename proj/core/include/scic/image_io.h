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

#ifndef SCIC_IMAGE_IO_H_
#define SCIC_IMAGE_IO_H_

#include <filesystem>
#include <string>

#include "scic/tensor.h"

namespace scic::image {

// Decodes PNG, JPEG or binary PPM/PGM into a {C,H,W} tensor in [0,1].
// Colour images yield 3 channels (alpha is dropped); grayscale files yield 1
// channel unless `force_rgb` is set, in which case luma is replicated.
Tensor Load(const std::filesystem::path& path, bool force_rgb = true);

// Writes an 8-bit PNG (RGB for 3 channels, grayscale for 1). Values are
// clamped to [0,1] and rounded to the nearest level. Output bytes are a pure
// function of the tensor.
void SavePng(const std::filesystem::path& path, const Tensor& image);

// Rounds every value to the nearest multiple of 1/255 so that a subsequent
// SavePng/Load round trip is lossless.
Tensor QuantizeTo8Bit(const Tensor& image);

// Bicubic (Keys, a = -0.5) resampling with pixel-centre alignment and
// clamp-to-edge borders.
Tensor ResizeBicubic(const Tensor& image, int out_h, int out_w);

Tensor Crop(const Tensor& image, int x, int y, int w, int h);
Tensor CenterCrop(const Tensor& image, int w, int h);

struct PreparedSource {
  Tensor image;
  // "identity", "center-crop" or "resize+center-crop".
  std::string method;
};

// Brings a pool image to target x target: a centre crop when both sides are
// at least `target`, otherwise the shorter side is resized to `target`
// first.
PreparedSource PrepareSource(const Tensor& image, int target);

// Reflect-pads on the bottom/right up to multiples of `multiple`.
Tensor PadReflect(const Tensor& image, int multiple);

}  // namespace scic::image

#endif  // SCIC_IMAGE_IO_H_
