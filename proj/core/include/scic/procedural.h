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

#ifndef SCIC_PROCEDURAL_H_
#define SCIC_PROCEDURAL_H_

#include <cstdint>
#include <filesystem>

#include "scic/rng.h"
#include "scic/tensor.h"

namespace scic::procedural {

// Renders a desktop-like screen: flat backgrounds, windows with title bars,
// glyph text, buttons and rules. Noise-free with sharp edges.
Tensor RenderScreen(Rng& rng, int width, int height);

// Renders a camera-like scene: multi-octave 1/f texture, soft-edged blobs,
// smooth colour variation and mild sensor noise.
Tensor RenderNaturalScene(Rng& rng, int width, int height);

// Writes `count` PNGs of each kind into <dir>/synthetic and <dir>/natural.
// Stand-in image pools for tests and demos when no real corpus is at hand.
void WritePools(const std::filesystem::path& dir, int count, int size, uint64_t seed);

}  // namespace scic::procedural

#endif  // SCIC_PROCEDURAL_H_
