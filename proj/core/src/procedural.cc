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

#include "scic/procedural.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <vector>

#include "scic/image_io.h"

namespace scic::procedural {
namespace {

using Color = std::array<double, 3>;

Color RandomColor(Rng& rng, double lo, double hi) {
  return {rng.Uniform(lo, hi), rng.Uniform(lo, hi), rng.Uniform(lo, hi)};
}

void FillRect(Tensor& img, int x0, int y0, int w, int h, const Color& c) {
  const int x1 = std::min(img.dim(2), x0 + w), y1 = std::min(img.dim(1), y0 + h);
  for (int k = 0; k < 3; ++k) {
    for (int y = std::max(0, y0); y < y1; ++y) {
      for (int x = std::max(0, x0); x < x1; ++x) img.at(k, y, x) = c[k];
    }
  }
}

void StrokeRect(Tensor& img, int x0, int y0, int w, int h, const Color& c) {
  FillRect(img, x0, y0, w, 1, c);
  FillRect(img, x0, y0 + h - 1, w, 1, c);
  FillRect(img, x0, y0, 1, h, c);
  FillRect(img, x0 + w - 1, y0, 1, h, c);
}

// A bank of 5x7 glyphs built from random strokes; reads as text at a glance.
struct GlyphBank {
  std::vector<std::array<uint8_t, 35>> glyphs;
  explicit GlyphBank(Rng& rng) {
    for (int g = 0; g < 48; ++g) {
      std::array<uint8_t, 35> bits{};
      const int strokes = static_cast<int>(rng.UniformInt(2, 4));
      for (int s = 0; s < strokes; ++s) {
        if (rng.Uniform() < 0.5) {
          const int col = static_cast<int>(rng.UniformInt(0, 4));
          const int r0 = static_cast<int>(rng.UniformInt(0, 3));
          const int r1 = static_cast<int>(rng.UniformInt(r0 + 2, 6));
          for (int r = r0; r <= r1; ++r) bits[r * 5 + col] = 1;
        } else {
          const int row = static_cast<int>(rng.UniformInt(0, 6));
          const int c0 = static_cast<int>(rng.UniformInt(0, 2));
          const int c1 = static_cast<int>(rng.UniformInt(c0 + 1, 4));
          for (int c = c0; c <= c1; ++c) bits[row * 5 + c] = 1;
        }
      }
      glyphs.push_back(bits);
    }
  }
};

void DrawText(Tensor& img, const GlyphBank& bank, Rng& rng, int x0, int y0, int max_w, int scale,
              const Color& c) {
  int x = x0;
  const int advance = 6 * scale;
  while (x + 5 * scale <= x0 + max_w) {
    if (rng.Uniform() < 0.15) {
      x += advance;  // word gap
      continue;
    }
    const auto& g = bank.glyphs[rng.UniformInt(0, static_cast<int64_t>(bank.glyphs.size()) - 1)];
    for (int r = 0; r < 7; ++r) {
      for (int col = 0; col < 5; ++col) {
        if (g[r * 5 + col]) FillRect(img, x + col * scale, y0 + r * scale, scale, scale, c);
      }
    }
    x += advance;
  }
}

void DrawWindow(Tensor& img, const GlyphBank& bank, Rng& rng, int x0, int y0, int w, int h,
                bool dark) {
  const Color body = dark ? RandomColor(rng, 0.10, 0.22) : RandomColor(rng, 0.90, 1.0);
  const Color ink = dark ? RandomColor(rng, 0.80, 0.95) : RandomColor(rng, 0.0, 0.2);
  const Color title = RandomColor(rng, 0.2, 0.8);
  FillRect(img, x0, y0, w, h, body);
  const int bar = std::max(6, h / 10);
  FillRect(img, x0, y0, w, bar, title);
  StrokeRect(img, x0, y0, w, h, {0.3, 0.3, 0.3});
  const int scale = w > 160 && rng.Uniform() < 0.3 ? 2 : 1;
  int y = y0 + bar + 4;
  while (y + 8 * scale < y0 + h - 4) {
    const double roll = rng.Uniform();
    if (roll < 0.65) {
      const int line_w = static_cast<int>(rng.Uniform(0.3, 1.0) * (w - 8));
      DrawText(img, bank, rng, x0 + 4, y, line_w, scale, ink);
      y += 9 * scale + 1;
    } else if (roll < 0.8) {
      const Color btn = RandomColor(rng, 0.3, 0.9);
      const int bw = std::min(w - 8, static_cast<int>(rng.UniformInt(16, 48)));
      FillRect(img, x0 + 4, y, bw, 10, btn);
      StrokeRect(img, x0 + 4, y, bw, 10, ink);
      y += 14;
    } else if (roll < 0.9) {
      FillRect(img, x0 + 4, y + 2, w - 8, 1, ink);
      y += 6;
    } else {
      const int bars = static_cast<int>(rng.UniformInt(3, 8));
      const int chart_h = 24;
      for (int b = 0; b < bars && 4 + b * 8 + 6 < w; ++b) {
        const int bh = static_cast<int>(rng.UniformInt(4, chart_h));
        FillRect(img, x0 + 4 + b * 8, y + chart_h - bh, 6, bh, RandomColor(rng, 0.2, 0.9));
      }
      y += chart_h + 4;
    }
  }
}

// Smooth lattice noise with bicubic interpolation, one octave.
Tensor ValueNoise(Rng& rng, int width, int height, int cells) {
  const int gw = cells + 4, gh = cells + 4;
  Tensor grid({1, gh, gw});
  for (double& v : grid.storage()) v = rng.Uniform(-1.0, 1.0);
  Tensor up = image::ResizeBicubic(grid, height * gh / cells, width * gw / cells);
  return image::Crop(up, (up.dim(2) - width) / 2, (up.dim(1) - height) / 2, width, height);
}

}  // namespace

Tensor RenderScreen(Rng& rng, int width, int height) {
  Tensor img({3, height, width});
  const bool dark = rng.Uniform() < 0.3;
  FillRect(img, 0, 0, width, height,
           dark ? RandomColor(rng, 0.05, 0.3) : RandomColor(rng, 0.6, 0.95));
  GlyphBank bank(rng);
  const int windows = static_cast<int>(rng.UniformInt(1, 4));
  for (int i = 0; i < windows; ++i) {
    const int w = static_cast<int>(rng.Uniform(0.35, 0.9) * width);
    const int h = static_cast<int>(rng.Uniform(0.3, 0.85) * height);
    const int x = static_cast<int>(rng.UniformInt(0, width - w));
    const int y = static_cast<int>(rng.UniformInt(0, height - h));
    DrawWindow(img, bank, rng, x, y, w, h, dark ? rng.Uniform() < 0.8 : rng.Uniform() < 0.1);
  }
  const int task = std::max(4, height / 24);
  FillRect(img, 0, height - task, width, task, RandomColor(rng, 0.1, 0.4));
  for (int x = 4; x + task < width / 3; x += task + 2) {
    FillRect(img, x, height - task + 1, task - 2, task - 2, RandomColor(rng, 0.3, 1.0));
  }
  return image::QuantizeTo8Bit(img);
}

Tensor RenderNaturalScene(Rng& rng, int width, int height) {
  Tensor img({3, height, width});
  // Luminance texture: octaves with 1/f amplitude falloff.
  Tensor lum({1, height, width});
  double amp = 1.0;
  for (int cells = 2; cells <= std::max(width, height) / 2; cells *= 2) {
    Tensor oct = ValueNoise(rng, width, height, cells);
    for (size_t i = 0; i < lum.size(); ++i) lum[i] += amp * oct[i];
    amp *= 0.6;
  }
  Tensor hue = ValueNoise(rng, width, height, 2);
  const Color a = RandomColor(rng, 0.1, 0.9), b = RandomColor(rng, 0.1, 0.9);
  const double contrast = rng.Uniform(0.12, 0.25);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const size_t i = static_cast<size_t>(y) * width + x;
      const double t = 0.5 + 0.5 * hue[i];
      for (int k = 0; k < 3; ++k) {
        img.at(k, y, x) = (1 - t) * a[k] + t * b[k] + contrast * lum[i];
      }
    }
  }
  const int blobs = static_cast<int>(rng.UniformInt(2, 6));
  for (int n = 0; n < blobs; ++n) {
    const double cx = rng.Uniform(0, width), cy = rng.Uniform(0, height);
    const double rx = rng.Uniform(0.05, 0.3) * width, ry = rng.Uniform(0.05, 0.3) * height;
    const double soft = rng.Uniform(0.05, 0.3);
    const Color c = RandomColor(rng, 0.05, 0.95);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double d = std::hypot((x - cx) / rx, (y - cy) / ry);
        const double alpha = 0.8 / (1.0 + std::exp((d - 1.0) / soft));
        for (int k = 0; k < 3; ++k) {
          img.at(k, y, x) = (1 - alpha) * img.at(k, y, x) + alpha * c[k];
        }
      }
    }
  }
  const double noise = rng.Uniform(0.01, 0.025);
  for (double& v : img.storage()) v += noise * rng.Normal();
  return image::QuantizeTo8Bit(img);
}

void WritePools(const std::filesystem::path& dir, int count, int size, uint64_t seed) {
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05d.png", i);
    Rng srng = Rng::Derive(seed, 1, i);
    image::SavePng(dir / "synthetic" / name, RenderScreen(srng, size, size));
    Rng nrng = Rng::Derive(seed, 2, i);
    image::SavePng(dir / "natural" / name, RenderNaturalScene(nrng, size, size));
  }
}

}  // namespace scic::procedural
