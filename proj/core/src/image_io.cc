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

#include "scic/image_io.h"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include "scic/error.h"

namespace scic::image {
namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr OpenFile(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw FormatError("cannot open " + path.string());
  return f;
}

Tensor FromInterleaved(const std::vector<uint8_t>& px, int w, int h, int channels, bool force_rgb) {
  const int out_c = (channels >= 3 || force_rgb) ? 3 : 1;
  Tensor t({out_c, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const uint8_t* p = &px[(static_cast<size_t>(y) * w + x) * channels];
      for (int c = 0; c < out_c; ++c) {
        const int src = channels >= 3 ? c : 0;
        t.at(c, y, x) = p[src] / 255.0;
      }
    }
  }
  return t;
}

Tensor LoadPng(const std::filesystem::path& path, bool force_rgb) {
  FilePtr f = OpenFile(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) throw FormatError("libpng init failed");
  std::vector<uint8_t> pixels;
  int w = 0, h = 0, channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_packing(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  w = static_cast<int>(png_get_image_width(png, info));
  h = static_cast<int>(png_get_image_height(png, info));
  channels = png_get_channels(png, info);
  pixels.resize(static_cast<size_t>(w) * h * channels);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = &pixels[static_cast<size_t>(y) * w * channels];
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  return FromInterleaved(pixels, w, h, channels, force_rgb);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

void JpegErrorExit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

Tensor LoadJpeg(const std::filesystem::path& path, bool force_rgb) {
  FilePtr f = OpenFile(path, "rb");
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = JpegErrorExit;
  std::vector<uint8_t> pixels;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError("corrupt JPEG " + path.string());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  jpeg_start_decompress(&cinfo);
  const int w = static_cast<int>(cinfo.output_width);
  const int h = static_cast<int>(cinfo.output_height);
  const int channels = cinfo.output_components;
  pixels.resize(static_cast<size_t>(w) * h * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = &pixels[static_cast<size_t>(cinfo.output_scanline) * w * channels];
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return FromInterleaved(pixels, w, h, channels, force_rgb);
}

Tensor LoadPnm(const std::filesystem::path& path, bool force_rgb) {
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  in >> magic;
  auto read_int = [&in]() {
    int v = 0;
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
    in >> v;
    return v;
  };
  const int channels = magic == "P6" ? 3 : (magic == "P5" ? 1 : 0);
  if (channels == 0) throw FormatError("unsupported PNM variant in " + path.string());
  const int w = read_int(), h = read_int(), maxval = read_int();
  in.get();
  if (w <= 0 || h <= 0 || maxval != 255) throw FormatError("unsupported PNM header");
  std::vector<uint8_t> pixels(static_cast<size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!in) throw FormatError("truncated PNM " + path.string());
  return FromInterleaved(pixels, w, h, channels, force_rgb);
}

double Cubic(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

// Resamples one axis: weights are computed once per output index.
struct AxisTaps {
  std::vector<std::array<int, 4>> index;
  std::vector<std::array<double, 4>> weight;
};

AxisTaps ComputeTaps(int in, int out) {
  AxisTaps taps;
  taps.index.resize(out);
  taps.weight.resize(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double src = (o + 0.5) * scale - 0.5;
    const int base = static_cast<int>(std::floor(src));
    const double frac = src - base;
    for (int k = 0; k < 4; ++k) {
      taps.index[o][k] = std::clamp(base - 1 + k, 0, in - 1);
      taps.weight[o][k] = Cubic(frac - (k - 1));
    }
  }
  return taps;
}

}  // namespace

Tensor Load(const std::filesystem::path& path, bool force_rgb) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw FormatError("cannot open " + path.string());
  std::array<unsigned char, 8> sig{};
  probe.read(reinterpret_cast<char*>(sig.data()), sig.size());
  if (probe.gcount() < 2) throw FormatError("unrecognized image " + path.string());
  probe.close();
  if (sig[0] == 0x89 && sig[1] == 'P' && sig[2] == 'N' && sig[3] == 'G') {
    return LoadPng(path, force_rgb);
  }
  if (sig[0] == 0xFF && sig[1] == 0xD8) return LoadJpeg(path, force_rgb);
  if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6')) return LoadPnm(path, force_rgb);
  throw FormatError("unrecognized image format " + path.string());
}

void SavePng(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || (image.dim(0) != 3 && image.dim(0) != 1)) {
    throw ShapeError("SavePng expects 1 or 3 channels, got " + image.ShapeString());
  }
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  std::vector<uint8_t> px(static_cast<size_t>(w) * h * c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < c; ++k) {
        const double v = std::clamp(image.at(k, y, x), 0.0, 1.0);
        px[(static_cast<size_t>(y) * w + x) * c + k] = static_cast<uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FilePtr f = OpenFile(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) throw FormatError("libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("failed writing " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, w, h, 8, c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y) {
    png_write_row(png, &px[static_cast<size_t>(y) * w * c]);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor QuantizeTo8Bit(const Tensor& image) {
  Tensor out = image;
  for (double& v : out.storage()) v = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  return out;
}

Tensor ResizeBicubic(const Tensor& image, int out_h, int out_w) {
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (out_h <= 0 || out_w <= 0) throw ShapeError("resize to empty size");
  const AxisTaps ty = ComputeTaps(h, out_h);
  const AxisTaps tx = ComputeTaps(w, out_w);
  Tensor rows({c, h, out_w});
  for (int k = 0; k < c; ++k) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double s = 0.0;
        for (int t = 0; t < 4; ++t) s += tx.weight[x][t] * image.at(k, y, tx.index[x][t]);
        rows.at(k, y, x) = s;
      }
    }
  }
  Tensor out({c, out_h, out_w});
  for (int k = 0; k < c; ++k) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double s = 0.0;
        for (int t = 0; t < 4; ++t) s += ty.weight[y][t] * rows.at(k, ty.index[y][t], x);
        out.at(k, y, x) = s;
      }
    }
  }
  return out;
}

Tensor Crop(const Tensor& image, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || x + w > image.dim(2) || y + h > image.dim(1) || w <= 0 || h <= 0) {
    throw ShapeError("crop window outside image");
  }
  const int c = image.dim(0);
  Tensor out({c, h, w});
  for (int k = 0; k < c; ++k) {
    for (int r = 0; r < h; ++r) {
      const double* src =
          &image.data()[(static_cast<size_t>(k) * image.dim(1) + y + r) * image.dim(2) + x];
      std::copy(src, src + w, &out.at(k, r, 0));
    }
  }
  return out;
}

Tensor CenterCrop(const Tensor& image, int w, int h) {
  return Crop(image, (image.dim(2) - w) / 2, (image.dim(1) - h) / 2, w, h);
}

PreparedSource PrepareSource(const Tensor& image, int target) {
  const int h = image.dim(1), w = image.dim(2);
  if (h == target && w == target) return {image, "identity"};
  if (h >= target && w >= target) return {CenterCrop(image, target, target), "center-crop"};
  const double scale = static_cast<double>(target) / std::min(h, w);
  const int nh = h <= w ? target : std::max(target, static_cast<int>(std::lround(h * scale)));
  const int nw = w < h ? target : std::max(target, static_cast<int>(std::lround(w * scale)));
  return {CenterCrop(ResizeBicubic(image, nh, nw), target, target), "resize+center-crop"};
}

Tensor PadReflect(const Tensor& image, int multiple) {
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const int ph = (h + multiple - 1) / multiple * multiple;
  const int pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return image;
  auto reflect = [](int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    return i < n ? i : period - i;
  };
  Tensor out({c, ph, pw});
  for (int k = 0; k < c; ++k) {
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) out.at(k, y, x) = image.at(k, reflect(y, h), reflect(x, w));
    }
  }
  return out;
}

}  // namespace scic::image
