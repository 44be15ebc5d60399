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

#include "scic/dataset.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "parallel.h"
#include "scic/error.h"
#include "scic/image_io.h"

namespace scic::dataset {
namespace {

using nlohmann::json;

constexpr int kManifestVersion = 1;

std::string SampleName(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d.png", index);
  return buf;
}

}  // namespace

Rect SamplePatchRect(Rng& rng, int canvas_w, int canvas_h, const PatchGeometry& geometry) {
  if (geometry.min_size <= 0 || geometry.min_size > geometry.max_size) {
    throw UserError("invalid patch size range");
  }
  if (canvas_w < geometry.max_size || canvas_h < geometry.max_size) {
    throw UserError("canvas " + std::to_string(canvas_w) + "x" + std::to_string(canvas_h) +
                    " smaller than the largest patch (" + std::to_string(geometry.max_size) + ")");
  }
  Rect r;
  r.w = static_cast<int>(rng.UniformInt(geometry.min_size, geometry.max_size));
  r.h = static_cast<int>(rng.UniformInt(geometry.min_size, geometry.max_size));
  r.x = static_cast<int>(rng.UniformInt(0, canvas_w - r.w));
  r.y = static_cast<int>(rng.UniformInt(0, canvas_h - r.h));
  return r;
}

Tensor RectMask(int width, int height, const Rect& rect) {
  Tensor mask({1, height, width});
  for (int y = rect.y; y < rect.y + rect.h; ++y) {
    for (int x = rect.x; x < rect.x + rect.w; ++x) mask.at(0, y, x) = 1.0;
  }
  return mask;
}

CompositeSample Composite(const Tensor& synthetic, const Tensor& natural, const Rect& rect,
                          Rng& rng) {
  if (synthetic.rank() != 3 || synthetic.dim(0) != 3 || natural.rank() != 3 ||
      natural.dim(0) != 3) {
    throw ShapeError("composite expects 3-channel sources");
  }
  const int cw = synthetic.dim(2), ch = synthetic.dim(1);
  if (rect.x < 0 || rect.y < 0 || rect.x + rect.w > cw || rect.y + rect.h > ch) {
    throw UserError("rect outside the synthetic canvas");
  }
  if (natural.dim(2) < rect.w || natural.dim(1) < rect.h) {
    throw UserError("natural source " + natural.ShapeString() + " smaller than patch " +
                    std::to_string(rect.w) + "x" + std::to_string(rect.h));
  }
  CompositeSample s;
  s.rect = rect;
  s.natural_x = static_cast<int>(rng.UniformInt(0, natural.dim(2) - rect.w));
  s.natural_y = static_cast<int>(rng.UniformInt(0, natural.dim(1) - rect.h));
  s.image = synthetic;
  for (int k = 0; k < 3; ++k) {
    for (int y = 0; y < rect.h; ++y) {
      for (int x = 0; x < rect.w; ++x) {
        s.image.at(k, rect.y + y, rect.x + x) = natural.at(k, s.natural_y + y, s.natural_x + x);
      }
    }
  }
  s.mask = RectMask(cw, ch, rect);
  return s;
}

std::string SplitName(Split s) { return s == Split::kTrain ? "train" : "test"; }

std::vector<const ManifestEntry*> DatasetManifest::Select(Split split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : samples) {
    if (e.split == split) out.push_back(&e);
  }
  return out;
}

std::string DatasetManifest::ToJson() const {
  json j;
  j["format"] = "scic-manifest";
  j["version"] = kManifestVersion;
  j["tool_version"] = tool_version;
  j["master_seed"] = master_seed;
  j["n"] = n;
  j["test_n"] = test_n;
  j["canvas"] = geometry.canvas;
  j["patch_min"] = geometry.min_size;
  j["patch_max"] = geometry.max_size;
  j["mask_polarity"] = "1=natural,0=synthetic";
  j["natural_patch_location"] = "random";
  j["source_preparation"] =
      "center-crop when both sides >= canvas, else bicubic resize of the shorter side "
      "to canvas then center-crop";
  json arr = json::array();
  for (const auto& e : samples) {
    arr.push_back({{"index", e.index},
                   {"image", e.image_path},
                   {"mask", e.mask_path},
                   {"rect", {{"x", e.rect.x}, {"y", e.rect.y}, {"w", e.rect.w}, {"h", e.rect.h}}},
                   {"natural_origin", {{"x", e.natural_x}, {"y", e.natural_y}}},
                   {"synthetic_source", e.synthetic_source},
                   {"natural_source", e.natural_source},
                   {"synthetic_prep", e.synthetic_prep},
                   {"natural_prep", e.natural_prep},
                   {"split", SplitName(e.split)},
                   {"seed_offset", e.seed_offset}});
  }
  j["samples"] = std::move(arr);
  return j.dump(1);
}

void DatasetManifest::Save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << ToJson() << '\n';
  if (!out) throw Error("failed writing manifest " + path.string());
}

DatasetManifest DatasetManifest::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "scic-manifest") {
    throw FormatError(path.string() + " is not a dataset manifest");
  }
  DatasetManifest m;
  try {
    m.master_seed = j.at("master_seed").get<uint64_t>();
    m.n = j.at("n").get<int>();
    m.test_n = j.at("test_n").get<int>();
    m.geometry.canvas = j.at("canvas").get<int>();
    m.geometry.min_size = j.at("patch_min").get<int>();
    m.geometry.max_size = j.at("patch_max").get<int>();
    m.tool_version = j.value("tool_version", "");
    for (const auto& s : j.at("samples")) {
      ManifestEntry e;
      e.index = s.at("index").get<int>();
      e.image_path = s.at("image").get<std::string>();
      e.mask_path = s.at("mask").get<std::string>();
      const auto& r = s.at("rect");
      e.rect = {r.at("x").get<int>(), r.at("y").get<int>(), r.at("w").get<int>(),
                r.at("h").get<int>()};
      e.natural_x = s.at("natural_origin").at("x").get<int>();
      e.natural_y = s.at("natural_origin").at("y").get<int>();
      e.synthetic_source = s.value("synthetic_source", "");
      e.natural_source = s.value("natural_source", "");
      e.synthetic_prep = s.value("synthetic_prep", "");
      e.natural_prep = s.value("natural_prep", "");
      e.split = s.at("split").get<std::string>() == "test" ? Split::kTest : Split::kTrain;
      e.seed_offset = s.at("seed_offset").get<uint64_t>();
      m.samples.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  m.root = path.parent_path();
  return m;
}

std::vector<std::filesystem::path> ListPoolImages(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw UserError("pool directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::filesystem::path> usable;
  for (const auto& f : files) {
    try {
      image::Load(f);
      usable.push_back(f);
    } catch (const Error& e) {
      spdlog::warn("skipping undecodable pool image {}: {}", f.string(), e.what());
    }
  }
  return usable;
}

DatasetManifest BuildDataset(const BuildOptions& options) {
  if (options.n <= 0) throw UserError("n must be positive");
  if (options.test_n < 0 || options.test_n > options.n) {
    throw UserError("test count must be in [0, n]");
  }
  const auto synthetic = ListPoolImages(options.synthetic_pool);
  const auto natural = ListPoolImages(options.natural_pool);
  if (synthetic.empty() || natural.empty()) throw UserError("image pools must be non-empty");
  const PatchGeometry& geo = options.geometry;
  if (geo.canvas < geo.max_size) throw UserError("canvas smaller than the largest patch");

  DatasetManifest m;
  m.master_seed = options.master_seed;
  m.n = options.n;
  m.test_n = options.test_n;
  m.geometry = geo;
  m.tool_version = SCIC_VERSION;
  m.root = options.out_dir;
  m.samples.resize(options.n);
  std::filesystem::create_directories(options.out_dir / "images");
  std::filesystem::create_directories(options.out_dir / "masks");

  internal::ParallelFor(options.n, options.threads, [&](int i) {
    Rng rng = Rng::Derive(options.master_seed, static_cast<uint64_t>(i));
    const auto& spath = synthetic[rng.UniformInt(0, static_cast<int64_t>(synthetic.size()) - 1)];
    const auto& npath = natural[rng.UniformInt(0, static_cast<int64_t>(natural.size()) - 1)];
    auto sprep = image::PrepareSource(image::Load(spath), geo.canvas);
    auto nprep = image::PrepareSource(image::Load(npath), geo.canvas);
    const Rect rect = SamplePatchRect(rng, geo.canvas, geo.canvas, geo);
    CompositeSample s = Composite(image::QuantizeTo8Bit(sprep.image),
                                  image::QuantizeTo8Bit(nprep.image), rect, rng);
    ManifestEntry& e = m.samples[i];
    e.index = i;
    e.image_path = "images/" + SampleName(i);
    e.mask_path = "masks/" + SampleName(i);
    e.rect = rect;
    e.natural_x = s.natural_x;
    e.natural_y = s.natural_y;
    e.synthetic_source = spath.filename().string();
    e.natural_source = npath.filename().string();
    e.synthetic_prep = sprep.method;
    e.natural_prep = nprep.method;
    e.seed_offset = static_cast<uint64_t>(i);
    image::SavePng(options.out_dir / e.image_path, s.image);
    image::SavePng(options.out_dir / e.mask_path, s.mask);
  });

  // Uniformly random test subset.
  std::vector<int> order(options.n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = Rng::Derive(options.master_seed, 0x5B117ull);
  for (int i = options.n - 1; i > 0; --i) {
    std::swap(order[i], order[split_rng.UniformInt(0, i)]);
  }
  for (int i = 0; i < options.test_n; ++i) m.samples[order[i]].split = Split::kTest;
  m.Save(options.out_dir / "manifest.json");
  return m;
}

CompositeSample LoadSample(const DatasetManifest& manifest, const ManifestEntry& entry) {
  CompositeSample s;
  s.image = image::Load(manifest.Resolve(entry.image_path));
  s.mask = image::Load(manifest.Resolve(entry.mask_path), /*force_rgb=*/false);
  if (s.mask.dim(0) != 1) s.mask = s.mask.Channels(0, 1);
  for (double& v : s.mask.storage()) v = v >= 0.5 ? 1.0 : 0.0;
  s.rect = entry.rect;
  s.natural_x = entry.natural_x;
  s.natural_y = entry.natural_y;
  s.synthetic_source_id = entry.synthetic_source;
  s.natural_source_id = entry.natural_source;
  s.seed_offset = entry.seed_offset;
  return s;
}

}  // namespace scic::dataset
