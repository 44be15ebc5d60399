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

#ifndef SCIC_DATASET_H_
#define SCIC_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scic/rng.h"
#include "scic/tensor.h"

namespace scic::dataset {

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  bool Contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

// Canvas and natural-patch size range. The defaults are the full-scale
// corpus; desk-scale corpora shrink all three proportionally.
struct PatchGeometry {
  int canvas = 512;
  int min_size = 128;
  int max_size = 192;
};

// Mask polarity: 1 marks the natural insert, 0 the synthetic background.
struct CompositeSample {
  Tensor image;  // {3, canvas, canvas} in [0,1]
  Tensor mask;   // {1, canvas, canvas} in {0,1}
  Rect rect;
  int natural_x = 0;  // patch origin inside the natural source
  int natural_y = 0;
  std::string synthetic_source_id;
  std::string natural_source_id;
  uint64_t seed_offset = 0;
};

// Width and height uniform on [min_size, max_size], position uniform over
// every placement that stays inside the canvas.
Rect SamplePatchRect(Rng& rng, int canvas_w, int canvas_h, const PatchGeometry& geometry);

// Cuts a rect-sized patch at a uniformly random origin of `natural` and
// pastes it over `synthetic` at `rect`.
CompositeSample Composite(const Tensor& synthetic, const Tensor& natural, const Rect& rect,
                          Rng& rng);

Tensor RectMask(int width, int height, const Rect& rect);

enum class Split { kTrain, kTest };
std::string SplitName(Split s);

struct ManifestEntry {
  int index = 0;
  std::string image_path;  // relative to the manifest directory
  std::string mask_path;
  Rect rect;
  int natural_x = 0;
  int natural_y = 0;
  std::string synthetic_source;
  std::string natural_source;
  std::string synthetic_prep;
  std::string natural_prep;
  Split split = Split::kTrain;
  uint64_t seed_offset = 0;
};

struct DatasetManifest {
  uint64_t master_seed = 0;
  int n = 0;
  int test_n = 0;
  PatchGeometry geometry;
  std::string tool_version;
  std::vector<ManifestEntry> samples;
  std::filesystem::path root;  // directory the relative paths resolve against

  std::vector<const ManifestEntry*> Select(Split split) const;
  std::filesystem::path Resolve(const std::string& relative) const { return root / relative; }

  void Save(const std::filesystem::path& path) const;
  static DatasetManifest Load(const std::filesystem::path& path);
  // Serialized text; identical manifests give identical strings.
  std::string ToJson() const;
};

struct BuildOptions {
  std::filesystem::path synthetic_pool;
  std::filesystem::path natural_pool;
  int n = 3100;
  int test_n = 100;
  uint64_t master_seed = 0;
  std::filesystem::path out_dir;
  PatchGeometry geometry;
  int threads = 0;  // 0 = hardware concurrency
};

// Lists decodable images in a directory (sorted by file name); undecodable
// files are skipped with a warning.
std::vector<std::filesystem::path> ListPoolImages(const std::filesystem::path& dir);

// Generates the corpus: sample i draws everything from a stream derived
// from (master_seed, i), so the output is independent of scheduling.
DatasetManifest BuildDataset(const BuildOptions& options);

// Loads image and mask of one manifest entry.
CompositeSample LoadSample(const DatasetManifest& manifest, const ManifestEntry& entry);

}  // namespace scic::dataset

#endif  // SCIC_DATASET_H_
