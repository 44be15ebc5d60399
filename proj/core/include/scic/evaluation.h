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

#ifndef SCIC_EVALUATION_H_
#define SCIC_EVALUATION_H_

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scic/dataset.h"

namespace scic::eval {

enum class Quality { kPsnr, kGmsd };
std::string QualityName(Quality q);
Quality ParseQuality(const std::string& s);

// Where the bpp of a point comes from.
enum class RateSource { kCoded, kEstimate, kExternal };
std::string RateSourceName(RateSource r);
RateSource ParseRateSource(const std::string& s);

struct RDPoint {
  std::string config;
  double bpp = 0.0;
  double psnr = 0.0;
  double gmsd = 0.0;  // NaN when unavailable
};

struct RDCurve {
  std::string label;
  RateSource rate_source = RateSource::kCoded;
  std::vector<RDPoint> points;  // sorted by bpp

  bool external() const { return rate_source == RateSource::kExternal; }
  bool has_gmsd() const;
  // Sorts by bpp and rejects non-positive or repeated rates.
  void Normalize();
};

std::string CurveToJson(const RDCurve& curve);
RDCurve CurveFromJson(const std::string& json);
void SaveCurve(const std::filesystem::path& path, const RDCurve& curve);
// Reads a curve file, or an external results file when the extension is .csv.
RDCurve LoadCurve(const std::filesystem::path& path);

// Least-squares cubic fit of log10(bpp) against quality.
struct CubicFit {
  // Coefficients in t = (q - center) / scale.
  std::array<double, 4> coef{};
  double center = 0.0;
  double scale = 1.0;
  double residual_rms = 0.0;
  double Eval(double q) const;
  // Antiderivative evaluated at q.
  double Integral(double q) const;
};
CubicFit FitCubic(const std::vector<double>& quality, const std::vector<double>& log_rate);

struct BdResult {
  double percent = 0.0;
  double q_low = 0.0;
  double q_high = 0.0;
  CubicFit anchor_fit;
  CubicFit test_fit;
};

// Classic Bjontegaard rate difference of `test` relative to `anchor`. The
// GMSD axis is negated so that quality increases with rate.
BdResult BdRate(const RDCurve& anchor, const RDCurve& test, Quality quality);

// Per-image evaluation record; every curve point is the mean of these.
struct ImageRecord {
  std::string image_id;
  int width = 0;
  int height = 0;
  size_t bytes = 0;           // whole bitstream
  size_t payload_bytes = 0;   // entropy-coded payloads only
  double bpp = 0.0;           // coded bytes * 8 / pixels
  double bpp_estimate = 0.0;  // rate model
  double psnr = 0.0;
  double gmsd = 0.0;
  bool has_regions = false;
  int64_t natural_pixels = 0;
  int64_t synthetic_pixels = 0;
  double natural_bits = 0.0;  // rate-model bits attributed to each region
  double synthetic_bits = 0.0;
  double natural_psnr = 0.0;
  double synthetic_psnr = 0.0;
};

struct SweepPoint {
  std::string checkpoint;
  std::string config;
  double lambda = 0.0;
  std::vector<ImageRecord> records;
};

struct SweepResult {
  RDCurve curve;
  RDCurve natural;  // region curves; empty without masks
  RDCurve synthetic;
  std::vector<SweepPoint> points;
};

struct SweepOptions {
  std::string label;  // defaults to the checkpoint codec name
  RateSource rate_source = RateSource::kCoded;
  dataset::Split split = dataset::Split::kTest;
  int max_images = 0;  // 0 = all
  int threads = 0;
  // Records and curves are persisted here when non-empty.
  std::filesystem::path out_dir;
};

// Encodes, decodes and scores every image of the split with each checkpoint.
SweepResult RdSweep(const std::vector<std::filesystem::path>& checkpoints,
                    const dataset::DatasetManifest& manifest, const SweepOptions& options = {});

void SaveSweep(const std::filesystem::path& path, const SweepResult& sweep);
SweepResult LoadSweep(const std::filesystem::path& path);

// Rebuilds the curves of a sweep from its per-image records.
SweepResult Aggregate(std::vector<SweepPoint> points, const std::string& label,
                      RateSource rate_source);

struct RegionBd {
  BdResult natural;
  BdResult synthetic;
};
// PSNR BD-rate per region from the region curves of two sweeps.
RegionBd RegionBdRate(const SweepResult& anchor, const SweepResult& test);

// External codec results: CSV with header
// point,image_id,width,height,bytes,psnr[,gmsd]; one curve point per
// distinct `point`, in order of first appearance.
RDCurve IngestExternal(const std::filesystem::path& path, const std::string& label,
                       std::optional<Quality> required = std::nullopt);

// Deterministic SVG rate-quality plot.
std::string PlotSvg(const std::vector<RDCurve>& curves, Quality quality,
                    const std::string& title = "");

struct Table {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> notes;
};

std::string RenderText(const std::vector<Table>& tables);
std::string RenderJson(const std::vector<Table>& tables);

// BD-rate table of several codecs against one anchor, with fit residuals.
Table BdRateTable(const RDCurve& anchor, const std::vector<RDCurve>& tests);
// Natural/synthetic PSNR BD-rate table against one anchor sweep.
Table RegionTable(const SweepResult& anchor, const std::vector<SweepResult>& tests);

}  // namespace scic::eval

#endif  // SCIC_EVALUATION_H_
