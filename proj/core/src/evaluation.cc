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

#include "scic/evaluation.h"

#include <spdlog/spdlog.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <sstream>

#include "parallel.h"
#include "scic/bitstream.h"
#include "scic/checkpoint.h"
#include "scic/error.h"
#include "scic/metrics.h"

namespace scic::eval {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

json NumberOrNull(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double NumberOrNaN(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UserError("cannot write " + path.string());
  out << text;
}

std::vector<double> QualityAxis(const RDCurve& c, Quality q) {
  std::vector<double> out;
  for (const RDPoint& p : c.points) {
    const double v = q == Quality::kPsnr ? p.psnr : -p.gmsd;
    if (!std::isfinite(v)) {
      throw UserError("curve '" + c.label + "' has no " + QualityName(q) + " values");
    }
    out.push_back(v);
  }
  return out;
}

RDCurve Prepared(const RDCurve& c, Quality q) {
  RDCurve out = c;
  out.Normalize();
  if (out.points.size() < 4) {
    throw UserError("curve '" + c.label + "' has " + std::to_string(out.points.size()) +
                    " points; BD-rate needs at least 4");
  }
  const auto axis = QualityAxis(out, q);
  for (size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1])) {
      throw UserError("curve '" + c.label + "': " + QualityName(q) +
                      " is not strictly monotone in rate between " +
                      Fmt("%.6g", out.points[i - 1].bpp) + " and " +
                      Fmt("%.6g", out.points[i].bpp) + " bpp");
    }
  }
  return out;
}

json RecordJson(const ImageRecord& r) {
  json j = {{"image_id", r.image_id},
            {"width", r.width},
            {"height", r.height},
            {"bytes", r.bytes},
            {"payload_bytes", r.payload_bytes},
            {"bpp", r.bpp},
            {"bpp_estimate", r.bpp_estimate},
            {"psnr", r.psnr},
            {"gmsd", r.gmsd}};
  if (r.has_regions) {
    j["regions"] = {{"natural_pixels", r.natural_pixels}, {"synthetic_pixels", r.synthetic_pixels},
                    {"natural_bits", r.natural_bits},     {"synthetic_bits", r.synthetic_bits},
                    {"natural_psnr", r.natural_psnr},     {"synthetic_psnr", r.synthetic_psnr}};
  }
  return j;
}

ImageRecord RecordFrom(const json& j) {
  ImageRecord r;
  r.image_id = j.at("image_id").get<std::string>();
  r.width = j.at("width").get<int>();
  r.height = j.at("height").get<int>();
  r.bytes = j.at("bytes").get<size_t>();
  r.payload_bytes = j.at("payload_bytes").get<size_t>();
  r.bpp = j.at("bpp").get<double>();
  r.bpp_estimate = j.at("bpp_estimate").get<double>();
  r.psnr = j.at("psnr").get<double>();
  r.gmsd = j.at("gmsd").get<double>();
  if (j.contains("regions")) {
    const json& g = j.at("regions");
    r.has_regions = true;
    r.natural_pixels = g.at("natural_pixels").get<int64_t>();
    r.synthetic_pixels = g.at("synthetic_pixels").get<int64_t>();
    r.natural_bits = g.at("natural_bits").get<double>();
    r.synthetic_bits = g.at("synthetic_bits").get<double>();
    r.natural_psnr = g.at("natural_psnr").get<double>();
    r.synthetic_psnr = g.at("synthetic_psnr").get<double>();
  }
  return r;
}

struct TrainEcho {
  std::string name;
  std::string base;
  double lambda = kNaN;
};

TrainEcho EchoOf(const checkpoint::Header& h) {
  TrainEcho e;
  const json j = json::parse(h.train_config_json);
  if (j.is_object()) {
    e.name = j.value("name", "");
    const std::string suffix = j.value("suffix", "");
    e.base = e.name;
    if (!suffix.empty() && e.base.size() >= suffix.size() &&
        e.base.compare(e.base.size() - suffix.size(), suffix.size(), suffix) == 0) {
      e.base.resize(e.base.size() - suffix.size());
    }
    if (j.contains("lambda")) e.lambda = j.at("lambda").get<double>();
  }
  return e;
}

std::string XmlEscape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::string QualityName(Quality q) { return q == Quality::kPsnr ? "psnr" : "gmsd"; }

Quality ParseQuality(const std::string& s) {
  if (s == "psnr") return Quality::kPsnr;
  if (s == "gmsd") return Quality::kGmsd;
  throw UserError("unknown quality '" + s + "' (psnr, gmsd)");
}

std::string RateSourceName(RateSource r) {
  switch (r) {
    case RateSource::kCoded:
      return "coded";
    case RateSource::kEstimate:
      return "estimate";
    case RateSource::kExternal:
      return "external";
  }
  return "?";
}

RateSource ParseRateSource(const std::string& s) {
  if (s == "coded") return RateSource::kCoded;
  if (s == "estimate") return RateSource::kEstimate;
  if (s == "external") return RateSource::kExternal;
  throw UserError("unknown rate source '" + s + "'");
}

bool RDCurve::has_gmsd() const {
  return !points.empty() && std::all_of(points.begin(), points.end(),
                                        [](const RDPoint& p) { return std::isfinite(p.gmsd); });
}

void RDCurve::Normalize() {
  std::stable_sort(points.begin(), points.end(),
                   [](const RDPoint& a, const RDPoint& b) { return a.bpp < b.bpp; });
  for (size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].bpp > 0.0) || !std::isfinite(points[i].bpp)) {
      throw UserError("curve '" + label + "' has a non-positive rate");
    }
    if (i > 0 && !(points[i].bpp > points[i - 1].bpp)) {
      throw UserError("curve '" + label + "' repeats the rate " + Fmt("%.6g", points[i].bpp));
    }
  }
}

std::string CurveToJson(const RDCurve& c) {
  json pts = json::array();
  for (const RDPoint& p : c.points) {
    pts.push_back(
        {{"config", p.config}, {"bpp", p.bpp}, {"psnr", p.psnr}, {"gmsd", NumberOrNull(p.gmsd)}});
  }
  return json{{"format", "scic-rd-curve"},
              {"label", c.label},
              {"rate_source", RateSourceName(c.rate_source)},
              {"points", pts}}
      .dump(1);
}

RDCurve CurveFromJson(const std::string& text) {
  try {
    const json j = json::parse(text);
    RDCurve c;
    c.label = j.at("label").get<std::string>();
    c.rate_source = ParseRateSource(j.at("rate_source").get<std::string>());
    for (const json& p : j.at("points")) {
      c.points.push_back({p.value("config", ""), p.at("bpp").get<double>(),
                          p.at("psnr").get<double>(), NumberOrNaN(p.at("gmsd"))});
    }
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed curve: ") + e.what());
  }
}

void SaveCurve(const std::filesystem::path& path, const RDCurve& curve) {
  WriteText(path, CurveToJson(curve) + "\n");
}

RDCurve LoadCurve(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return IngestExternal(path, path.stem().string());
  return CurveFromJson(ReadText(path));
}

double CubicFit::Eval(double q) const {
  const double t = (q - center) / scale;
  return coef[0] + t * (coef[1] + t * (coef[2] + t * coef[3]));
}

double CubicFit::Integral(double q) const {
  const double t = (q - center) / scale;
  return scale * t * (coef[0] + t * (coef[1] / 2 + t * (coef[2] / 3 + t * coef[3] / 4)));
}

CubicFit FitCubic(const std::vector<double>& quality, const std::vector<double>& log_rate) {
  const size_t n = quality.size();
  if (n < 4 || log_rate.size() != n) throw UserError("cubic fit needs at least 4 points");
  CubicFit fit;
  const auto [lo, hi] = std::minmax_element(quality.begin(), quality.end());
  fit.center = 0.5 * (*lo + *hi);
  fit.scale = *hi > *lo ? 0.5 * (*hi - *lo) : 1.0;
  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd b(n);
  for (size_t i = 0; i < n; ++i) {
    const double t = (quality[i] - fit.center) / fit.scale;
    a(i, 0) = 1.0;
    a(i, 1) = t;
    a(i, 2) = t * t;
    a(i, 3) = t * t * t;
    b(i) = log_rate[i];
  }
  const Eigen::Vector4d c = a.colPivHouseholderQr().solve(b);
  for (int k = 0; k < 4; ++k) fit.coef[k] = c(k);
  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double r = fit.Eval(quality[i]) - log_rate[i];
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

BdResult BdRate(const RDCurve& anchor_in, const RDCurve& test_in, Quality quality) {
  const RDCurve anchor = Prepared(anchor_in, quality);
  const RDCurve test = Prepared(test_in, quality);
  const auto qa = QualityAxis(anchor, quality);
  const auto qt = QualityAxis(test, quality);
  std::vector<double> ra, rt;
  for (const RDPoint& p : anchor.points) ra.push_back(std::log10(p.bpp));
  for (const RDPoint& p : test.points) rt.push_back(std::log10(p.bpp));

  BdResult res;
  res.anchor_fit = FitCubic(qa, ra);
  res.test_fit = FitCubic(qt, rt);
  res.q_low = std::max(qa.front(), qt.front());
  res.q_high = std::min(qa.back(), qt.back());
  if (!(res.q_high > res.q_low)) {
    throw UserError("curves '" + anchor.label + "' and '" + test.label + "' share no " +
                    QualityName(quality) + " range");
  }
  const double ia = res.anchor_fit.Integral(res.q_high) - res.anchor_fit.Integral(res.q_low);
  const double it = res.test_fit.Integral(res.q_high) - res.test_fit.Integral(res.q_low);
  const double delta = (it - ia) / (res.q_high - res.q_low);
  res.percent = (std::pow(10.0, delta) - 1.0) * 100.0;
  return res;
}

SweepResult Aggregate(std::vector<SweepPoint> points, const std::string& label,
                      RateSource rate_source) {
  SweepResult out;
  out.curve.label = label;
  out.curve.rate_source = rate_source;
  out.natural.label = label + " [natural]";
  out.synthetic.label = label + " [synthetic]";
  out.natural.rate_source = out.synthetic.rate_source = RateSource::kEstimate;
  bool regions = !points.empty();
  for (const SweepPoint& sp : points) {
    if (sp.records.empty()) throw UserError("sweep point " + sp.config + " has no images");
    double bpp = 0, psnr = 0, gmsd = 0, nb = 0, np = 0, sb = 0, spsnr = 0;
    for (const ImageRecord& r : sp.records) {
      bpp += rate_source == RateSource::kEstimate ? r.bpp_estimate : r.bpp;
      psnr += r.psnr;
      gmsd += r.gmsd;
      if (!r.has_regions) {
        regions = false;
        continue;
      }
      nb += r.natural_bits / static_cast<double>(r.natural_pixels);
      np += r.natural_psnr;
      sb += r.synthetic_bits / static_cast<double>(r.synthetic_pixels);
      spsnr += r.synthetic_psnr;
    }
    const double n = static_cast<double>(sp.records.size());
    out.curve.points.push_back({sp.config, bpp / n, psnr / n, gmsd / n});
    out.natural.points.push_back({sp.config, nb / n, np / n, kNaN});
    out.synthetic.points.push_back({sp.config, sb / n, spsnr / n, kNaN});
  }
  if (!regions) {
    out.natural.points.clear();
    out.synthetic.points.clear();
  }
  // Larger lambda should buy rate; a violation is reported, not fatal.
  std::vector<const SweepPoint*> by_lambda;
  for (const SweepPoint& sp : points) by_lambda.push_back(&sp);
  std::stable_sort(by_lambda.begin(), by_lambda.end(),
                   [](const SweepPoint* a, const SweepPoint* b) { return a->lambda < b->lambda; });
  for (size_t i = 1; i < by_lambda.size(); ++i) {
    auto mean_bpp = [&](const SweepPoint* p) {
      for (const RDPoint& q : out.curve.points) {
        if (q.config == p->config) return q.bpp;
      }
      return kNaN;
    };
    if (mean_bpp(by_lambda[i]) <= mean_bpp(by_lambda[i - 1])) {
      spdlog::warn("{}: {} has no higher rate than {}", label, by_lambda[i]->config,
                   by_lambda[i - 1]->config);
    }
  }
  out.points = std::move(points);
  for (RDCurve* c : {&out.curve, &out.natural, &out.synthetic}) {
    std::stable_sort(c->points.begin(), c->points.end(),
                     [](const RDPoint& a, const RDPoint& b) { return a.bpp < b.bpp; });
  }
  return out;
}

SweepResult RdSweep(const std::vector<std::filesystem::path>& checkpoints,
                    const dataset::DatasetManifest& manifest, const SweepOptions& options) {
  if (checkpoints.empty()) throw UserError("sweep needs at least one checkpoint");
  std::vector<const dataset::ManifestEntry*> entries = manifest.Select(options.split);
  if (options.max_images > 0 && static_cast<int>(entries.size()) > options.max_images) {
    entries.resize(options.max_images);
  }
  if (entries.empty()) throw UserError("manifest split has no images");
  std::vector<dataset::CompositeSample> samples(entries.size());
  internal::ParallelFor(static_cast<int>(entries.size()), options.threads,
                        [&](int i) { samples[i] = dataset::LoadSample(manifest, *entries[i]); });

  std::string label = options.label;
  std::vector<SweepPoint> points;
  for (const auto& path : checkpoints) {
    checkpoint::Header header;
    const codec::Model model = checkpoint::Load(path, &header);
    const TrainEcho echo = EchoOf(header);
    if (label.empty()) label = echo.base.empty() ? path.stem().string() : echo.base;
    SweepPoint sp;
    sp.checkpoint = path.string();
    sp.config = echo.name.empty() ? path.string() : echo.name;
    sp.lambda = echo.lambda;
    sp.records.resize(samples.size());
    const entropy::CoderBackend& coder = entropy::ActiveCoder();
    internal::ParallelFor(static_cast<int>(samples.size()), options.threads, [&](int i) {
      const dataset::CompositeSample& s = samples[i];
      ImageRecord& r = sp.records[i];
      r.image_id = entries[i]->image_path;
      r.height = s.image.dim(1);
      r.width = s.image.dim(2);
      const double pixels = static_cast<double>(r.width) * r.height;
      const codec::EncodeResult enc = codec::EncodeImage(model, s.image, coder);
      const codec::DecodeResult dec = codec::DecodeImage(model, enc.bytes, false, coder);
      if (dec.y_hat.storage() != enc.code.y_hat.storage()) {
        throw InvariantViolation("decoded latents differ from the encoder's for " + r.image_id);
      }
      r.bytes = enc.bytes.size();
      r.payload_bytes = enc.payload_bytes();
      r.bpp = 8.0 * static_cast<double>(r.bytes) / pixels;
      r.psnr = metrics::Psnr(s.image, dec.x_hat);
      r.gmsd = metrics::Gmsd(s.image, dec.x_hat);
      const codec::RateEstimate est = model.EstimateRate(enc.code);
      const metrics::RegionBits rb =
          metrics::RegionRate(est.y_bits, est.z_total, s.mask, model.config().DownsampleFactor());
      r.bpp_estimate = rb.total / pixels;
      for (double m : s.mask.storage()) (m >= 0.5 ? r.natural_pixels : r.synthetic_pixels) += 1;
      if (r.natural_pixels > 0 && r.synthetic_pixels > 0) {
        r.has_regions = true;
        r.natural_bits = rb.natural;
        r.synthetic_bits = rb.synthetic;
        Tensor inverse = s.mask;
        for (double& m : inverse.storage()) m = m >= 0.5 ? 0.0 : 1.0;
        r.natural_psnr = metrics::MaskedPsnr(s.image, dec.x_hat, s.mask);
        r.synthetic_psnr = metrics::MaskedPsnr(s.image, dec.x_hat, inverse);
      }
    });
    points.push_back(std::move(sp));
  }
  SweepResult result = Aggregate(std::move(points), label, options.rate_source);
  if (!options.out_dir.empty()) {
    std::string stem = label;
    std::erase(stem, '/');
    SaveSweep(options.out_dir / (stem + ".sweep.json"), result);
    SaveCurve(options.out_dir / (stem + ".curve.json"), result.curve);
  }
  return result;
}

void SaveSweep(const std::filesystem::path& path, const SweepResult& sweep) {
  json pts = json::array();
  for (const SweepPoint& sp : sweep.points) {
    json recs = json::array();
    for (const ImageRecord& r : sp.records) recs.push_back(RecordJson(r));
    pts.push_back({{"checkpoint", sp.checkpoint},
                   {"config", sp.config},
                   {"lambda", NumberOrNull(sp.lambda)},
                   {"records", recs}});
  }
  const json j = {{"format", "scic-sweep"},
                  {"label", sweep.curve.label},
                  {"rate_source", RateSourceName(sweep.curve.rate_source)},
                  {"points", pts},
                  {"curve", json::parse(CurveToJson(sweep.curve))}};
  WriteText(path, j.dump(1) + "\n");
}

SweepResult LoadSweep(const std::filesystem::path& path) {
  try {
    const json j = json::parse(ReadText(path));
    if (j.value("format", "") != "scic-sweep") throw FormatError(path.string() + ": not a sweep");
    std::vector<SweepPoint> points;
    for (const json& p : j.at("points")) {
      SweepPoint sp;
      sp.checkpoint = p.at("checkpoint").get<std::string>();
      sp.config = p.at("config").get<std::string>();
      sp.lambda = NumberOrNaN(p.at("lambda"));
      for (const json& r : p.at("records")) sp.records.push_back(RecordFrom(r));
      points.push_back(std::move(sp));
    }
    return Aggregate(std::move(points), j.at("label").get<std::string>(),
                     ParseRateSource(j.at("rate_source").get<std::string>()));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed sweep: " + e.what());
  }
}

RegionBd RegionBdRate(const SweepResult& anchor, const SweepResult& test) {
  if (anchor.natural.points.empty() || test.natural.points.empty()) {
    throw UserError("region BD-rate needs sweeps with masks");
  }
  return {BdRate(anchor.natural, test.natural, Quality::kPsnr),
          BdRate(anchor.synthetic, test.synthetic, Quality::kPsnr)};
}

RDCurve IngestExternal(const std::filesystem::path& path, const std::string& label,
                       std::optional<Quality> required) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open " + path.string());
  auto fail = [&](int line, const std::string& what) -> void {
    throw FormatError(path.string() + ":" + std::to_string(line) + ": " + what);
  };
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  std::string line;
  int lineno = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    header = split(line);
  }
  if (header.empty()) fail(lineno, "missing header");
  std::map<std::string, size_t> col;
  for (size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* name : {"point", "image_id", "width", "height", "bytes", "psnr"}) {
    if (!col.contains(name)) fail(lineno, std::string("missing column '") + name + "'");
  }
  const bool has_gmsd = col.contains("gmsd");
  if (required == Quality::kGmsd && !has_gmsd) {
    fail(lineno, "missing column 'gmsd' required for GMSD evaluation");
  }
  struct Acc {
    double bpp = 0, psnr = 0, gmsd = 0;
    int n = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, Acc> acc;
  auto number = [&](const std::vector<std::string>& cells, const char* name, int ln) {
    const std::string& cell = cells[col[name]];
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != cell.size() || !std::isfinite(v)) {
      fail(ln, std::string("column '") + name + "' is not a number: '" + cell + "'");
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      fail(lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(cells.size()));
    }
    const std::string& point = cells[col["point"]];
    if (point.empty()) fail(lineno, "empty 'point'");
    const double w = number(cells, "width", lineno), h = number(cells, "height", lineno);
    const double bytes = number(cells, "bytes", lineno);
    if (w <= 0 || h <= 0 || bytes <= 0) fail(lineno, "width, height and bytes must be positive");
    if (!acc.contains(point)) order.push_back(point);
    Acc& a = acc[point];
    a.bpp += bytes * 8.0 / (w * h);
    a.psnr += number(cells, "psnr", lineno);
    if (has_gmsd) a.gmsd += number(cells, "gmsd", lineno);
    ++a.n;
  }
  if (order.empty()) fail(lineno, "no records");
  RDCurve c;
  c.label = label;
  c.rate_source = RateSource::kExternal;
  for (const std::string& p : order) {
    const Acc& a = acc[p];
    c.points.push_back({p, a.bpp / a.n, a.psnr / a.n, has_gmsd ? a.gmsd / a.n : kNaN});
  }
  c.Normalize();
  return c;
}

std::string PlotSvg(const std::vector<RDCurve>& curves, Quality quality, const std::string& title) {
  if (curves.empty()) throw UserError("nothing to plot");
  constexpr double kW = 640, kH = 480, kL = 72, kR = 16, kT = 40, kB = 56;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const RDCurve& c : curves) {
    for (const RDPoint& p : c.points) {
      const double q = quality == Quality::kPsnr ? p.psnr : p.gmsd;
      if (!std::isfinite(q)) continue;
      x0 = std::min(x0, p.bpp);
      x1 = std::max(x1, p.bpp);
      y0 = std::min(y0, q);
      y1 = std::max(y1, q);
    }
  }
  if (!std::isfinite(x0)) throw UserError("curves hold no " + QualityName(quality) + " values");
  auto pad = [](double& lo, double& hi) {
    const double span = hi > lo ? hi - lo : std::max(std::abs(lo), 1.0) * 0.1;
    lo -= 0.05 * span;
    hi += 0.05 * span;
  };
  pad(x0, x1);
  pad(y0, y1);
  auto sx = [&](double v) { return kL + (v - x0) / (x1 - x0) * (kW - kL - kR); };
  auto sy = [&](double v) { return kH - kB - (v - y0) / (y1 - y0) * (kH - kT - kB); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
       "viewBox=\"0 0 640 480\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  if (!title.empty()) {
    o << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << XmlEscape(title)
      << "</text>\n";
  }
  o << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << kW - kL - kR << "\" height=\""
    << kH - kT - kB << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    o << "<line x1=\"" << Fmt("%.2f", sx(xv)) << "\" y1=\"" << kH - kB << "\" x2=\""
      << Fmt("%.2f", sx(xv)) << "\" y2=\"" << kH - kB + 5 << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << Fmt("%.2f", sx(xv)) << "\" y=\"" << kH - kB + 18
      << "\" text-anchor=\"middle\">" << Fmt("%.3g", xv) << "</text>\n";
    o << "<line x1=\"" << kL - 5 << "\" y1=\"" << Fmt("%.2f", sy(yv)) << "\" x2=\"" << kL
      << "\" y2=\"" << Fmt("%.2f", sy(yv)) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << kL - 8 << "\" y=\"" << Fmt("%.2f", sy(yv) + 4) << "\" text-anchor=\"end\">"
      << Fmt("%.4g", yv) << "</text>\n";
  }
  o << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 12
    << "\" text-anchor=\"middle\">bits per pixel</text>\n";
  o << "<text x=\"16\" y=\"" << (kT + kH - kB) / 2 << "\" text-anchor=\"middle\" "
    << "transform=\"rotate(-90 16 " << (kT + kH - kB) / 2 << ")\">"
    << (quality == Quality::kPsnr ? "PSNR (dB)" : "GMSD") << "</text>\n";
  for (size_t k = 0; k < curves.size(); ++k) {
    const char* color = kColors[k % 8];
    std::string pts;
    for (const RDPoint& p : curves[k].points) {
      const double q = quality == Quality::kPsnr ? p.psnr : p.gmsd;
      if (!std::isfinite(q)) continue;
      pts += (pts.empty() ? "" : " ") + Fmt("%.2f", sx(p.bpp)) + "," + Fmt("%.2f", sy(q));
    }
    o << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\"/>\n";
    for (const RDPoint& p : curves[k].points) {
      const double q = quality == Quality::kPsnr ? p.psnr : p.gmsd;
      if (!std::isfinite(q)) continue;
      o << "<circle cx=\"" << Fmt("%.2f", sx(p.bpp)) << "\" cy=\"" << Fmt("%.2f", sy(q))
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kT + 16 + 16 * static_cast<double>(k);
    o << "<line x1=\"" << kL + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << kL + 30 << "\" y2=\""
      << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << kL + 36 << "\" y=\"" << ly << "\">" << XmlEscape(curves[k].label)
      << (curves[k].external() ? " (external)" : "") << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string RenderText(const std::vector<Table>& tables) {
  std::ostringstream o;
  for (size_t t = 0; t < tables.size(); ++t) {
    const Table& tab = tables[t];
    if (t > 0) o << '\n';
    o << tab.title << '\n';
    std::vector<size_t> width(tab.columns.size());
    for (size_t c = 0; c < tab.columns.size(); ++c) width[c] = tab.columns[c].size();
    for (const auto& row : tab.rows) {
      for (size_t c = 0; c < row.size() && c < width.size(); ++c) {
        width[c] = std::max(width[c], row[c].size());
      }
    }
    auto emit = [&](const std::vector<std::string>& cells) {
      std::string line;
      for (size_t c = 0; c < width.size(); ++c) {
        const std::string& v = c < cells.size() ? cells[c] : "";
        if (c == 0) {
          line += v + std::string(width[c] - v.size(), ' ');
        } else {
          line += "  " + std::string(width[c] - v.size(), ' ') + v;
        }
      }
      o << line << '\n';
    };
    emit(tab.columns);
    size_t total = 0;
    for (size_t w : width) total += w + 2;
    o << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
    for (const auto& row : tab.rows) emit(row);
    for (const auto& n : tab.notes) o << "note: " << n << '\n';
  }
  return o.str();
}

std::string RenderJson(const std::vector<Table>& tables) {
  json out = json::array();
  for (const Table& t : tables) {
    out.push_back(
        {{"title", t.title}, {"columns", t.columns}, {"rows", t.rows}, {"notes", t.notes}});
  }
  return out.dump(1) + "\n";
}

namespace {

// Formats a BD-rate cell; curves that cannot be compared give "n/a" and a
// note with the reason.
std::optional<BdResult> TryBd(const RDCurve& anchor, const RDCurve& test, Quality q, Table& t) {
  try {
    return BdRate(anchor, test, q);
  } catch (const UserError& e) {
    t.notes.push_back(test.label + " (" + QualityName(q) + "): " + e.what());
    return std::nullopt;
  }
}

}  // namespace

Table BdRateTable(const RDCurve& anchor, const std::vector<RDCurve>& tests) {
  Table t;
  t.title = "BD-rate (%) relative to " + anchor.label;
  t.columns = {"codec", "PSNR", "GMSD", "fit rms (PSNR)", "fit rms (GMSD)"};
  for (const RDCurve& c : tests) {
    std::vector<std::string> row = {c.label};
    std::string rms_p = "n/a", rms_g = "n/a";
    if (const auto p = TryBd(anchor, c, Quality::kPsnr, t)) {
      row.push_back(Fmt("%.2f", p->percent));
      rms_p = Fmt("%.2e", std::max(p->anchor_fit.residual_rms, p->test_fit.residual_rms));
    } else {
      row.push_back("n/a");
    }
    const auto g =
        anchor.has_gmsd() && c.has_gmsd() ? TryBd(anchor, c, Quality::kGmsd, t) : std::nullopt;
    if (g) {
      row.push_back(Fmt("%.2f", g->percent));
      rms_g = Fmt("%.2e", std::max(g->anchor_fit.residual_rms, g->test_fit.residual_rms));
    } else {
      row.push_back("n/a");
    }
    row.push_back(rms_p);
    row.push_back(rms_g);
    t.rows.push_back(std::move(row));
  }
  t.notes.push_back("classic Bjontegaard: least-squares cubic of log10(bpp) in quality");
  t.notes.push_back("GMSD axis negated before fitting (lower GMSD is better)");
  t.notes.push_back("anchor rate source: " + RateSourceName(anchor.rate_source));
  return t;
}

Table RegionTable(const SweepResult& anchor, const std::vector<SweepResult>& tests) {
  Table t;
  t.title = "Region BD-rate (%, PSNR) relative to " + anchor.curve.label;
  t.columns = {"codec", "natural", "synthetic"};
  for (const SweepResult& s : tests) {
    const auto n = TryBd(anchor.natural, s.natural, Quality::kPsnr, t);
    const auto y = TryBd(anchor.synthetic, s.synthetic, Quality::kPsnr, t);
    t.rows.push_back(
        {s.curve.label, n ? Fmt("%.2f", n->percent) : "n/a", y ? Fmt("%.2f", y->percent) : "n/a"});
  }
  t.notes.push_back("each latent cell is attributed to the mask value at its footprint centre");
  t.notes.push_back("hyper-latent bits split in proportion to the attributed latent bits");
  t.notes.push_back("region rates use the rate model (per-element bits)");
  return t;
}

}  // namespace scic::eval
