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

// scic command line: dataset generation, training, coding, evaluation and
// experiment orchestration.

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scic/bitstream.h"
#include "scic/checkpoint.h"
#include "scic/dataset.h"
#include "scic/error.h"
#include "scic/evaluation.h"
#include "scic/experiment.h"
#include "scic/image_io.h"
#include "scic/metrics.h"
#include "scic/procedural.h"
#include "scic/training.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string workspace;
  std::optional<uint64_t> seed;
  bool verbose = false;
};

Globals g;

fs::path In(const std::string& p) {
  if (p.empty() || g.workspace.empty() || fs::path(p).is_absolute()) return p;
  return fs::path(g.workspace) / p;
}

fs::path Out(const std::string& p) {
  fs::path out = In(p);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  return out;
}

uint64_t SeedOr(uint64_t local, bool local_set) {
  if (local_set) return local;
  return g.seed.value_or(local);
}

std::vector<uint8_t> ReadBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw scic::UserError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteBytes(const fs::path& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw scic::UserError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw scic::UserError("cannot write " + path.string());
  out << text;
}

scic::Tensor LoadMask(const fs::path& path) {
  scic::Tensor m = scic::image::Load(path, false);
  if (m.dim(0) != 1) throw scic::UserError(path.string() + ": mask must be single-channel");
  for (double& v : m.values()) v = v >= 0.5 ? 1.0 : 0.0;
  return m;
}

std::vector<scic::training::GridPair> ParsePairs(const std::string& text) {
  if (text.empty() || text == "default") return scic::training::DefaultGrid();
  std::vector<scic::training::GridPair> pairs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    try {
      scic::training::GridPair p;
      p.lambda = std::stod(item.substr(0, colon));
      if (colon != std::string::npos) p.phi = std::stod(item.substr(colon + 1));
      pairs.push_back(p);
    } catch (const std::exception&) {
      throw scic::UserError("bad grid point '" + item + "' (expected lambda[:phi])");
    }
  }
  return pairs;
}

// --- dataset -------------------------------------------------------------

struct DatasetArgs {
  std::string synthetic, natural, out;
  int n = 3100, test = 100, canvas = 512, min_patch = 128, max_patch = 192, threads = 0;
  uint64_t seed = 0;
  int pool_count = 32, pool_size = 512;
};

void AddDataset(CLI::App& app, DatasetArgs& a) {
  auto* ds = app.add_subcommand("dataset", "Composite corpus generation");
  ds->require_subcommand(1);
  auto* build = ds->add_subcommand("build", "Build a composite corpus and manifest");
  build->add_option("--synthetic", a.synthetic, "Synthetic source pool")->required();
  build->add_option("--natural", a.natural, "Natural source pool")->required();
  build->add_option("--n", a.n, "Total number of samples");
  build->add_option("--test", a.test, "Samples held out for testing");
  auto* seed = build->add_option("--seed", a.seed, "Master seed");
  build->add_option("--out", a.out, "Output directory")->required();
  build->add_option("--canvas", a.canvas, "Canvas side in pixels");
  build->add_option("--min-patch", a.min_patch, "Smallest natural patch side");
  build->add_option("--max-patch", a.max_patch, "Largest natural patch side");
  build->add_option("--threads", a.threads, "Worker threads (0 = all cores)");
  build->callback([&a, seed] {
    scic::dataset::BuildOptions o;
    o.synthetic_pool = In(a.synthetic);
    o.natural_pool = In(a.natural);
    o.n = a.n;
    o.test_n = a.test;
    o.master_seed = SeedOr(a.seed, seed->count() > 0);
    o.out_dir = In(a.out);
    o.geometry = {a.canvas, a.min_patch, a.max_patch};
    o.threads = a.threads;
    const auto m = scic::dataset::BuildDataset(o);
    std::cout << "wrote " << m.samples.size() << " samples to " << o.out_dir.string() << "\n";
  });
  auto* pools = ds->add_subcommand("pools", "Write procedural stand-in source pools");
  pools->add_option("--out", a.out, "Output directory")->required();
  pools->add_option("--count", a.pool_count, "Images per pool");
  pools->add_option("--size", a.pool_size, "Image side in pixels");
  auto* pseed = pools->add_option("--seed", a.seed, "Seed");
  pools->callback([&a, pseed] {
    scic::procedural::WritePools(In(a.out), a.pool_count, a.pool_size,
                                 SeedOr(a.seed, pseed->count() > 0));
  });
}

// --- train / grid ----------------------------------------------------------

struct TrainArgs {
  std::string config, out, pairs;
  int max_steps = 0;
};

scic::training::TrainConfig LoadConfig(const std::string& path) {
  scic::training::TrainConfig c = scic::training::LoadTrainConfig(In(path));
  if (g.seed) c.seed = *g.seed;
  if (!c.data.empty()) c.data = In(c.data).string();
  return c;
}

void AddTrain(CLI::App& app, TrainArgs& a) {
  auto* train = app.add_subcommand("train", "Train one codec");
  train->add_option("--config", a.config, "Training config (JSON)")->required();
  train->add_option("--out", a.out, "Output directory for checkpoints and log")->required();
  train->add_option("--max-steps", a.max_steps, "Stop after this many steps");
  train->callback([&a] {
    const auto config = LoadConfig(a.config);
    scic::training::TrainOptions o;
    o.out_dir = In(a.out);
    o.max_steps = a.max_steps;
    const auto r = scic::training::Train(config, o);
    std::cout << "best epoch " << r.best_epoch << ": " << r.best_checkpoint.string() << "\n";
  });
  auto* grid = app.add_subcommand("grid", "Train a lambda/phi grid");
  grid->add_option("--config", a.config, "Base training config (JSON)")->required();
  grid->add_option("--out", a.out, "Output directory")->required();
  grid->add_option("--pairs", a.pairs,
                   "Grid points as lambda[:phi],... (default: the five-point default grid)");
  grid->callback([&a] {
    const auto ckpts =
        scic::training::RunGrid(LoadConfig(a.config), ParsePairs(a.pairs), In(a.out));
    for (const auto& p : ckpts) std::cout << p.string() << "\n";
  });
}

// --- encode / decode ---------------------------------------------------------

struct CodecArgs {
  std::string checkpoint, in, out, seg;
};

void AddCodec(CLI::App& app, CodecArgs& a) {
  auto* enc = app.add_subcommand("encode", "Compress an image");
  enc->add_option("--checkpoint", a.checkpoint, "Model checkpoint")->required();
  enc->add_option("--in", a.in, "Input image (PNG, JPEG, PPM)")->required();
  enc->add_option("--out", a.out, "Output bitstream")->required();
  enc->callback([&a] {
    const auto model = scic::checkpoint::Load(In(a.checkpoint));
    const auto image = scic::image::Load(In(a.in));
    const auto r = scic::codec::EncodeImage(model, image);
    WriteBytes(Out(a.out), r.bytes);
    const double bpp = 8.0 * r.bytes.size() / (double(image.dim(1)) * image.dim(2));
    std::printf("%zu bytes, %.4f bpp\n", r.bytes.size(), bpp);
  });
  auto* dec = app.add_subcommand("decode", "Decompress a bitstream");
  dec->add_option("--checkpoint", a.checkpoint, "Model checkpoint")->required();
  dec->add_option("--in", a.in, "Input bitstream")->required();
  dec->add_option("--out", a.out, "Reconstructed PNG")->required();
  dec->add_option("--seg", a.seg, "Segmentation map PNG (2-decoder models)");
  dec->callback([&a] {
    const auto model = scic::checkpoint::Load(In(a.checkpoint));
    const auto bytes = ReadBytes(In(a.in));
    const auto r = scic::codec::DecodeImage(model, bytes, !a.seg.empty());
    scic::image::SavePng(Out(a.out), r.x_hat);
    if (r.s_hat) scic::image::SavePng(Out(a.seg), *r.s_hat);
  });
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string ref, test, mask, metrics = "psnr,gmsd";
};

void AddEval(CLI::App& app, EvalArgs& a) {
  auto* ev = app.add_subcommand("eval", "Score a reconstruction against its reference");
  ev->add_option("--ref", a.ref, "Reference image")->required();
  ev->add_option("--test", a.test, "Test image")->required();
  ev->add_option("--mask", a.mask, "Region mask (white = natural)");
  ev->add_option("--metrics", a.metrics, "Comma-separated subset of psnr,gmsd");
  ev->callback([&a] {
    const auto ref = scic::image::Load(In(a.ref));
    const auto test = scic::image::Load(In(a.test));
    if (!ref.SameShape(test)) {
      throw scic::ShapeError("image sizes differ: " + ref.ShapeString() + " vs " +
                             test.ShapeString());
    }
    bool psnr = false, gmsd = false;
    std::stringstream ss(a.metrics);
    std::string m;
    while (std::getline(ss, m, ',')) {
      if (m == "psnr")
        psnr = true;
      else if (m == "gmsd")
        gmsd = true;
      else
        throw scic::UserError("unknown metric '" + m + "'");
    }
    json rec = {{"ref", a.ref}, {"test", a.test}};
    if (psnr) rec["psnr"] = scic::metrics::Psnr(ref, test);
    if (gmsd) rec["gmsd"] = scic::metrics::Gmsd(ref, test);
    if (!a.mask.empty()) {
      const auto natural = LoadMask(In(a.mask));
      scic::Tensor synthetic = natural;
      for (double& v : synthetic.values()) v = 1.0 - v;
      for (const auto& [name, mask] : {std::pair{"natural", &natural}, {"synthetic", &synthetic}}) {
        json r;
        if (psnr) r["psnr"] = scic::metrics::MaskedPsnr(ref, test, *mask);
        if (gmsd) r["gmsd"] = scic::metrics::MaskedGmsd(ref, test, *mask);
        rec[name] = r;
      }
    }
    std::cout << rec.dump() << "\n";
  });
}

// --- sweep / bdrate / plot / report ------------------------------------------

struct EvalSuiteArgs {
  std::vector<std::string> checkpoints, tests, curves;
  std::string data, out, label, rate_source = "coded", anchor, quality = "psnr", title;
  int max_images = 0, threads = 0;
  bool as_json = false;
};

std::vector<scic::eval::RDCurve> LoadCurves(const std::vector<std::string>& paths) {
  std::vector<scic::eval::RDCurve> out;
  for (const auto& p : paths) out.push_back(scic::eval::LoadCurve(In(p)));
  return out;
}

void AddEvalSuite(CLI::App& app, EvalSuiteArgs& a) {
  auto* sweep = app.add_subcommand("sweep", "Rate-distortion sweep over checkpoints");
  sweep->add_option("--checkpoints", a.checkpoints, "Checkpoints, one per rate point")->required();
  sweep->add_option("--data", a.data, "Dataset manifest")->required();
  sweep->add_option("--out", a.out, "Output directory")->required();
  sweep->add_option("--label", a.label, "Curve label (default: codec name)");
  sweep->add_option("--rate-source", a.rate_source, "coded or estimate");
  sweep->add_option("--max-images", a.max_images, "Limit the number of test images");
  sweep->add_option("--threads", a.threads, "Worker threads (0 = all cores)");
  sweep->callback([&a] {
    std::vector<fs::path> ckpts;
    for (const auto& c : a.checkpoints) ckpts.push_back(In(c));
    scic::eval::SweepOptions o;
    o.label = a.label;
    o.rate_source = scic::eval::ParseRateSource(a.rate_source);
    o.max_images = a.max_images;
    o.threads = a.threads;
    o.out_dir = In(a.out);
    const auto s = scic::eval::RdSweep(ckpts, scic::dataset::DatasetManifest::Load(In(a.data)), o);
    for (const auto& p : s.curve.points) {
      std::printf("%-40s %.5f bpp  %.3f dB  gmsd %.5f\n", p.config.c_str(), p.bpp, p.psnr, p.gmsd);
    }
  });

  auto* bd = app.add_subcommand("bdrate", "Bjontegaard delta rate against an anchor");
  bd->add_option("--anchor", a.anchor, "Anchor curve (JSON or CSV)")->required();
  bd->add_option("--test", a.tests, "Test curves")->required();
  bd->add_option("--quality", a.quality, "psnr or gmsd");
  bd->add_flag("--json", a.as_json, "Emit JSON");
  bd->callback([&a] {
    const auto anchor = scic::eval::LoadCurve(In(a.anchor));
    const auto q = scic::eval::ParseQuality(a.quality);
    json out = json::array();
    for (const auto& t : LoadCurves(a.tests)) {
      const auto r = scic::eval::BdRate(anchor, t, q);
      if (a.as_json) {
        out.push_back({{"anchor", anchor.label},
                       {"test", t.label},
                       {"quality", a.quality},
                       {"bd_rate_percent", r.percent},
                       {"q_low", r.q_low},
                       {"q_high", r.q_high}});
      } else {
        std::printf("%s vs %s (%s): %+.2f%%\n", t.label.c_str(), anchor.label.c_str(),
                    a.quality.c_str(), r.percent);
      }
    }
    if (a.as_json) std::cout << out.dump(1) << "\n";
  });

  auto* plot = app.add_subcommand("plot", "Render rate-quality curves as SVG");
  plot->add_option("--curves", a.curves, "Curves (JSON or CSV)")->required();
  plot->add_option("--out", a.out, "Output SVG")->required();
  plot->add_option("--quality", a.quality, "psnr or gmsd");
  plot->add_option("--title", a.title, "Plot title");
  plot->callback([&a] {
    WriteText(Out(a.out), scic::eval::PlotSvg(LoadCurves(a.curves),
                                              scic::eval::ParseQuality(a.quality), a.title));
  });

  auto* report = app.add_subcommand("report", "BD-rate and region tables from sweeps");
  report->add_option("--anchor", a.anchor, "Anchor sweep")->required();
  report->add_option("--test", a.tests, "Test sweeps")->required();
  report->add_option("--out", a.out, "Output directory");
  report->callback([&a] {
    const auto anchor = scic::eval::LoadSweep(In(a.anchor));
    std::vector<scic::eval::SweepResult> tests;
    std::vector<scic::eval::RDCurve> curves;
    for (const auto& t : a.tests) {
      tests.push_back(scic::eval::LoadSweep(In(t)));
      curves.push_back(tests.back().curve);
    }
    std::vector<scic::eval::Table> tables = {scic::eval::BdRateTable(anchor.curve, curves)};
    if (!anchor.natural.points.empty()) tables.push_back(scic::eval::RegionTable(anchor, tests));
    const std::string text = scic::eval::RenderText(tables);
    std::cout << text;
    if (!a.out.empty()) {
      fs::create_directories(In(a.out));
      WriteText(In(a.out) / "report.txt", text);
      WriteText(In(a.out) / "report.json", scic::eval::RenderJson(tables));
      std::vector<scic::eval::RDCurve> all = {anchor.curve};
      all.insert(all.end(), curves.begin(), curves.end());
      WriteText(In(a.out) / "rd_psnr.svg",
                scic::eval::PlotSvg(all, scic::eval::Quality::kPsnr, "Rate-PSNR"));
    }
  });
}

// --- inspect / run -----------------------------------------------------------

struct MiscArgs {
  std::string file;
};

void AddMisc(CLI::App& app, MiscArgs& a) {
  auto* inspect =
      app.add_subcommand("inspect", "Summarize a checkpoint, bitstream, manifest or curve");
  inspect->add_option("file", a.file, "File to inspect")->required();
  inspect->callback([&a] { std::cout << scic::experiment::Inspect(In(a.file)); });

  auto* run = app.add_subcommand("run", "Run an experiment spec");
  run->add_option("spec", a.file, "Experiment spec (JSON)")->required();
  run->callback([&a] {
    const auto spec = scic::experiment::LoadSpec(a.file);
    scic::experiment::RunOptions o;
    o.workspace = g.workspace;
    o.override_seed = g.seed.has_value();
    o.seed = g.seed.value_or(0);
    for (const auto& s : scic::experiment::RunExperiment(spec, o)) {
      std::cout << s.name << ": " << (s.executed ? "ran" : "up to date") << " ("
                << s.input_hash.substr(0, 12) << ")\n";
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scic: learned screen-content image compression"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", SCIC_VERSION);
  uint64_t seed = 0;
  app.add_option("--workspace", g.workspace, "Base directory for relative paths");
  auto* seed_opt = app.add_option("--seed", seed, "Global seed override");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  DatasetArgs dataset_args;
  TrainArgs train_args;
  CodecArgs codec_args;
  EvalArgs eval_args;
  EvalSuiteArgs suite_args;
  MiscArgs misc_args;
  AddDataset(app, dataset_args);
  AddTrain(app, train_args);
  AddCodec(app, codec_args);
  AddEval(app, eval_args);
  AddEvalSuite(app, suite_args);
  AddMisc(app, misc_args);

  app.parse_complete_callback([&] {
    if (seed_opt->count() > 0) g.seed = seed;
    spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const scic::UserError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 2;
  }
  return 0;
}
