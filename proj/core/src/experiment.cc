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

#include "scic/experiment.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "scic/bitstream.h"
#include "scic/checkpoint.h"
#include "scic/dataset.h"
#include "scic/error.h"
#include "scic/evaluation.h"
#include "scic/hash.h"
#include "scic/procedural.h"
#include "scic/training.h"

namespace scic::experiment {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::set<std::string> kKinds = {"pools", "dataset", "grid", "sweep", "bdrate", "report"};

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteText(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UserError("cannot write " + path.string());
  out << text;
}

std::string Rel(const fs::path& p, const fs::path& base) {
  return fs::relative(p, base).generic_string();
}

// SHA-256 of every regular file below `dir`, keyed by relative path.
std::map<std::string, std::string> HashTree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[Rel(e.path(), dir)] = Sha256File(e.path());
  }
  return out;
}

std::string DigestOf(const std::map<std::string, std::string>& files) {
  std::string text;
  for (const auto& [k, v] : files) text += k + " " + v + "\n";
  return Sha256Hex(text);
}

class Runner {
 public:
  Runner(const ExperimentSpec& spec, fs::path ws, uint64_t seed)
      : spec_(spec), ws_(std::move(ws)), seed_(seed) {}

  std::vector<StageOutcome> Run() {
    fs::create_directories(ws_);
    ws_ = fs::canonical(ws_);
    if (fs::exists(LedgerPath())) ledger_ = json::parse(ReadText(LedgerPath()));
    if (!ledger_.is_object() || !ledger_.contains("stages")) ledger_ = {{"stages", json::object()}};
    std::vector<StageOutcome> outcomes;
    for (const Stage* stage : spec_.Order()) outcomes.push_back(RunStage(*stage));
    return outcomes;
  }

 private:
  fs::path LedgerPath() const { return ws_ / "ledger.json"; }

  void SaveLedger() { WriteText(LedgerPath(), ledger_.dump(1) + "\n"); }

  void Provenance(const json& event) {
    std::ofstream out(ws_ / "provenance.jsonl", std::ios::app);
    out << event.dump() << '\n';
  }

  json& Entry(const std::string& name) { return ledger_["stages"][name]; }

  // Re-hashes the recorded outputs of a completed dependency.
  std::string VerifyDependency(const std::string& dep) {
    const json& e = ledger_["stages"].value(dep, json());
    if (!e.is_object() || e.value("status", "") != "complete") {
      throw UserError("stage '" + dep + "' has not completed");
    }
    for (const auto& [rel, recorded] : e.at("outputs").items()) {
      const fs::path p = ws_ / dep / rel;
      const std::string actual = fs::exists(p) ? Sha256File(p) : std::string("<missing>");
      if (actual != recorded.get<std::string>()) {
        throw HashMismatchError("output " + dep + "/" + rel + " of stage '" + dep +
                                "' changed since it was recorded (expected " +
                                recorded.get<std::string>().substr(0, 12) + ", found " +
                                actual.substr(0, 12) + "); delete " + (ws_ / dep).string() +
                                " to regenerate it");
      }
    }
    return e.at("output_digest").get<std::string>();
  }

  bool OutputsPresent(const std::string& name) {
    const json& e = Entry(name);
    for (const auto& [rel, _] : e.at("outputs").items()) {
      if (!fs::exists(ws_ / name / rel)) return false;
    }
    return true;
  }

  StageOutcome RunStage(const Stage& stage) {
    StageOutcome out;
    out.name = stage.name;
    json inputs;
    try {
      json deps = json::object();
      for (const std::string& d : stage.after) deps[d] = VerifyDependency(d);
      inputs = {{"kind", stage.kind},
                {"config", json::parse(stage.config_json)},
                {"seed", seed_},
                {"dependencies", deps},
                {"external", ExternalInputs(stage)},
                {"tool_version", SCIC_VERSION}};
    } catch (const Error& e) {
      Fail(stage, "", e.what());
      throw;
    }
    out.input_hash = Sha256Hex(inputs.dump());
    const json& prev = Entry(stage.name);
    if (prev.is_object() && prev.value("status", "") == "complete" &&
        prev.value("input_hash", "") == out.input_hash && OutputsPresent(stage.name)) {
      spdlog::info("stage {} is up to date", stage.name);
      Provenance({{"event", "skip"}, {"stage", stage.name}, {"input_hash", out.input_hash}});
      return out;
    }
    spdlog::info("running stage {} ({})", stage.name, stage.kind);
    const fs::path dir = ws_ / stage.name;
    json result;
    try {
      fs::remove_all(dir);
      fs::create_directories(dir);
      result = Execute(stage, dir);
      WriteText(dir / "result.json", result.dump(1) + "\n");
    } catch (const Error& e) {
      Fail(stage, out.input_hash, e.what());
      throw;
    } catch (const std::exception& e) {
      Fail(stage, out.input_hash, e.what());
      throw;
    }
    const auto files = HashTree(dir);
    json outputs = json::object();
    for (const auto& [k, v] : files) outputs[k] = v;
    Entry(stage.name) = {{"status", "complete"},         {"kind", stage.kind},
                         {"input_hash", out.input_hash}, {"output_digest", DigestOf(files)},
                         {"outputs", outputs},           {"result", result}};
    SaveLedger();
    Provenance({{"event", "run"},
                {"stage", stage.name},
                {"input_hash", out.input_hash},
                {"output_digest", DigestOf(files)}});
    out.executed = true;
    return out;
  }

  void Fail(const Stage& stage, const std::string& input_hash, const std::string& error) {
    Entry(stage.name) = {
        {"status", "failed"}, {"kind", stage.kind}, {"input_hash", input_hash}, {"error", error}};
    SaveLedger();
    Provenance({{"event", "fail"}, {"stage", stage.name}, {"error", error}});
  }

  // Content digest of user-supplied directories a stage reads.
  json ExternalInputs(const Stage& stage) {
    const json c = json::parse(stage.config_json);
    json ext = json::object();
    for (const char* key : {"synthetic", "natural", "data"}) {
      if (c.contains(key) && c.at(key).is_string()) {
        const std::string v = c.at(key).get<std::string>();
        if (IsStage(v)) continue;
        const fs::path p = v;
        ext[key] = fs::is_directory(p) ? DigestOf(HashTree(p))
                   : fs::exists(p)     ? Sha256File(p)
                                       : std::string("<missing>");
      }
    }
    return ext;
  }

  bool IsStage(const std::string& name) const {
    return std::any_of(spec_.stages.begin(), spec_.stages.end(),
                       [&](const Stage& s) { return s.name == name; });
  }

  const json& ResultOf(const Stage& stage, const std::string& dep) {
    if (std::find(stage.after.begin(), stage.after.end(), dep) == stage.after.end()) {
      throw UserError("stage '" + stage.name + "' reads '" + dep + "' without listing it in after");
    }
    return ledger_["stages"].at(dep).at("result");
  }

  fs::path Abs(const std::string& rel) const { return ws_ / rel; }

  json Execute(const Stage& stage, const fs::path& dir) {
    const json c = json::parse(stage.config_json);
    if (stage.kind == "pools") {
      procedural::WritePools(dir, c.value("count", 32), c.value("size", 128), seed_);
      return {{"synthetic", Rel(dir / "synthetic", ws_)}, {"natural", Rel(dir / "natural", ws_)}};
    }
    if (stage.kind == "dataset") {
      dataset::BuildOptions o;
      if (c.contains("pools")) {
        const json& r = ResultOf(stage, c.at("pools").get<std::string>());
        o.synthetic_pool = Abs(r.at("synthetic").get<std::string>());
        o.natural_pool = Abs(r.at("natural").get<std::string>());
      } else {
        o.synthetic_pool = c.at("synthetic").get<std::string>();
        o.natural_pool = c.at("natural").get<std::string>();
      }
      o.n = c.value("n", 3100);
      o.test_n = c.value("test", 100);
      o.geometry.canvas = c.value("canvas", 512);
      o.geometry.min_size = c.value("min_patch", 128);
      o.geometry.max_size = c.value("max_patch", 192);
      o.master_seed = seed_;
      o.out_dir = dir;
      dataset::BuildDataset(o);
      return {{"manifest", Rel(dir / "manifest.json", ws_)}};
    }
    if (stage.kind == "grid") return RunGridStage(stage, c, dir);
    if (stage.kind == "sweep") return RunSweepStage(stage, c, dir);
    if (stage.kind == "bdrate" || stage.kind == "report") return RunReportStage(stage, c, dir);
    throw UserError("unknown stage kind " + stage.kind);
  }

  json RunGridStage(const Stage& stage, json c, const fs::path& dir) {
    std::vector<training::GridPair> pairs;
    for (const json& p : c.at("pairs")) {
      pairs.push_back({p.at(0).get<double>(), p.size() > 1 ? p.at(1).get<double>() : 0.0});
    }
    c.erase("pairs");
    const std::string data = c.value("data", "");
    std::string data_rel;
    if (IsStage(data)) {
      const json& r = ResultOf(stage, data);
      if (r.contains("manifest")) {
        data_rel = r.at("manifest").get<std::string>();
      } else {
        const std::string corpus = c.value("corpus", "s/n-composite");
        data_rel = r.at(corpus == "natural" ? "natural" : "synthetic").get<std::string>();
      }
      c["data"] = data_rel;
    }
    if (!c.contains("seed")) c["seed"] = seed_;
    training::TrainConfig base = training::TrainConfigFromJson(c.dump());
    training::TrainConfig loader = base;
    if (!data_rel.empty()) loader.data = Abs(data_rel).string();
    const auto configs = training::ExpandGrid(base, pairs);
    const auto corpus = training::LoadCorpus(loader);
    json ckpts = json::array(), names = json::array();
    for (const training::TrainConfig& tc : configs) {
      spdlog::info("training {}", tc.Name());
      training::TrainOptions opts;
      opts.out_dir = dir / tc.FileStem();
      const auto res = training::Train(tc, corpus, opts);
      ckpts.push_back(Rel(res.best_checkpoint, ws_));
      names.push_back(tc.Name());
    }
    return {{"checkpoints", ckpts}, {"names", names}, {"label", base.Name()}};
  }

  json RunSweepStage(const Stage& stage, const json& c, const fs::path& dir) {
    const json& grid = ResultOf(stage, c.at("checkpoints").get<std::string>());
    const json& data = ResultOf(stage, c.at("data").get<std::string>());
    std::vector<fs::path> ckpts;
    for (const json& p : grid.at("checkpoints")) ckpts.push_back(Abs(p.get<std::string>()));
    const auto manifest =
        dataset::DatasetManifest::Load(Abs(data.at("manifest").get<std::string>()));
    eval::SweepOptions o;
    o.label = c.value("label", grid.value("label", ""));
    o.rate_source = eval::ParseRateSource(c.value("rate_source", "coded"));
    o.max_images = c.value("max_images", 0);
    eval::SweepResult s = eval::RdSweep(ckpts, manifest, o);
    for (auto& p : s.points) p.checkpoint = Rel(p.checkpoint, ws_);
    eval::SaveSweep(dir / "sweep.json", s);
    eval::SaveCurve(dir / "curve.json", s.curve);
    return {{"sweep", Rel(dir / "sweep.json", ws_)},
            {"curve", Rel(dir / "curve.json", ws_)},
            {"label", s.curve.label}};
  }

  eval::SweepResult SweepOf(const Stage& stage, const std::string& name) {
    return eval::LoadSweep(Abs(ResultOf(stage, name).at("sweep").get<std::string>()));
  }

  json RunReportStage(const Stage& stage, const json& c, const fs::path& dir) {
    const eval::SweepResult anchor = SweepOf(stage, c.at("anchor").get<std::string>());
    std::vector<eval::SweepResult> tests;
    for (const json& t : c.at("tests")) tests.push_back(SweepOf(stage, t.get<std::string>()));
    std::vector<eval::RDCurve> curves;
    for (const auto& t : tests) curves.push_back(t.curve);
    for (const json& e : c.value("external", json::array())) {
      curves.push_back(
          eval::IngestExternal(e.get<std::string>(), fs::path(e.get<std::string>()).stem()));
    }
    std::vector<eval::Table> tables = {eval::BdRateTable(anchor.curve, curves)};
    auto bd = [](const eval::RDCurve& a, const eval::RDCurve& t, eval::Quality q) -> json {
      try {
        return eval::BdRate(a, t, q).percent;
      } catch (const UserError&) {
        return nullptr;
      }
    };
    json values = json::object();
    for (const auto& cv : curves) {
      values[cv.label]["psnr"] = bd(anchor.curve, cv, eval::Quality::kPsnr);
      if (anchor.curve.has_gmsd() && cv.has_gmsd()) {
        values[cv.label]["gmsd"] = bd(anchor.curve, cv, eval::Quality::kGmsd);
      }
    }
    if (c.value("regions", true) && !anchor.natural.points.empty()) {
      tables.push_back(eval::RegionTable(anchor, tests));
      for (const auto& t : tests) {
        if (t.natural.points.empty()) continue;
        values[t.curve.label]["natural"] = bd(anchor.natural, t.natural, eval::Quality::kPsnr);
        values[t.curve.label]["synthetic"] =
            bd(anchor.synthetic, t.synthetic, eval::Quality::kPsnr);
      }
    }
    const std::string base = stage.kind == "report" ? "report" : "bdrate";
    WriteText(dir / (base + ".txt"), eval::RenderText(tables));
    WriteText(dir / (base + ".json"), eval::RenderJson(tables));
    if (stage.kind == "report") {
      std::vector<eval::RDCurve> all = {anchor.curve};
      all.insert(all.end(), curves.begin(), curves.end());
      WriteText(dir / "rd_psnr.svg", eval::PlotSvg(all, eval::Quality::kPsnr, "Rate-PSNR"));
      bool gmsd = std::all_of(all.begin(), all.end(), [](const auto& cv) { return cv.has_gmsd(); });
      if (gmsd)
        WriteText(dir / "rd_gmsd.svg", eval::PlotSvg(all, eval::Quality::kGmsd, "Rate-GMSD"));
    }
    return {{"tables", Rel(dir / (base + ".json"), ws_)}, {"bd_rate", values}};
  }

  const ExperimentSpec& spec_;
  fs::path ws_;
  uint64_t seed_;
  json ledger_;
};

std::string Line(const std::string& k, const std::string& v) { return k + ": " + v + "\n"; }

}  // namespace

void ExperimentSpec::Validate() const {
  static const std::regex kName("[A-Za-z0-9][A-Za-z0-9_.-]*");
  std::set<std::string> names;
  for (const Stage& s : stages) {
    if (!std::regex_match(s.name, kName)) throw UserError("invalid stage name '" + s.name + "'");
    if (!names.insert(s.name).second) throw UserError("duplicate stage name '" + s.name + "'");
    if (!kKinds.contains(s.kind))
      throw UserError("stage '" + s.name + "' has unknown kind " + s.kind);
    try {
      if (!json::parse(s.config_json).is_object()) throw UserError("config must be an object");
    } catch (const json::exception& e) {
      throw FormatError("stage '" + s.name + "': malformed config: " + e.what());
    }
  }
  if (stages.empty()) throw UserError("experiment has no stages");
  for (const Stage& s : stages) {
    for (const std::string& d : s.after) {
      if (!names.contains(d))
        throw UserError("stage '" + s.name + "' depends on unknown '" + d + "'");
    }
  }
  Order();
}

std::vector<const Stage*> ExperimentSpec::Order() const {
  std::vector<const Stage*> order;
  std::set<std::string> done;
  while (order.size() < stages.size()) {
    bool progressed = false;
    for (const Stage& s : stages) {
      if (done.contains(s.name)) continue;
      if (std::all_of(s.after.begin(), s.after.end(),
                      [&](const std::string& d) { return done.contains(d); })) {
        order.push_back(&s);
        done.insert(s.name);
        progressed = true;
        break;
      }
    }
    if (!progressed) throw UserError("experiment stages contain a dependency cycle");
  }
  return order;
}

ExperimentSpec ParseSpec(const std::string& text) {
  ExperimentSpec spec;
  try {
    const json j = json::parse(text);
    spec.workspace = j.value("workspace", "");
    spec.seed = j.value("seed", uint64_t{0});
    for (const json& s : j.at("stages")) {
      Stage st;
      st.name = s.at("name").get<std::string>();
      st.kind = s.at("kind").get<std::string>();
      st.after = s.value("after", std::vector<std::string>{});
      st.config_json = s.value("config", json::object()).dump();
      spec.stages.push_back(std::move(st));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed experiment spec: ") + e.what());
  }
  spec.Validate();
  return spec;
}

ExperimentSpec LoadSpec(const fs::path& path) {
  ExperimentSpec spec = ParseSpec(ReadText(path));
  if (!spec.workspace.empty() && spec.workspace.is_relative()) {
    spec.workspace = path.parent_path() / spec.workspace;
  }
  return spec;
}

std::vector<StageOutcome> RunExperiment(const ExperimentSpec& spec, const RunOptions& options) {
  spec.Validate();
  const fs::path ws = options.workspace.empty() ? spec.workspace : options.workspace;
  if (ws.empty()) throw UserError("no workspace given");
  Runner runner(spec, ws, options.override_seed ? options.seed : spec.seed);
  return runner.Run();
}

std::string Inspect(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  std::ostringstream o;
  if (in.gcount() == 4 && std::memcmp(magic, "SCKP", 4) == 0) {
    const checkpoint::Header h = checkpoint::ReadHeader(path);
    const json tc = json::parse(h.train_config_json);
    const json md = json::parse(h.metadata_json);
    size_t elements = 0;
    for (const auto& t : h.tensors) elements += NumElements(t.shape);
    o << Line("type", "checkpoint") << Line("format version", std::to_string(h.version))
      << Line("model", checkpoint::ModelConfigToJson(h.model))
      << Line("tensors",
              std::to_string(h.tensors.size()) + " (" + std::to_string(elements) + " values)");
    if (tc.is_object()) {
      o << Line("name", tc.value("name", "")) << Line("lambda", tc.at("lambda").dump())
        << Line("phi", tc.at("phi").dump()) << Line("epochs", tc.at("epochs").dump())
        << Line("train config", tc.dump());
    }
    if (!md.is_null()) o << Line("metadata", md.dump());
    return o.str();
  }
  if (in.gcount() == 4 && std::memcmp(magic, "SCIC", 4) == 0) {
    const std::string text = ReadText(path);
    const std::vector<uint8_t> bytes(text.begin(), text.end());
    const codec::BitstreamHeader h = codec::ParseHeader(bytes);
    o << Line("type", "bitstream") << Line("version", std::to_string(h.version))
      << Line("backbone", codec::BackboneTag(h.backbone))
      << Line("size", std::to_string(h.width) + "x" + std::to_string(h.height))
      << Line("padded", std::to_string(h.padded_width) + "x" + std::to_string(h.padded_height))
      << Line("stages", std::to_string(h.stages))
      << Line("latent channels", std::to_string(h.latent_channels))
      << Line("hyper channels", std::to_string(h.hyper_channels))
      << Line("slices", std::to_string(h.slices)) << Line("z bytes", std::to_string(h.z_bytes));
    std::string ys;
    for (uint32_t b : h.y_bytes) ys += (ys.empty() ? "" : ",") + std::to_string(b);
    o << Line("y bytes", ys) << Line("total bytes", std::to_string(bytes.size()));
    const double px = static_cast<double>(h.width) * h.height;
    o << Line("bpp", std::to_string(8.0 * static_cast<double>(bytes.size()) / px));
    return o.str();
  }
  json j;
  try {
    j = json::parse(ReadText(path));
  } catch (const json::exception&) {
    throw FormatError(path.string() + ": unknown file type (no recognised magic)");
  }
  const std::string format = j.is_object() ? j.value("format", "") : "";
  if (format == "scic-manifest") {
    const dataset::DatasetManifest m = dataset::DatasetManifest::Load(path);
    o << Line("type", "dataset manifest") << Line("master seed", std::to_string(m.master_seed))
      << Line("samples", std::to_string(m.samples.size()))
      << Line("train", std::to_string(m.Select(dataset::Split::kTrain).size()))
      << Line("test", std::to_string(m.Select(dataset::Split::kTest).size()))
      << Line("canvas", std::to_string(m.geometry.canvas))
      << Line("patch size",
              std::to_string(m.geometry.min_size) + ".." + std::to_string(m.geometry.max_size))
      << Line("tool version", m.tool_version);
    return o.str();
  }
  if (format == "scic-rd-curve" || format == "scic-sweep") {
    const eval::RDCurve c =
        format == "scic-sweep" ? eval::LoadSweep(path).curve : eval::CurveFromJson(j.dump());
    o << Line("type", format == "scic-sweep" ? "sweep" : "rd curve") << Line("label", c.label)
      << Line("rate source", eval::RateSourceName(c.rate_source));
    for (const auto& p : c.points) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%-40s bpp %.5f  psnr %.3f  gmsd %.5f\n", p.config.c_str(),
                    p.bpp, p.psnr, p.gmsd);
      o << buf;
    }
    return o.str();
  }
  throw FormatError(path.string() + ": unknown file type (no recognised magic)");
}

}  // namespace scic::experiment
