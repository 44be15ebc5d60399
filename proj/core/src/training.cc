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

#include "scic/training.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <set>

#include "scic/autograd.h"
#include "scic/checkpoint.h"
#include "scic/dataset.h"
#include "scic/error.h"
#include "scic/image_io.h"
#include "scic/rng.h"

namespace scic::training {
namespace {

using nlohmann::json;

enum Stream : uint64_t { kOrderStream = 1, kCropStream = 2, kNoiseStream = 3 };

std::string FormatNumber(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

uint8_t ToByte(double v) {
  return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

TrainingImage FromTensors(const Tensor& image, const Tensor* mask, std::string id) {
  TrainingImage t;
  t.height = image.dim(1);
  t.width = image.dim(2);
  t.id = std::move(id);
  t.rgb.resize(image.size());
  for (size_t i = 0; i < image.size(); ++i) t.rgb[i] = ToByte(image[i]);
  if (mask != nullptr) {
    t.mask.resize(mask->size());
    for (size_t i = 0; i < mask->size(); ++i) t.mask[i] = (*mask)[i] >= 0.5 ? 1 : 0;
  }
  return t;
}

struct Crop {
  Tensor image;
  Tensor mask;
};

Crop CutCrop(const TrainingImage& src, int size, Rng& rng) {
  const int x0 = static_cast<int>(rng.UniformInt(0, src.width - size));
  const int y0 = static_cast<int>(rng.UniformInt(0, src.height - size));
  Crop c{Tensor({3, size, size}), Tensor()};
  const size_t plane = static_cast<size_t>(src.width) * src.height;
  for (int ch = 0; ch < 3; ++ch) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        c.image.at(ch, y, x) =
            src.rgb[ch * plane + static_cast<size_t>(y0 + y) * src.width + x0 + x] / 255.0;
      }
    }
  }
  if (!src.mask.empty()) {
    c.mask = Tensor({1, size, size});
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        c.mask.at(0, y, x) = src.mask[static_cast<size_t>(y0 + y) * src.width + x0 + x];
      }
    }
  }
  return c;
}

struct Adam {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int t = 0;
  std::vector<Tensor> m, v;

  explicit Adam(double learning_rate) : lr(learning_rate) {}

  void Step(std::vector<nn::Parameter>& params) {
    if (m.empty()) {
      for (const auto& p : params) {
        m.emplace_back(p.value.shape());
        v.emplace_back(p.value.shape());
      }
    }
    ++t;
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (size_t k = 0; k < params.size(); ++k) {
      Tensor& w = params[k].value;
      const Tensor& g = params[k].grad;
      for (size_t i = 0; i < w.size(); ++i) {
        m[k][i] = beta1 * m[k][i] + (1.0 - beta1) * g[i];
        v[k][i] = beta2 * v[k][i] + (1.0 - beta2) * g[i] * g[i];
        w[i] -= lr * (m[k][i] / c1) / (std::sqrt(v[k][i] / c2) + eps);
      }
    }
  }
};

void DumpBatch(const std::filesystem::path& dir, const std::vector<Crop>& batch,
               const std::vector<std::string>& ids, const json& info) {
  std::filesystem::create_directories(dir);
  for (size_t j = 0; j < batch.size(); ++j) {
    char name[32];
    std::snprintf(name, sizeof(name), "crop_%02zu.png", j);
    image::SavePng(dir / name, batch[j].image);
    if (!batch[j].mask.empty()) {
      std::snprintf(name, sizeof(name), "mask_%02zu.png", j);
      image::SavePng(dir / name, batch[j].mask);
    }
  }
  json j = info;
  j["images"] = ids;
  std::ofstream(dir / "batch.json") << j.dump(1) << '\n';
}

json LossJson(const LossBreakdown& l) {
  return {{"R", l.rate}, {"D_X", l.distortion_x}, {"D_S", l.distortion_s}, {"total", l.total}};
}

}  // namespace

std::string CorpusTag(Corpus c) {
  switch (c) {
    case Corpus::kNatural:
      return "natural";
    case Corpus::kSynthetic:
      return "synthetic";
    case Corpus::kComposite:
      return "s/n-composite";
  }
  return "?";
}

Corpus ParseCorpus(const std::string& s) {
  if (s == "natural") return Corpus::kNatural;
  if (s == "synthetic") return Corpus::kSynthetic;
  if (s == "s/n-composite" || s == "s/n" || s == "composite") return Corpus::kComposite;
  throw UserError("unknown corpus '" + s + "' (natural, synthetic, s/n-composite)");
}

std::string TrainConfig::Name() const {
  std::string name =
      codec::BackboneDisplayName(backbone) + "-" + std::to_string(decoders) + "-Decoder";
  if (decoders == 1) {
    name += corpus == Corpus::kNatural     ? "-Natural"
            : corpus == Corpus::kSynthetic ? "-Synthetic"
                                           : "-S/N";
  }
  return name + suffix;
}

std::string TrainConfig::FileStem() const {
  std::string s = Name();
  std::erase(s, '/');
  return s;
}

codec::ModelConfig TrainConfig::Model() const {
  codec::ModelConfig m;
  m.backbone = backbone;
  m.decoders = decoders;
  m.stages = stages;
  m.transform_channels = transform_channels;
  m.latent_channels = latent_channels > 0 ? latent_channels : codec::DefaultLatentChannels(lambda);
  m.hyper_channels = hyper_channels;
  m.slices = backbone == codec::Backbone::kChannelAr ? slices : 1;
  return m;
}

void TrainConfig::Validate() const {
  if (decoders != 1 && decoders != 2) throw UserError("decoders must be 1 or 2");
  if (decoders == 2 && corpus != Corpus::kComposite) {
    throw UserError("a 2-decoder model needs the s/n-composite corpus (masks)");
  }
  if (decoders == 1 && phi != 0.0) throw UserError("phi must be 0 for a 1-decoder model");
  if (!(lambda > 0.0)) throw UserError("lambda must be positive");
  if (!(phi >= 0.0)) throw UserError("phi must be non-negative");
  if (!(lr > 0.0)) throw UserError("lr must be positive");
  if (epochs < 1 || batch < 1 || steps_per_epoch < 0) {
    throw UserError("epochs and batch must be positive");
  }
  const codec::ModelConfig m = Model();
  m.Validate();
  if (crop < m.HyperFactor() || crop % m.HyperFactor() != 0) {
    throw UserError("crop must be a positive multiple of " + std::to_string(m.HyperFactor()));
  }
}

std::string ToJson(const TrainConfig& c) {
  json j = {{"name", c.Name()},
            {"backbone", codec::BackboneTag(c.backbone)},
            {"decoders", c.decoders},
            {"corpus", CorpusTag(c.corpus)},
            {"lambda", c.lambda},
            {"phi", c.phi},
            {"lr", c.lr},
            {"epochs", c.epochs},
            {"batch", c.batch},
            {"crop", c.crop},
            {"steps_per_epoch", c.steps_per_epoch},
            {"seed", c.seed},
            {"stages", c.stages},
            {"transform_channels", c.transform_channels},
            {"latent_channels", c.Model().latent_channels},
            {"hyper_channels", c.hyper_channels},
            {"slices", c.slices},
            {"data", c.data},
            {"suffix", c.suffix}};
  return j.dump();
}

TrainConfig TrainConfigFromJson(const std::string& text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw UserError("train config must be an object");
    for (const auto& [key, value] : j.items()) {
      if (key == "name") continue;
      if (key == "backbone")
        c.backbone = codec::ParseBackbone(value.get<std::string>());
      else if (key == "decoders")
        c.decoders = value.get<int>();
      else if (key == "corpus")
        c.corpus = ParseCorpus(value.get<std::string>());
      else if (key == "lambda")
        c.lambda = value.get<double>();
      else if (key == "phi")
        c.phi = value.get<double>();
      else if (key == "lr")
        c.lr = value.get<double>();
      else if (key == "epochs")
        c.epochs = value.get<int>();
      else if (key == "batch")
        c.batch = value.get<int>();
      else if (key == "crop")
        c.crop = value.get<int>();
      else if (key == "steps_per_epoch")
        c.steps_per_epoch = value.get<int>();
      else if (key == "seed")
        c.seed = value.get<uint64_t>();
      else if (key == "stages")
        c.stages = value.get<int>();
      else if (key == "transform_channels")
        c.transform_channels = value.get<int>();
      else if (key == "latent_channels")
        c.latent_channels = value.get<int>();
      else if (key == "hyper_channels")
        c.hyper_channels = value.get<int>();
      else if (key == "slices")
        c.slices = value.get<int>();
      else if (key == "data")
        c.data = value.get<std::string>();
      else if (key == "suffix")
        c.suffix = value.get<std::string>();
      else
        throw UserError("unknown train config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed train config: ") + e.what());
  }
  return c;
}

TrainConfig LoadTrainConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return TrainConfigFromJson(text);
}

LossBreakdown Loss(const Tensor& x, const Tensor& x_hat, const Tensor* s, const Tensor* s_hat,
                   double rate_bpp, double lambda, double phi) {
  if (!x.SameShape(x_hat)) {
    throw ShapeError("reconstruction shape " + x_hat.ShapeString() + " != " + x.ShapeString());
  }
  LossBreakdown l;
  l.rate = rate_bpp;
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) acc += (x[i] - x_hat[i]) * (x[i] - x_hat[i]);
  l.distortion_x = acc / static_cast<double>(x.size());
  if (s != nullptr && s_hat != nullptr) {
    if (!s->SameShape(*s_hat)) throw ShapeError("segmentation shapes differ");
    acc = 0.0;
    for (size_t i = 0; i < s->size(); ++i) acc += ((*s)[i] - (*s_hat)[i]) * ((*s)[i] - (*s_hat)[i]);
    l.distortion_s = acc / static_cast<double>(s->size());
  } else if (phi > 0.0) {
    throw UserError("phi > 0 requires ground-truth masks and a segmentation map");
  }
  l.total = l.rate + lambda * l.distortion_x + phi * l.distortion_s;
  return l;
}

std::vector<TrainingImage> LoadCorpus(const TrainConfig& config) {
  if (config.data.empty()) throw UserError("train config has no data path");
  const std::filesystem::path data = config.data;
  std::vector<TrainingImage> out;
  if (std::filesystem::is_directory(data)) {
    if (config.corpus == Corpus::kComposite) {
      throw UserError("the s/n-composite corpus is read from a dataset manifest, got directory " +
                      data.string());
    }
    for (const auto& path : dataset::ListPoolImages(data)) {
      out.push_back(FromTensors(image::Load(path), nullptr, path.filename().string()));
    }
  } else {
    const dataset::DatasetManifest manifest = dataset::DatasetManifest::Load(data);
    for (const dataset::ManifestEntry* e : manifest.Select(dataset::Split::kTrain)) {
      const dataset::CompositeSample s = dataset::LoadSample(manifest, *e);
      const bool with_mask = config.corpus == Corpus::kComposite;
      out.push_back(FromTensors(s.image, with_mask ? &s.mask : nullptr, e->image_path));
    }
  }
  if (out.empty()) throw UserError("training corpus " + data.string() + " is empty");
  for (const TrainingImage& t : out) {
    if (t.width < config.crop || t.height < config.crop) {
      throw UserError("image " + t.id + " is smaller than the " + std::to_string(config.crop) +
                      " crop");
    }
  }
  return out;
}

SampleLoss BuildSampleLoss(const codec::Model& model, const Tensor& x, const Tensor* mask,
                           Rng& noise, double lambda, double phi) {
  const codec::TrainForward fwd = model.ForwardTrain(x, noise);
  const double pixels = static_cast<double>(x.dim(1)) * x.dim(2);
  SampleLoss g;
  g.rate = nn::Scale(nn::Add(nn::Sum(fwd.y_bits), nn::Sum(fwd.z_bits)), 1.0 / pixels);
  g.distortion_x = nn::MeanSquaredError(fwd.x_hat, nn::ConstantRef(x));
  g.total = nn::Add(g.rate, nn::Scale(g.distortion_x, lambda));
  if (fwd.s_hat) {
    if (mask == nullptr) throw UserError("segmentation loss needs a mask");
    g.distortion_s = nn::MeanSquaredError(fwd.s_hat, nn::ConstantRef(*mask));
    g.total = nn::Add(g.total, nn::Scale(g.distortion_s, phi));
  }
  return g;
}

TrainResult Train(const TrainConfig& config, const std::vector<TrainingImage>& corpus,
                  const TrainOptions& options) {
  config.Validate();
  if (corpus.empty()) throw UserError("training corpus is empty");
  if (config.decoders == 2) {
    for (const TrainingImage& t : corpus) {
      if (t.mask.empty()) throw UserError("image " + t.id + " has no mask");
    }
  }
  TrainResult result;
  result.model = codec::Model::Create(config.Model(), config.seed);
  codec::Model& model = result.model;
  Adam adam(config.lr);

  const int n = static_cast<int>(corpus.size());
  const int steps_per_epoch =
      config.steps_per_epoch > 0 ? config.steps_per_epoch : std::max(1, n / config.batch);
  const std::string config_json = ToJson(config);

  std::ofstream log;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    log.open(options.out_dir / "train_log.jsonl", std::ios::trunc);
    std::ofstream(options.out_dir / "config.json") << json::parse(config_json).dump(1) << '\n';
  }

  int global_step = 0;
  double best = std::numeric_limits<double>::infinity();
  bool stop = false;
  for (int epoch = 0; epoch < config.epochs && !stop; ++epoch) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng order_rng = Rng::Derive(config.seed, kOrderStream, epoch);
    for (int i = n - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<int>(order_rng.UniformInt(0, i))]);
    }
    double epoch_sum = 0.0;
    int epoch_steps = 0;
    for (int s = 0; s < steps_per_epoch; ++s) {
      if (options.max_steps > 0 && global_step >= options.max_steps) {
        stop = true;
        break;
      }
      model.ZeroGrad();
      std::vector<Crop> batch;
      std::vector<std::string> ids;
      for (int j = 0; j < config.batch; ++j) {
        const TrainingImage& src = corpus[order[(static_cast<size_t>(s) * config.batch + j) % n]];
        Rng crop_rng = Rng::Derive(config.seed, kCropStream, global_step, j);
        batch.push_back(CutCrop(src, config.crop, crop_rng));
        ids.push_back(src.id);
      }
      double r_sum = 0.0, dx_sum = 0.0, ds_sum = 0.0;
      auto fwd_mask = [&](const Crop& c) { return config.decoders == 2 ? &c.mask : nullptr; };
      for (int j = 0; j < config.batch; ++j) {
        Rng noise = Rng::Derive(config.seed, kNoiseStream, global_step, j);
        const SampleLoss g = BuildSampleLoss(model, batch[j].image, fwd_mask(batch[j]), noise,
                                             config.lambda, config.phi);
        const nn::Var& rate = g.rate;
        const nn::Var& dx = g.distortion_x;
        const nn::Var& total = g.total;
        const double ds_value = g.distortion_s ? g.distortion_s->value()[0] : 0.0;
        const double t = total->value()[0];
        if (!std::isfinite(t)) {
          const std::filesystem::path dir =
              (options.out_dir.empty() ? std::filesystem::temp_directory_path() : options.out_dir) /
              ("nonfinite_step" + std::to_string(global_step));
          DumpBatch(dir, batch, ids,
                    {{"epoch", epoch},
                     {"step", global_step},
                     {"sample", j},
                     {"R", rate->value()[0]},
                     {"D_X", dx->value()[0]},
                     {"D_S", ds_value}});
          throw Error("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                      std::to_string(global_step) + "; batch dumped to " + dir.string());
        }
        nn::Backward(total, 1.0 / config.batch);
        r_sum += rate->value()[0];
        dx_sum += dx->value()[0];
        ds_sum += ds_value;
      }
      StepRecord rec;
      rec.epoch = epoch;
      rec.step = global_step;
      rec.loss.rate = r_sum / config.batch;
      rec.loss.distortion_x = dx_sum / config.batch;
      rec.loss.distortion_s = ds_sum / config.batch;
      rec.loss.total = rec.loss.rate + config.lambda * rec.loss.distortion_x +
                       config.phi * rec.loss.distortion_s;
      adam.Step(model.parameters());
      result.log.push_back(rec);
      if (log.is_open()) {
        json line = LossJson(rec.loss);
        line["epoch"] = epoch;
        line["step"] = global_step;
        log << line.dump() << '\n';
      }
      if (options.on_step) options.on_step(rec);
      epoch_sum += rec.loss.total;
      ++epoch_steps;
      ++global_step;
    }
    if (epoch_steps == 0) break;
    const double mean = epoch_sum / epoch_steps;
    result.epoch_loss.push_back(mean);
    spdlog::debug("{} epoch {} loss {:.6f}", config.Name(), epoch, mean);
    if (!options.out_dir.empty()) {
      log.flush();
      const json meta = {{"epoch", epoch}, {"step", global_step}, {"epoch_loss", mean}};
      result.last_checkpoint = options.out_dir / "last.ckpt";
      checkpoint::Save(result.last_checkpoint, model, config_json, meta.dump());
      if (mean < best) {
        result.best_checkpoint = options.out_dir / "best.ckpt";
        checkpoint::Save(result.best_checkpoint, model, config_json, meta.dump());
      }
    }
    if (mean < best) {
      best = mean;
      result.best_epoch = epoch;
    }
  }
  return result;
}

TrainResult Train(const TrainConfig& config, const TrainOptions& options) {
  config.Validate();
  return Train(config, LoadCorpus(config), options);
}

std::vector<GridPair> DefaultGrid() {
  return {{1.0, 1e-5}, {1e-1, 1e-5}, {1e-2, 1e-6}, {1e-3, 1e-7}, {1e-4, 1e-7}};
}

std::vector<TrainConfig> ExpandGrid(const TrainConfig& base, const std::vector<GridPair>& pairs) {
  if (pairs.empty()) throw UserError("grid has no (lambda, phi) pairs");
  std::vector<TrainConfig> out;
  std::set<std::string> names;
  for (const GridPair& p : pairs) {
    TrainConfig c = base;
    c.lambda = p.lambda;
    if (base.decoders == 2) {
      c.phi = p.phi;
      c.suffix = base.suffix + "-l" + FormatNumber(p.lambda) + "-p" + FormatNumber(p.phi);
    } else {
      c.phi = 0.0;
      c.suffix = base.suffix + "-l" + FormatNumber(p.lambda);
    }
    if (!names.insert(c.Name()).second) throw UserError("duplicate grid entry " + c.Name());
    c.Validate();
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::filesystem::path> RunGrid(const TrainConfig& base,
                                           const std::vector<GridPair>& pairs,
                                           const std::filesystem::path& out_dir) {
  const std::vector<TrainConfig> configs = ExpandGrid(base, pairs);
  const std::vector<TrainingImage> corpus = LoadCorpus(base);
  std::vector<std::filesystem::path> out;
  for (const TrainConfig& c : configs) {
    spdlog::info("training {}", c.Name());
    TrainOptions opts;
    opts.out_dir = out_dir / c.FileStem();
    out.push_back(Train(c, corpus, opts).best_checkpoint);
  }
  return out;
}

}  // namespace scic::training
