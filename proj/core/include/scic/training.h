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

#ifndef SCIC_TRAINING_H_
#define SCIC_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "scic/model.h"
#include "scic/tensor.h"

namespace scic::training {

enum class Corpus { kNatural, kSynthetic, kComposite };

// "natural" / "synthetic" / "s/n-composite".
std::string CorpusTag(Corpus c);
Corpus ParseCorpus(const std::string& s);

struct TrainConfig {
  codec::Backbone backbone = codec::Backbone::kHyperprior;
  int decoders = 1;
  Corpus corpus = Corpus::kComposite;
  double lambda = 0.01;
  double phi = 0.0;
  double lr = 1e-4;
  int epochs = 50;
  int batch = 8;
  int crop = 64;
  // 0 selects floor(corpus size / batch), at least 1.
  int steps_per_epoch = 0;
  uint64_t seed = 0;

  int stages = 4;
  int transform_channels = 128;
  // 0 selects DefaultLatentChannels(lambda).
  int latent_channels = 0;
  int hyper_channels = 128;
  int slices = 4;

  // Dataset manifest (composite corpus) or a directory of images.
  std::string data;
  // Appended to the codec name, e.g. the grid point.
  std::string suffix;

  // "<backbone>-<d>-Decoder[-Natural|-Synthetic|-S/N]" plus the suffix.
  std::string Name() const;
  // Name() with characters unsafe in file names removed.
  std::string FileStem() const;
  codec::ModelConfig Model() const;
  void Validate() const;
};

std::string ToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const std::string& json);
TrainConfig LoadTrainConfig(const std::filesystem::path& path);

struct LossBreakdown {
  double rate = 0.0;          // bits per pixel
  double distortion_x = 0.0;  // MSE of the reconstruction
  double distortion_s = 0.0;  // MSE of the segmentation map
  double total = 0.0;
};

// total = rate + lambda * D_X + phi * D_S. `s`/`s_hat` may be null when
// phi is zero.
LossBreakdown Loss(const Tensor& x, const Tensor& x_hat, const Tensor* s, const Tensor* s_hat,
                   double rate_bpp, double lambda, double phi);

struct SampleLoss {
  nn::Var rate;  // (y bits + z bits) / pixels
  nn::Var distortion_x;
  nn::Var distortion_s;  // null for single-decoder models
  nn::Var total;
};

// Loss graph of one crop under noise-proxy quantization; the trainer
// averages these over the batch. `x` and `mask` must outlive the graph.
SampleLoss BuildSampleLoss(const codec::Model& model, const Tensor& x, const Tensor* mask,
                           Rng& noise, double lambda, double phi);

// One training image held as 8-bit samples.
struct TrainingImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;   // planar {3,H,W}
  std::vector<uint8_t> mask;  // {H,W}; empty without masks
  std::string id;
};

// Train split of a manifest, or every image of a directory.
std::vector<TrainingImage> LoadCorpus(const TrainConfig& config);

struct StepRecord {
  int epoch = 0;
  int step = 0;  // global step
  LossBreakdown loss;
};

struct TrainOptions {
  // Checkpoints and logs are written here when non-empty.
  std::filesystem::path out_dir;
  // Stops after this many optimizer steps when positive.
  int max_steps = 0;
  std::function<void(const StepRecord&)> on_step;
};

struct TrainResult {
  codec::Model model;  // parameters after the final step
  std::vector<StepRecord> log;
  std::vector<double> epoch_loss;  // mean total per epoch
  int best_epoch = -1;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
};

// Adam with noise-proxy quantization. Batch composition, crops and noise
// are pure functions of (seed, epoch, step), so runs are reproducible.
TrainResult Train(const TrainConfig& config, const std::vector<TrainingImage>& corpus,
                  const TrainOptions& options = {});
TrainResult Train(const TrainConfig& config, const TrainOptions& options = {});

struct GridPair {
  double lambda = 0.0;
  double phi = 0.0;
};

// (1,1e-5), (1e-1,1e-5), (1e-2,1e-6), (1e-3,1e-7), (1e-4,1e-7).
std::vector<GridPair> DefaultGrid();

// One config per pair with the pair encoded in the name. Single-decoder
// configs keep only lambda (phi forced to 0).
std::vector<TrainConfig> ExpandGrid(const TrainConfig& base, const std::vector<GridPair>& pairs);

// Trains every grid config into out_dir/<stem>/ and returns the best
// checkpoint of each, in grid order.
std::vector<std::filesystem::path> RunGrid(const TrainConfig& base,
                                           const std::vector<GridPair>& pairs,
                                           const std::filesystem::path& out_dir);

}  // namespace scic::training

#endif  // SCIC_TRAINING_H_
