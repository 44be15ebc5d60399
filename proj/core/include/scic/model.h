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

#ifndef SCIC_MODEL_H_
#define SCIC_MODEL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scic/autograd.h"
#include "scic/entropy_models.h"
#include "scic/rng.h"
#include "scic/tensor.h"

namespace scic::codec {

enum class Backbone { kHyperprior, kChannelAr };

// "hyperprior" / "channel-ar".
std::string BackboneTag(Backbone b);
// Name used in codec labels: "bmshj2018" / "ms2020".
std::string BackboneDisplayName(Backbone b);
// Accepts either the tag or the display name.
Backbone ParseBackbone(const std::string& s);

struct ModelConfig {
  Backbone backbone = Backbone::kHyperprior;
  int decoders = 1;
  int stages = 4;
  int transform_channels = 128;
  int latent_channels = 192;
  int hyper_channels = 128;
  // Channel slices of the autoregressive entropy model; 1 for hyperprior.
  int slices = 4;
  int kernel = 5;
  int hyper_kernel = 3;

  int DownsampleFactor() const { return 1 << stages; }
  // Spatial factor between the image and the hyper-latent.
  int HyperFactor() const { return DownsampleFactor() * 4; }
  int EffectiveSlices() const { return backbone == Backbone::kChannelAr ? slices : 1; }
  void Validate() const;
};

// Latent channel count for a given rate-distortion weight when the config
// does not pin one: wider latents for the high-quality end of the grid.
int DefaultLatentChannels(double lambda);

struct EntropyParams {
  Tensor mean;
  Tensor scale;
};

// Quantized latents as committed by the encoder, together with the
// conditional Gaussian parameters used to code y_hat.
struct LatentCode {
  Tensor y_hat;
  Tensor z_hat;
  EntropyParams y_params;
  // round(y - mean) per element of y_hat, in y_hat order.
  std::vector<int32_t> y_residuals;
};

struct RateEstimate {
  Tensor y_bits;  // per element of y_hat
  Tensor z_bits;  // per element of z_hat
  double y_total = 0.0;
  double z_total = 0.0;
  double total_bits() const { return y_total + z_total; }
};

// Graph handles produced by one training-mode forward pass.
struct TrainForward {
  nn::Var x_hat;
  nn::Var s_hat;  // null for single-decoder models
  nn::Var y_bits;
  nn::Var z_bits;
};

class Model {
 public:
  Model() = default;
  // Deterministic initialization; each parameter draws from a stream keyed by
  // its name, so adding the segmentation head leaves the shared weights
  // untouched.
  static Model Create(const ModelConfig& config, uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::vector<nn::Parameter>& parameters() { return params_; }
  const std::vector<nn::Parameter>& parameters() const { return params_; }
  nn::Parameter* FindParameter(const std::string& name);
  const nn::Parameter* FindParameter(const std::string& name) const;
  void ZeroGrad();

  // Graph building blocks. They record gradients when enabled.
  nn::Var Analysis(const nn::Var& x) const;
  nn::Var HyperAnalysis(const nn::Var& y) const;
  // 2 * C_y channels: base means followed by raw (pre-softplus) scales.
  nn::Var HyperSynthesis(const nn::Var& z_hat) const;
  // Mean and scale of slice k given the hyper features and slices < k.
  std::pair<nn::Var, nn::Var> SliceEntropy(const nn::Var& hyper, std::span<const nn::Var> previous,
                                           int k) const;
  nn::Var SynthesisReconstruction(const nn::Var& y_hat) const;
  nn::Var SynthesisSegmentation(const nn::Var& y_hat) const;
  nn::Var HyperLatentBits(const nn::Var& z) const;

  // Training-mode pass with additive uniform noise standing in for rounding.
  TrainForward ForwardTrain(const Tensor& x, Rng& noise) const;

  // Inference entry points (never record gradients).
  Tensor AnalysisTransform(const Tensor& x) const;
  Tensor HyperFeatures(const Tensor& z_hat) const;
  EntropyParams SliceParams(const Tensor& hyper, std::span<const Tensor> previous, int k) const;
  LatentCode Encode(const Tensor& x) const;
  // Output clamped to [0,1].
  Tensor Reconstruct(const Tensor& y_hat) const;
  // Soft map in [0,1]; throws CapabilityError on single-decoder models.
  Tensor Segment(const Tensor& y_hat) const;
  RateEstimate EstimateRate(const LatentCode& code) const;

  entropy::FactorizedDensity HyperPrior() const;
  int SliceWidth() const { return config_.latent_channels / config_.EffectiveSlices(); }

 private:
  struct Layer {
    enum class Kind { kConv, kDeconv, kGdn, kIgdn, kRelu, kSigmoid } kind;
    int weight = -1;
    int bias = -1;
    int stride = 1;
    int pad = 0;
    int output_pad = 0;
  };
  using Stack = std::vector<Layer>;

  int AddParameter(const std::string& name, Tensor value);
  void AddConv(Stack& stack, const std::string& name, int in, int out, int k, int stride,
               bool transposed, double init_scale, uint64_t seed);
  void AddGdn(Stack& stack, const std::string& name, int channels, bool inverse);
  nn::Var Apply(const Stack& stack, nn::Var x) const;
  nn::Var P(int index) const;
  std::vector<nn::Var> PriorVars() const;

  ModelConfig config_;
  std::vector<nn::Parameter> params_;
  Stack analysis_;
  Stack synthesis_;
  Stack segmentation_;
  Stack hyper_analysis_;
  Stack hyper_synthesis_;
  std::vector<Stack> slice_nets_;  // index k-1 for slice k >= 1
  std::vector<int> prior_;         // 11 parameter indices
};

// Rounds half away from zero.
double RoundHalfAway(double v);

}  // namespace scic::codec

#endif  // SCIC_MODEL_H_
