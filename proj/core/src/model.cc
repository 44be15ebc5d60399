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

#include "scic/model.h"

#include <cmath>

#include "scic/error.h"

namespace scic::codec {
namespace {

uint64_t NameKey(const std::string& name) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : name) h = (h ^ c) * 1099511628211ull;
  return h;
}

Tensor Uniform(std::vector<int> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.storage()) v = rng.Uniform(-bound, bound);
  return t;
}

Tensor Round(const Tensor& t) {
  Tensor out = t;
  for (double& v : out.storage()) v = RoundHalfAway(v);
  return out;
}

}  // namespace

double RoundHalfAway(double v) { return std::round(v); }

std::string BackboneTag(Backbone b) {
  return b == Backbone::kHyperprior ? "hyperprior" : "channel-ar";
}

std::string BackboneDisplayName(Backbone b) {
  return b == Backbone::kHyperprior ? "bmshj2018" : "ms2020";
}

Backbone ParseBackbone(const std::string& s) {
  if (s == "hyperprior" || s == "bmshj2018") return Backbone::kHyperprior;
  if (s == "channel-ar" || s == "ms2020") return Backbone::kChannelAr;
  throw UserError("unknown backbone '" + s + "'");
}

void ModelConfig::Validate() const {
  if (decoders != 1 && decoders != 2) throw UserError("decoders must be 1 or 2");
  if (stages < 1 || stages > 6) throw UserError("stages must be in [1, 6]");
  if (transform_channels < 1 || latent_channels < 1 || hyper_channels < 1) {
    throw UserError("channel counts must be positive");
  }
  if (kernel % 2 == 0 || hyper_kernel % 2 == 0) throw UserError("kernels must be odd");
  if (backbone == Backbone::kChannelAr) {
    if (slices < 1 || latent_channels % slices != 0) {
      throw UserError("latent channels must split into equal slices");
    }
  }
}

int DefaultLatentChannels(double lambda) { return lambda >= 1e-2 ? 192 : 128; }

int Model::AddParameter(const std::string& name, Tensor value) {
  params_.emplace_back(name, std::move(value));
  return static_cast<int>(params_.size()) - 1;
}

void Model::AddConv(Stack& stack, const std::string& name, int in, int out, int k, int stride,
                    bool transposed, double init_scale, uint64_t seed) {
  Rng wrng = Rng::Derive(seed, NameKey(name + ".weight"));
  Rng brng = Rng::Derive(seed, NameKey(name + ".bias"));
  const double fan_in = transposed ? static_cast<double>(in) * k * k / (stride * stride)
                                   : static_cast<double>(in) * k * k;
  const double fan_out = transposed ? static_cast<double>(out) * k * k
                                    : static_cast<double>(out) * k * k / (stride * stride);
  const double bound = init_scale * std::sqrt(6.0 / (fan_in + fan_out));
  Layer layer;
  layer.kind = transposed ? Layer::Kind::kDeconv : Layer::Kind::kConv;
  std::vector<int> wshape =
      transposed ? std::vector<int>{in, out, k, k} : std::vector<int>{out, in, k, k};
  layer.weight = AddParameter(name + ".weight", Uniform(wshape, bound, wrng));
  layer.bias = AddParameter(name + ".bias", Uniform({out}, 1.0 / std::sqrt(fan_in), brng));
  layer.stride = stride;
  layer.pad = k / 2;
  layer.output_pad = transposed ? stride - 1 : 0;
  stack.push_back(layer);
}

void Model::AddGdn(Stack& stack, const std::string& name, int channels, bool inverse) {
  Tensor beta({channels}, 1.0);
  Tensor gamma({channels, channels}, 1e-3);
  for (int i = 0; i < channels; ++i) gamma[i * channels + i] = std::sqrt(0.1);
  Layer layer;
  layer.kind = inverse ? Layer::Kind::kIgdn : Layer::Kind::kGdn;
  layer.weight = AddParameter(name + ".gamma", std::move(gamma));
  layer.bias = AddParameter(name + ".beta", std::move(beta));
  stack.push_back(layer);
}

Model Model::Create(const ModelConfig& config, uint64_t seed) {
  config.Validate();
  Model m;
  m.config_ = config;
  const int n = config.transform_channels;
  const int cy = config.latent_channels;
  const int cz = config.hyper_channels;
  const int k = config.kernel, hk = config.hyper_kernel;
  const int stages = config.stages;

  for (int s = 0; s < stages; ++s) {
    const std::string base = "analysis." + std::to_string(s);
    m.AddConv(m.analysis_, base + ".conv", s == 0 ? 3 : n, s + 1 == stages ? cy : n, k, 2, false,
              1.0, seed);
    if (s + 1 < stages) m.AddGdn(m.analysis_, base + ".gdn", n, false);
  }
  m.AddConv(m.hyper_analysis_, "hyper_analysis.0", cy, cz, hk, 1, false, 1.0, seed);
  m.hyper_analysis_.push_back({Layer::Kind::kRelu});
  m.AddConv(m.hyper_analysis_, "hyper_analysis.1", cz, cz, hk, 2, false, 1.0, seed);
  m.hyper_analysis_.push_back({Layer::Kind::kRelu});
  m.AddConv(m.hyper_analysis_, "hyper_analysis.2", cz, cz, hk, 2, false, 1.0, seed);

  m.AddConv(m.hyper_synthesis_, "hyper_synthesis.0", cz, cz, hk, 2, true, 1.0, seed);
  m.hyper_synthesis_.push_back({Layer::Kind::kRelu});
  m.AddConv(m.hyper_synthesis_, "hyper_synthesis.1", cz, cz, hk, 2, true, 1.0, seed);
  m.hyper_synthesis_.push_back({Layer::Kind::kRelu});
  m.AddConv(m.hyper_synthesis_, "hyper_synthesis.2", cz, 2 * cy, hk, 1, false, 1.0, seed);

  const int slices = config.EffectiveSlices();
  const int width = cy / slices;
  for (int s = 1; s < slices; ++s) {
    Stack net;
    const std::string base = "slice." + std::to_string(s);
    m.AddConv(net, base + ".0", 2 * cy + s * width, cz, hk, 1, false, 1.0, seed);
    net.push_back({Layer::Kind::kRelu});
    m.AddConv(net, base + ".1", cz, 2 * width, hk, 1, false, 0.1, seed);
    m.slice_nets_.push_back(std::move(net));
  }

  // Factorized prior: constant matrices so the initial density is a broad
  // logistic-like bump, random biases, zero gating factors.
  const double init_scale = 10.0;
  const double scale = std::pow(init_scale, 1.0 / entropy::kPriorLayers);
  Rng prior_rng = Rng::Derive(seed, NameKey("prior"));
  for (int i = 0; i < entropy::kPriorLayers; ++i) {
    const int in = entropy::kPriorWidths[i], out = entropy::kPriorWidths[i + 1];
    const double init = std::log(std::expm1(1.0 / scale / out));
    m.prior_.push_back(
        m.AddParameter("prior.matrix" + std::to_string(i), Tensor({cz, out, in}, init)));
  }
  for (int i = 0; i < entropy::kPriorLayers; ++i) {
    const int out = entropy::kPriorWidths[i + 1];
    m.prior_.push_back(
        m.AddParameter("prior.bias" + std::to_string(i), Uniform({cz, out}, 0.5, prior_rng)));
  }
  for (int i = 0; i + 1 < entropy::kPriorLayers; ++i) {
    const int out = entropy::kPriorWidths[i + 1];
    m.prior_.push_back(m.AddParameter("prior.factor" + std::to_string(i), Tensor({cz, out}, 0.0)));
  }

  for (int s = 0; s < stages; ++s) {
    const std::string base = "synthesis." + std::to_string(s);
    m.AddConv(m.synthesis_, base + ".deconv", s == 0 ? cy : n, s + 1 == stages ? 3 : n, k, 2, true,
              1.0, seed);
    if (s + 1 < stages) m.AddGdn(m.synthesis_, base + ".igdn", n, true);
  }
  if (config.decoders == 2) {
    // Same architecture as the reconstruction head, single output channel.
    for (int s = 0; s < stages; ++s) {
      const std::string base = "segmentation." + std::to_string(s);
      m.AddConv(m.segmentation_, base + ".deconv", s == 0 ? cy : n, s + 1 == stages ? 1 : n, k, 2,
                true, 1.0, seed);
      if (s + 1 < stages) m.AddGdn(m.segmentation_, base + ".igdn", n, true);
    }
    m.segmentation_.push_back({Layer::Kind::kSigmoid});
  }
  return m;
}

nn::Parameter* Model::FindParameter(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const nn::Parameter* Model::FindParameter(const std::string& name) const {
  return const_cast<Model*>(this)->FindParameter(name);
}

void Model::ZeroGrad() {
  for (auto& p : params_) p.ZeroGrad();
}

nn::Var Model::P(int index) const {
  // Recording a parameter needs a mutable gradient sink. Inference paths run
  // under NoGradGuard, where Param() only reads the value.
  return nn::Param(const_cast<nn::Parameter&>(params_[index]));
}

nn::Var Model::Apply(const Stack& stack, nn::Var x) const {
  for (const Layer& layer : stack) {
    switch (layer.kind) {
      case Layer::Kind::kConv:
        x = nn::Conv2d(x, P(layer.weight), P(layer.bias), layer.stride, layer.pad);
        break;
      case Layer::Kind::kDeconv:
        x = nn::ConvTranspose2d(x, P(layer.weight), P(layer.bias), layer.stride, layer.pad,
                                layer.output_pad);
        break;
      case Layer::Kind::kGdn:
        x = nn::Gdn(x, P(layer.bias), P(layer.weight), false);
        break;
      case Layer::Kind::kIgdn:
        x = nn::Gdn(x, P(layer.bias), P(layer.weight), true);
        break;
      case Layer::Kind::kRelu:
        x = nn::Relu(x);
        break;
      case Layer::Kind::kSigmoid:
        x = nn::Sigmoid(x);
        break;
    }
  }
  return x;
}

std::vector<nn::Var> Model::PriorVars() const {
  std::vector<nn::Var> vars;
  for (int idx : prior_) vars.push_back(P(idx));
  return vars;
}

nn::Var Model::Analysis(const nn::Var& x) const {
  const Tensor& v = x->value();
  const int f = config_.DownsampleFactor();
  if (v.rank() != 3 || v.dim(0) != 3) throw ShapeError("expected a 3-channel image");
  if (v.dim(1) % f != 0 || v.dim(2) % f != 0) {
    throw ShapeError("padding required: image " + v.ShapeString() + " is not divisible by " +
                     std::to_string(f));
  }
  return Apply(analysis_, x);
}

nn::Var Model::HyperAnalysis(const nn::Var& y) const {
  const Tensor& v = y->value();
  if (v.dim(1) % 4 != 0 || v.dim(2) % 4 != 0) {
    throw ShapeError("latent " + v.ShapeString() + " not divisible by 4");
  }
  return Apply(hyper_analysis_, y);
}

nn::Var Model::HyperSynthesis(const nn::Var& z_hat) const { return Apply(hyper_synthesis_, z_hat); }

std::pair<nn::Var, nn::Var> Model::SliceEntropy(const nn::Var& hyper,
                                                std::span<const nn::Var> previous, int k) const {
  const int cy = config_.latent_channels;
  const int width = SliceWidth();
  if (k < 0 || k >= config_.EffectiveSlices() || static_cast<int>(previous.size()) != k) {
    throw InvariantViolation("slice index out of order");
  }
  nn::Var mean = nn::SliceChannels(hyper, k * width, (k + 1) * width);
  nn::Var raw = nn::SliceChannels(hyper, cy + k * width, cy + (k + 1) * width);
  if (k > 0) {
    std::vector<nn::Var> inputs{hyper};
    inputs.insert(inputs.end(), previous.begin(), previous.end());
    nn::Var delta = Apply(slice_nets_[k - 1], nn::ConcatChannels(inputs));
    mean = nn::Add(mean, nn::SliceChannels(delta, 0, width));
    raw = nn::Add(raw, nn::SliceChannels(delta, width, 2 * width));
  }
  return {mean, nn::ScaleFromRaw(raw)};
}

nn::Var Model::SynthesisReconstruction(const nn::Var& y_hat) const {
  return Apply(synthesis_, y_hat);
}

nn::Var Model::SynthesisSegmentation(const nn::Var& y_hat) const {
  if (config_.decoders != 2) {
    throw CapabilityError("checkpoint has a single decoder; no segmentation head");
  }
  return Apply(segmentation_, y_hat);
}

nn::Var Model::HyperLatentBits(const nn::Var& z) const {
  const auto vars = PriorVars();
  return entropy::FactorizedBits(z, vars);
}

TrainForward Model::ForwardTrain(const Tensor& x, Rng& noise) const {
  auto add_noise = [&noise](const nn::Var& v) {
    Tensor u(v->value().shape());
    for (double& e : u.storage()) e = noise.Uniform() - 0.5;
    return nn::Add(v, nn::Constant(std::move(u)));
  };
  TrainForward out;
  nn::Var y = Analysis(nn::ConstantRef(x));
  nn::Var z = HyperAnalysis(y);
  nn::Var z_tilde = add_noise(z);
  out.z_bits = HyperLatentBits(z_tilde);
  nn::Var hyper = HyperSynthesis(z_tilde);
  nn::Var y_tilde = add_noise(y);

  const int slices = config_.EffectiveSlices();
  const int width = SliceWidth();
  std::vector<nn::Var> decoded;
  std::vector<nn::Var> bits;
  for (int k = 0; k < slices; ++k) {
    nn::Var yk = slices == 1 ? y_tilde : nn::SliceChannels(y_tilde, k * width, (k + 1) * width);
    auto [mean, scale] = SliceEntropy(hyper, decoded, k);
    bits.push_back(nn::GaussianBits(yk, mean, scale));
    decoded.push_back(yk);
  }
  out.y_bits = slices == 1 ? bits[0] : nn::ConcatChannels(bits);
  out.x_hat = SynthesisReconstruction(y_tilde);
  if (config_.decoders == 2) out.s_hat = SynthesisSegmentation(y_tilde);
  return out;
}

Tensor Model::AnalysisTransform(const Tensor& x) const {
  nn::NoGradGuard guard;
  return Analysis(nn::ConstantRef(x))->value();
}

Tensor Model::HyperFeatures(const Tensor& z_hat) const {
  nn::NoGradGuard guard;
  return HyperSynthesis(nn::ConstantRef(z_hat))->value();
}

EntropyParams Model::SliceParams(const Tensor& hyper, std::span<const Tensor> previous,
                                 int k) const {
  nn::NoGradGuard guard;
  std::vector<nn::Var> prev;
  for (const Tensor& t : previous) prev.push_back(nn::ConstantRef(t));
  auto [mean, scale] = SliceEntropy(nn::ConstantRef(hyper), prev, k);
  return {mean->value(), scale->value()};
}

LatentCode Model::Encode(const Tensor& x) const {
  nn::NoGradGuard guard;
  LatentCode code;
  nn::Var y = Analysis(nn::ConstantRef(x));
  nn::Var z = HyperAnalysis(y);
  code.z_hat = Round(z->value());
  const Tensor hyper = HyperFeatures(code.z_hat);
  const int slices = config_.EffectiveSlices();
  const int width = SliceWidth();
  std::vector<Tensor> y_slices, means, scales;
  for (int k = 0; k < slices; ++k) {
    EntropyParams ep = SliceParams(hyper, y_slices, k);
    Tensor yk = y->value().Channels(k * width, (k + 1) * width);
    // Mean-centred residual quantization.
    for (size_t i = 0; i < yk.size(); ++i) {
      const double r = RoundHalfAway(yk[i] - ep.mean[i]);
      if (!(std::abs(r) < 2147483647.0)) throw InvariantViolation("latent residual out of range");
      code.y_residuals.push_back(static_cast<int32_t>(r));
      yk[i] = r + ep.mean[i];
    }
    y_slices.push_back(std::move(yk));
    means.push_back(std::move(ep.mean));
    scales.push_back(std::move(ep.scale));
  }
  auto ptrs = [](const std::vector<Tensor>& v) {
    std::vector<const Tensor*> p;
    for (const Tensor& t : v) p.push_back(&t);
    return p;
  };
  code.y_hat = ConcatChannels(ptrs(y_slices));
  code.y_params.mean = ConcatChannels(ptrs(means));
  code.y_params.scale = ConcatChannels(ptrs(scales));
  return code;
}

Tensor Model::Reconstruct(const Tensor& y_hat) const {
  nn::NoGradGuard guard;
  Tensor out = SynthesisReconstruction(nn::ConstantRef(y_hat))->value();
  for (double& v : out.storage()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Tensor Model::Segment(const Tensor& y_hat) const {
  nn::NoGradGuard guard;
  return SynthesisSegmentation(nn::ConstantRef(y_hat))->value();
}

entropy::FactorizedDensity Model::HyperPrior() const {
  entropy::FactorizedPriorTensors raw;
  for (int i = 0; i < entropy::kPriorLayers; ++i) {
    raw.matrices[i] = &params_[prior_[i]].value;
    raw.biases[i] = &params_[prior_[entropy::kPriorLayers + i]].value;
  }
  for (int i = 0; i + 1 < entropy::kPriorLayers; ++i) {
    raw.factors[i] = &params_[prior_[2 * entropy::kPriorLayers + i]].value;
  }
  return entropy::FactorizedDensity(raw);
}

RateEstimate Model::EstimateRate(const LatentCode& code) const {
  RateEstimate r;
  r.y_bits = Tensor(code.y_hat.shape());
  for (size_t i = 0; i < code.y_hat.size(); ++i) {
    const double s = code.y_params.scale[i];
    if (!(s >= entropy::kScaleMin)) throw InvariantViolation("scale below floor");
    r.y_bits[i] = entropy::GaussianBinBits(code.y_hat[i], code.y_params.mean[i], s);
    r.y_total += r.y_bits[i];
  }
  const entropy::FactorizedDensity prior = HyperPrior();
  r.z_bits = Tensor(code.z_hat.shape());
  const size_t plane = code.z_hat.size() / code.z_hat.dim(0);
  for (size_t i = 0; i < code.z_hat.size(); ++i) {
    r.z_bits[i] = prior.BinBits(static_cast<int>(i / plane), code.z_hat[i]);
    r.z_total += r.z_bits[i];
  }
  return r;
}

}  // namespace scic::codec
