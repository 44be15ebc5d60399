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

#ifndef SCIC_ENTROPY_MODELS_H_
#define SCIC_ENTROPY_MODELS_H_

#include <array>
#include <vector>

#include "scic/autograd.h"
#include "scic/tensor.h"

namespace scic::entropy {

// Lower bound on every Gaussian scale produced by the hyper-synthesis.
inline constexpr double kScaleMin = 0.11;
// Lower bound on every bin likelihood before taking -log2.
inline constexpr double kLikelihoodFloor = 0x1p-50;

double StdNormalCdf(double t);
double StdNormalPdf(double t);

// Mass of N(mean, scale^2) on [v - 1/2, v + 1/2], evaluated on the upper
// tail of |v - mean| for accuracy far from the mean.
double GaussianBinMass(double v, double mean, double scale);
// -log2(max(mass, kLikelihoodFloor)).
double GaussianBinBits(double v, double mean, double scale);

// Layer widths of the per-channel monotone density used for the
// hyper-latent: 1 -> 3 -> 3 -> 3 -> 1.
inline constexpr std::array<int, 5> kPriorWidths = {1, 3, 3, 3, 1};
inline constexpr int kPriorLayers = 4;

// Raw (unconstrained) parameters of the factorized prior, one set per
// channel. matrices[i] is {C, w[i+1], w[i]} (passed through softplus),
// biases[i] is {C, w[i+1]}, factors[i] is {C, w[i+1]} (passed through tanh).
struct FactorizedPriorTensors {
  std::array<const Tensor*, kPriorLayers> matrices{};
  std::array<const Tensor*, kPriorLayers> biases{};
  std::array<const Tensor*, kPriorLayers - 1> factors{};
  int channels() const { return matrices[0]->dim(0); }
};

// Evaluates the learned cumulative distribution of each hyper-latent
// channel. Constrained parameters are precomputed on construction.
class FactorizedDensity {
 public:
  explicit FactorizedDensity(const FactorizedPriorTensors& raw);

  int channels() const { return channels_; }
  // Logit of the CDF at x; monotone non-decreasing in x.
  double Logit(int channel, double x) const;
  double Cdf(int channel, double x) const;
  // Mass of the unit bin centred on v.
  double BinMass(int channel, double v) const;
  double BinBits(int channel, double v) const;

 private:
  int channels_ = 0;
  std::array<std::vector<double>, kPriorLayers> matrices_;
  std::array<std::vector<double>, kPriorLayers> biases_;
  std::array<std::vector<double>, kPriorLayers - 1> factors_;
};

// Element-wise bits of `z` ({C,H,W}) under the factorized prior, with
// gradients flowing to `z` and to all eleven raw prior parameters
// (ordered matrices, biases, factors).
nn::Var FactorizedBits(const nn::Var& z, std::span<const nn::Var> prior_params);

}  // namespace scic::entropy

#endif  // SCIC_ENTROPY_MODELS_H_
