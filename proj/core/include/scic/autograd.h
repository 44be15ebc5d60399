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

#ifndef SCIC_AUTOGRAD_H_
#define SCIC_AUTOGRAD_H_

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scic/tensor.h"

namespace scic::nn {

// A trainable tensor. `grad` has the same shape as `value` and accumulates
// across every Backward() call until ZeroGrad().
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
  void ZeroGrad() { grad.Fill(0.0); }
};

struct Node;
using Var = std::shared_ptr<Node>;

// One value in the dynamic computation graph. Nodes are only linked to
// their parents while gradient recording is enabled, so inference drops
// intermediates as soon as the last Var referencing them dies.
struct Node {
  Tensor owned;
  const Tensor* external = nullptr;
  Tensor grad;
  Tensor* grad_sink = nullptr;
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward;

  const Tensor& value() const { return external ? *external : owned; }
  bool has_grad() const { return grad_sink ? true : !grad.empty(); }
  // Returns the gradient buffer, allocating zeros on first use.
  Tensor& MutableGrad();
  const Tensor& Grad() const { return grad_sink ? *grad_sink : grad; }
};

bool GradEnabled();

// Disables graph recording for its lifetime (thread-local).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

Var Constant(Tensor value);
// References `value` without copying; caller keeps it alive.
Var ConstantRef(const Tensor& value);
Var Param(Parameter& p);

Var Conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);
Var ConvTranspose2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad,
                    int output_pad);

// Generalized divisive normalization over channels with reparameterized
// parameters beta = beta_raw^2 + kGdnBetaMin, gamma = gamma_raw^2.
// Forward: y_i = x_i / sqrt(beta_i + sum_j gamma_ij x_j^2); inverse
// multiplies instead of dividing.
Var Gdn(const Var& x, const Var& beta_raw, const Var& gamma_raw, bool inverse);
inline constexpr double kGdnBetaMin = 1e-6;

Var Relu(const Var& x);
Var Sigmoid(const Var& x);
// 0.11 + softplus(x): strictly above the scale floor, smooth everywhere.
Var ScaleFromRaw(const Var& x);
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Scale(const Var& x, double s);
Var SliceChannels(const Var& x, int begin, int end);
Var ConcatChannels(std::span<const Var> parts);

// Element-wise -log2 of the Gaussian mass of the unit bin around `v`.
Var GaussianBits(const Var& v, const Var& mean, const Var& scale);

// Sum of all elements, returned as a {1} tensor.
Var Sum(const Var& x);
// Mean of (a - b)^2 over every element, returned as a {1} tensor.
Var MeanSquaredError(const Var& a, const Var& b);

// Runs reverse-mode accumulation from `root` (which must hold a single
// element) seeded with d(root) = seed.
void Backward(const Var& root, double seed = 1.0);

// Helper used by custom ops: builds a node with recorded parents when
// gradient recording is on and any parent requires a gradient.
Var MakeResult(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

}  // namespace scic::nn

#endif  // SCIC_AUTOGRAD_H_
