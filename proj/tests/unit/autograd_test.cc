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

#include "scic/autograd.h"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "scic/entropy_models.h"
#include "scic/error.h"
#include "test_util.h"

namespace scic::nn {
namespace {

using scic::testing::RandomTensor;

// Weighted sum so every output element carries a distinct gradient.
Var Reduce(const Var& y, const Tensor& weights) {
  Tensor w = weights;
  return Sum(MakeResult(
      [&] {
        Tensor out = y->value();
        for (size_t i = 0; i < out.size(); ++i) out[i] *= w[i];
        return out;
      }(),
      {y},
      [y, w](Node& self) {
        Tensor& g = y->MutableGrad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += self.Grad()[0] * w[i];
      }));
}

// Compares Backward() against central differences for every input element.
void CheckGradients(std::vector<Parameter>& inputs, const std::function<Var(std::vector<Var>&)>& fn,
                    double tol = 1e-6) {
  auto evaluate = [&] {
    NoGradGuard guard;
    std::vector<Var> vars;
    for (auto& p : inputs) vars.push_back(ConstantRef(p.value));
    return fn(vars)->value()[0];
  };
  for (auto& p : inputs) p.ZeroGrad();
  {
    std::vector<Var> vars;
    for (auto& p : inputs) vars.push_back(Param(p));
    Backward(fn(vars));
  }
  for (auto& p : inputs) {
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(p.value[i]));
      const double saved = p.value[i];
      p.value[i] = saved + h;
      const double up = evaluate();
      p.value[i] = saved - h;
      const double down = evaluate();
      p.value[i] = saved;
      const double numeric = (up - down) / (2 * h);
      EXPECT_NEAR(p.grad[i], numeric, tol * std::max(1.0, std::abs(numeric)))
          << p.name << "[" << i << "]";
    }
  }
}

TEST(AutogradTest, Conv2dGradients) {
  std::vector<Parameter> in = {{"x", RandomTensor({2, 7, 6}, 1)},
                               {"w", RandomTensor({3, 2, 5, 5}, 2, -0.3, 0.3)},
                               {"b", RandomTensor({3}, 3)}};
  const Tensor weights = RandomTensor({3, 4, 3}, 4);
  CheckGradients(
      in, [&](std::vector<Var>& v) { return Reduce(Conv2d(v[0], v[1], v[2], 2, 2), weights); });
}

TEST(AutogradTest, ConvTranspose2dGradients) {
  std::vector<Parameter> in = {{"x", RandomTensor({3, 3, 4}, 5)},
                               {"w", RandomTensor({3, 2, 5, 5}, 6, -0.3, 0.3)},
                               {"b", RandomTensor({2}, 7)}};
  const Tensor weights = RandomTensor({2, 6, 8}, 8);
  CheckGradients(in, [&](std::vector<Var>& v) {
    return Reduce(ConvTranspose2d(v[0], v[1], v[2], 2, 2, 1), weights);
  });
}

TEST(AutogradTest, GdnAndInverseGradients) {
  for (bool inverse : {false, true}) {
    std::vector<Parameter> in = {{"x", RandomTensor({3, 2, 3}, 9)},
                                 {"beta", RandomTensor({3}, 10, 0.5, 1.5)},
                                 {"gamma", RandomTensor({3, 3}, 11, 0.05, 0.6)}};
    const Tensor weights = RandomTensor({3, 2, 3}, 12);
    CheckGradients(
        in, [&](std::vector<Var>& v) { return Reduce(Gdn(v[0], v[1], v[2], inverse), weights); });
  }
}

TEST(AutogradTest, GdnMatchesDefinition) {
  const Tensor x = RandomTensor({2, 1, 3}, 13);
  const Tensor beta = RandomTensor({2}, 14, 0.5, 1.5);
  const Tensor gamma = RandomTensor({2, 2}, 15, 0.1, 0.5);
  NoGradGuard guard;
  const Tensor y = Gdn(ConstantRef(x), ConstantRef(beta), ConstantRef(gamma), false)->value();
  for (int i = 0; i < 2; ++i) {
    for (int p = 0; p < 3; ++p) {
      double norm = beta[i] * beta[i] + kGdnBetaMin;
      for (int j = 0; j < 2; ++j)
        norm += gamma[i * 2 + j] * gamma[i * 2 + j] * x[j * 3 + p] * x[j * 3 + p];
      EXPECT_NEAR(y[i * 3 + p], x[i * 3 + p] / std::sqrt(norm), 1e-15);
    }
  }
}

TEST(AutogradTest, ElementwiseGradients) {
  std::vector<Parameter> in = {{"a", RandomTensor({2, 3, 3}, 16)},
                               {"b", RandomTensor({2, 3, 3}, 17)}};
  const Tensor weights = RandomTensor({4, 3, 3}, 18);
  CheckGradients(in, [&](std::vector<Var>& v) {
    Var s = Sigmoid(v[0]);
    Var r = ScaleFromRaw(Sub(v[1], Scale(v[0], 0.5)));
    Var parts[] = {Add(s, r),
                   SliceChannels(Relu(Add(v[0], Constant(Tensor({2, 3, 3}, 2.0)))), 0, 2)};
    return Reduce(ConcatChannels(parts), weights);
  });
}

TEST(AutogradTest, GaussianBitsGradients) {
  std::vector<Parameter> in = {{"v", RandomTensor({1, 3, 4}, 19, -3, 3)},
                               {"mean", RandomTensor({1, 3, 4}, 20, -1, 1)},
                               {"scale", RandomTensor({1, 3, 4}, 21, 0.2, 3)}};
  CheckGradients(
      in, [&](std::vector<Var>& v) { return Sum(GaussianBits(v[0], v[1], v[2])); }, 1e-5);
}

TEST(AutogradTest, MeanSquaredErrorValueAndGradient) {
  std::vector<Parameter> in = {{"a", RandomTensor({1, 2, 5}, 22)},
                               {"b", RandomTensor({1, 2, 5}, 23)}};
  CheckGradients(in, [&](std::vector<Var>& v) { return MeanSquaredError(v[0], v[1]); });
  double expected = 0.0;
  for (size_t i = 0; i < 10; ++i) expected += std::pow(in[0].value[i] - in[1].value[i], 2) / 10;
  NoGradGuard guard;
  EXPECT_NEAR(MeanSquaredError(ConstantRef(in[0].value), ConstantRef(in[1].value))->value()[0],
              expected, 1e-15);
}

TEST(AutogradTest, GradientsAccumulateAcrossBackwardCalls) {
  Parameter p("p", Tensor({1}, 2.0));
  for (int i = 0; i < 3; ++i) Backward(Scale(Param(p), 3.0), 0.5);
  EXPECT_DOUBLE_EQ(p.grad[0], 4.5);
}

TEST(AutogradTest, NoGradGuardDropsGraph) {
  Parameter p("p", Tensor({1}, 1.0));
  NoGradGuard guard;
  EXPECT_FALSE(GradEnabled());
  Var y = Scale(Param(p), 2.0);
  EXPECT_TRUE(y->parents.empty());
}

TEST(AutogradTest, ShapeMismatchThrows) {
  Var a = Constant(Tensor({1, 2, 2}));
  Var b = Constant(Tensor({1, 2, 3}));
  EXPECT_THROW(Add(a, b), ShapeError);
}

}  // namespace
}  // namespace scic::nn
