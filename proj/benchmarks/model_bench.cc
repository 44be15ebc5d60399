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

#include <benchmark/benchmark.h>

#include "scic/autograd.h"
#include "scic/bitstream.h"
#include "scic/model.h"
#include "scic/procedural.h"
#include "scic/training.h"

namespace {

scic::codec::Model DeskModel() {
  scic::codec::ModelConfig c;
  c.backbone = scic::codec::Backbone::kHyperprior;
  c.decoders = 2;
  c.stages = 4;
  c.transform_channels = 32;
  c.latent_channels = 32;
  c.hyper_channels = 32;
  c.slices = 1;
  return scic::codec::Model::Create(c, 1);
}

scic::Tensor Image(int size) {
  scic::Rng rng(3);
  return scic::procedural::RenderNaturalScene(rng, size, size);
}

void BM_Conv2d(benchmark::State& state) {
  scic::Rng rng(2);
  const int c = static_cast<int>(state.range(0));
  scic::Tensor x({c, 64, 64}), w({c, c, 5, 5}), b({c});
  for (double& v : x.values()) v = rng.Uniform(-1, 1);
  for (double& v : w.values()) v = rng.Uniform(-0.1, 0.1);
  scic::nn::NoGradGuard guard;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scic::nn::Conv2d(scic::nn::ConstantRef(x), scic::nn::ConstantRef(w),
                                              scic::nn::ConstantRef(b), 2, 2));
  }
}
BENCHMARK(BM_Conv2d)->Arg(32)->Arg(128);

void BM_TrainStep(benchmark::State& state) {
  const auto model = DeskModel();
  const scic::Tensor x = Image(64);
  scic::Tensor mask({1, 64, 64});
  for (auto _ : state) {
    scic::Rng noise(5);
    const auto loss = scic::training::BuildSampleLoss(model, x, &mask, noise, 200.0, 0.02);
    scic::nn::Backward(loss.total);
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_EncodeDecode(benchmark::State& state) {
  const auto model = DeskModel();
  const scic::Tensor x = Image(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const auto enc = scic::codec::EncodeImage(model, x);
    benchmark::DoNotOptimize(scic::codec::DecodeImage(model, enc.bytes, true));
  }
}
BENCHMARK(BM_EncodeDecode)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace
