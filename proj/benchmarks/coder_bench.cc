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

#include "scic/rans.h"
#include "scic/rng.h"

namespace {

using namespace scic::entropy;

struct Workload {
  std::vector<CdfTable> tables;
  std::vector<int32_t> symbols;
  std::vector<int32_t> contexts;
};

Workload MakeWorkload(int n) {
  Workload w;
  const auto scales = DefaultScaleTable();
  w.tables = BuildScaleCdfs(scales);
  scic::Rng rng(1);
  for (int i = 0; i < n; ++i) {
    const int c = static_cast<int>(rng.UniformInt(0, 40));
    w.contexts.push_back(c);
    w.symbols.push_back(static_cast<int32_t>(std::lround(rng.Normal() * scales[c])));
  }
  return w;
}

void BM_RansEncode(benchmark::State& state) {
  const Workload w = MakeWorkload(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(EncodeSymbols(w.symbols, w.contexts, w.tables));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RansEncode)->Arg(1 << 12)->Arg(1 << 16);

void BM_RansDecode(benchmark::State& state) {
  const Workload w = MakeWorkload(static_cast<int>(state.range(0)));
  const auto bytes = EncodeSymbols(w.symbols, w.contexts, w.tables);
  for (auto _ : state) {
    benchmark::DoNotOptimize(DecodeSymbols(bytes, w.contexts, w.tables));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RansDecode)->Arg(1 << 12)->Arg(1 << 16);

void BM_BuildScaleCdfs(benchmark::State& state) {
  const auto scales = DefaultScaleTable();
  for (auto _ : state) benchmark::DoNotOptimize(BuildScaleCdfs(scales));
}
BENCHMARK(BM_BuildScaleCdfs);

}  // namespace
