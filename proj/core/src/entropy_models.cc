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

#include "scic/entropy_models.h"

#include <cmath>
#include <numbers>

#include "scic/error.h"

namespace scic::entropy {
namespace {

double Softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr int kMaxWidth = 3;

// Intermediates of one evaluation of the cumulative logit, kept so the
// backward pass does not need to recompute them.
struct LogitTrace {
  std::array<std::array<double, kMaxWidth>, kPriorLayers + 1> h{};
  std::array<std::array<double, kMaxWidth>, kPriorLayers> pre{};
};

// Constrained parameters of one channel, gathered for quick access.
struct ChannelParams {
  std::array<const double*, kPriorLayers> m;  // softplus(raw)
  std::array<const double*, kPriorLayers> b;
  std::array<const double*, kPriorLayers - 1> t;  // tanh(raw)
};

double EvalLogit(const ChannelParams& cp, double x, LogitTrace* trace) {
  std::array<double, kMaxWidth> h{x, 0.0, 0.0};
  if (trace) trace->h[0] = h;
  for (int layer = 0; layer < kPriorLayers; ++layer) {
    const int in = kPriorWidths[layer], out = kPriorWidths[layer + 1];
    std::array<double, kMaxWidth> pre{};
    for (int r = 0; r < out; ++r) {
      double s = cp.b[layer][r];
      for (int c = 0; c < in; ++c) s += cp.m[layer][r * in + c] * h[c];
      pre[r] = s;
    }
    if (trace) trace->pre[layer] = pre;
    if (layer + 1 < kPriorLayers) {
      for (int r = 0; r < out; ++r) h[r] = pre[r] + cp.t[layer][r] * std::tanh(pre[r]);
    } else {
      h = pre;
    }
    if (trace) trace->h[layer + 1] = h;
  }
  return h[0];
}

}  // namespace

double StdNormalCdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

double StdNormalPdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }

double GaussianBinMass(double v, double mean, double scale) {
  const double ad = std::abs(v - mean);
  return StdNormalCdf((0.5 - ad) / scale) - StdNormalCdf((-0.5 - ad) / scale);
}

double GaussianBinBits(double v, double mean, double scale) {
  const double p = GaussianBinMass(v, mean, scale);
  return -std::log2(p > kLikelihoodFloor ? p : kLikelihoodFloor);
}

FactorizedDensity::FactorizedDensity(const FactorizedPriorTensors& raw)
    : channels_(raw.channels()) {
  for (int i = 0; i < kPriorLayers; ++i) {
    const auto& m = raw.matrices[i]->storage();
    matrices_[i].resize(m.size());
    for (size_t k = 0; k < m.size(); ++k) matrices_[i][k] = Softplus(m[k]);
    biases_[i].assign(raw.biases[i]->storage().begin(), raw.biases[i]->storage().end());
  }
  for (int i = 0; i + 1 < kPriorLayers; ++i) {
    const auto& f = raw.factors[i]->storage();
    factors_[i].resize(f.size());
    for (size_t k = 0; k < f.size(); ++k) factors_[i][k] = std::tanh(f[k]);
  }
}

double FactorizedDensity::Logit(int channel, double x) const {
  ChannelParams cp;
  for (int i = 0; i < kPriorLayers; ++i) {
    const int msize = kPriorWidths[i] * kPriorWidths[i + 1];
    cp.m[i] = matrices_[i].data() + channel * msize;
    cp.b[i] = biases_[i].data() + channel * kPriorWidths[i + 1];
    if (i + 1 < kPriorLayers) cp.t[i] = factors_[i].data() + channel * kPriorWidths[i + 1];
  }
  return EvalLogit(cp, x, nullptr);
}

double FactorizedDensity::Cdf(int channel, double x) const { return Sigmoid(Logit(channel, x)); }

double FactorizedDensity::BinMass(int channel, double v) const {
  const double lo = Logit(channel, v - 0.5);
  const double hi = Logit(channel, v + 0.5);
  const double s = (lo + hi > 0.0) ? -1.0 : 1.0;
  return std::abs(Sigmoid(s * hi) - Sigmoid(s * lo));
}

double FactorizedDensity::BinBits(int channel, double v) const {
  const double p = BinMass(channel, v);
  return -std::log2(p > kLikelihoodFloor ? p : kLikelihoodFloor);
}

nn::Var FactorizedBits(const nn::Var& z, std::span<const nn::Var> prior_params) {
  constexpr int kCount = 2 * kPriorLayers + kPriorLayers - 1;
  if (prior_params.size() != kCount) throw ShapeError("factorized prior expects 11 tensors");
  FactorizedPriorTensors raw;
  for (int i = 0; i < kPriorLayers; ++i) {
    raw.matrices[i] = &prior_params[i]->value();
    raw.biases[i] = &prior_params[kPriorLayers + i]->value();
  }
  for (int i = 0; i + 1 < kPriorLayers; ++i) {
    raw.factors[i] = &prior_params[2 * kPriorLayers + i]->value();
  }
  const Tensor& zv = z->value();
  if (zv.rank() != 3 || zv.dim(0) != raw.channels()) {
    throw ShapeError("factorized prior channel mismatch: " + zv.ShapeString());
  }
  const FactorizedDensity density(raw);
  Tensor out(zv.shape());
  for (size_t i = 0; i < zv.size(); ++i) {
    const int c = static_cast<int>(i / (zv.size() / zv.dim(0)));
    out[i] = density.BinBits(c, zv[i]);
  }

  std::vector<nn::Var> parents{z};
  parents.insert(parents.end(), prior_params.begin(), prior_params.end());
  std::vector<nn::Var> pp(prior_params.begin(), prior_params.end());
  return nn::MakeResult(std::move(out), parents, [z, pp, raw](nn::Node& self) {
    const int channels = raw.channels();
    const size_t plane = z->value().size() / channels;
    // Gradients with respect to the constrained parameters.
    std::array<std::vector<double>, kPriorLayers> gm, gb;
    std::array<std::vector<double>, kPriorLayers - 1> gt;
    for (int i = 0; i < kPriorLayers; ++i) {
      gm[i].assign(raw.matrices[i]->size(), 0.0);
      gb[i].assign(raw.biases[i]->size(), 0.0);
      if (i + 1 < kPriorLayers) gt[i].assign(raw.factors[i]->size(), 0.0);
    }
    std::array<std::vector<double>, kPriorLayers> sp_m;
    std::array<std::vector<double>, kPriorLayers - 1> th;
    for (int i = 0; i < kPriorLayers; ++i) {
      sp_m[i].resize(raw.matrices[i]->size());
      for (size_t k = 0; k < sp_m[i].size(); ++k) sp_m[i][k] = Softplus((*raw.matrices[i])[k]);
    }
    for (int i = 0; i + 1 < kPriorLayers; ++i) {
      th[i].resize(raw.factors[i]->size());
      for (size_t k = 0; k < th[i].size(); ++k) th[i][k] = std::tanh((*raw.factors[i])[k]);
    }
    const Tensor& g = self.Grad();
    Tensor* dz = z->requires_grad ? &z->MutableGrad() : nullptr;
    const Tensor& zval = z->value();

    for (int c = 0; c < channels; ++c) {
      ChannelParams cp;
      std::array<double*, kPriorLayers> cgm, cgb;
      std::array<double*, kPriorLayers - 1> cgt;
      for (int i = 0; i < kPriorLayers; ++i) {
        const int msize = kPriorWidths[i] * kPriorWidths[i + 1];
        cp.m[i] = sp_m[i].data() + c * msize;
        cp.b[i] = raw.biases[i]->data() + c * kPriorWidths[i + 1];
        cgm[i] = gm[i].data() + c * msize;
        cgb[i] = gb[i].data() + c * kPriorWidths[i + 1];
        if (i + 1 < kPriorLayers) {
          cp.t[i] = th[i].data() + c * kPriorWidths[i + 1];
          cgt[i] = gt[i].data() + c * kPriorWidths[i + 1];
        }
      }
      auto backprop = [&](const LogitTrace& tr, double dlogit) -> double {
        std::array<double, kMaxWidth> gh{dlogit, 0.0, 0.0};
        for (int layer = kPriorLayers - 1; layer >= 0; --layer) {
          const int in = kPriorWidths[layer], out = kPriorWidths[layer + 1];
          std::array<double, kMaxWidth> gpre{};
          if (layer + 1 < kPriorLayers) {
            for (int r = 0; r < out; ++r) {
              const double t = std::tanh(tr.pre[layer][r]);
              gpre[r] = gh[r] * (1.0 + cp.t[layer][r] * (1.0 - t * t));
              cgt[layer][r] += gh[r] * t;
            }
          } else {
            gpre = gh;
          }
          std::array<double, kMaxWidth> gin{};
          for (int r = 0; r < out; ++r) {
            cgb[layer][r] += gpre[r];
            for (int col = 0; col < in; ++col) {
              cgm[layer][r * in + col] += gpre[r] * tr.h[layer][col];
              gin[col] += cp.m[layer][r * in + col] * gpre[r];
            }
          }
          gh = gin;
        }
        return gh[0];
      };
      for (size_t k = 0; k < plane; ++k) {
        const size_t idx = c * plane + k;
        const double v = zval[idx];
        LogitTrace tlo, thi;
        const double lo = EvalLogit(cp, v - 0.5, &tlo);
        const double hi = EvalLogit(cp, v + 0.5, &thi);
        const double s = (lo + hi > 0.0) ? -1.0 : 1.0;
        const double shi = Sigmoid(s * hi), slo = Sigmoid(s * lo);
        const double mass = std::abs(shi - slo);
        if (!(mass > kLikelihoodFloor)) continue;
        const double dmass = -g[idx] / (mass * std::numbers::ln2);
        const double dhi = dmass * shi * (1.0 - shi);
        const double dlo = -dmass * slo * (1.0 - slo);
        const double dx = backprop(thi, dhi) + backprop(tlo, dlo);
        if (dz) (*dz)[idx] += dx;
      }
    }
    for (int i = 0; i < kPriorLayers; ++i) {
      const nn::Var& pm = pp[i];
      if (pm->requires_grad) {
        Tensor& d = pm->MutableGrad();
        for (size_t k = 0; k < d.size(); ++k) d[k] += gm[i][k] * Sigmoid(pm->value()[k]);
      }
      const nn::Var& pb = pp[kPriorLayers + i];
      if (pb->requires_grad) {
        Tensor& d = pb->MutableGrad();
        for (size_t k = 0; k < d.size(); ++k) d[k] += gb[i][k];
      }
    }
    for (int i = 0; i + 1 < kPriorLayers; ++i) {
      const nn::Var& pf = pp[2 * kPriorLayers + i];
      if (pf->requires_grad) {
        Tensor& d = pf->MutableGrad();
        for (size_t k = 0; k < d.size(); ++k) d[k] += gt[i][k] * (1.0 - th[i][k] * th[i][k]);
      }
    }
  });
}

}  // namespace scic::entropy
