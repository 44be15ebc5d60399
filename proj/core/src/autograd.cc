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

#include <Eigen/Core>
#include <cmath>
#include <unordered_set>

#include "conv_kernels.h"
#include "scic/entropy_models.h"
#include "scic/error.h"

namespace scic::nn {
namespace {

thread_local bool g_grad_enabled = true;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMapMat = Eigen::Map<const RowMat>;
using MapMat = Eigen::Map<RowMat>;

bool NeedsGrad(const Var& v) { return v && v->requires_grad; }

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.SameShape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.ShapeString() + " vs " +
                     b.ShapeString());
  }
}

double Softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double SigmoidScalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor& Node::MutableGrad() {
  if (grad_sink) return *grad_sink;
  if (grad.empty()) grad = Tensor(value().shape());
  return grad;
}

bool GradEnabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var MakeResult(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->owned = std::move(value);
  if (g_grad_enabled) {
    for (const Var& p : parents) {
      if (NeedsGrad(p)) {
        node->requires_grad = true;
        break;
      }
    }
  }
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return node;
}

Var Constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->owned = std::move(value);
  return node;
}

Var ConstantRef(const Tensor& value) {
  auto node = std::make_shared<Node>();
  node->external = &value;
  return node;
}

Var Param(Parameter& p) {
  auto node = std::make_shared<Node>();
  node->external = &p.value;
  if (g_grad_enabled) {
    node->requires_grad = true;
    node->grad_sink = &p.grad;
  }
  return node;
}

Var Conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  const Tensor* b = bias ? &bias->value() : nullptr;
  Tensor out = internal::Conv2dForward(x->value(), weight->value(), b, stride, pad);
  return MakeResult(std::move(out), {x, weight, bias}, [=](Node& self) {
    internal::Conv2dBackward(x->value(), weight->value(), self.Grad(), stride, pad,
                             NeedsGrad(x) ? &x->MutableGrad() : nullptr,
                             NeedsGrad(weight) ? &weight->MutableGrad() : nullptr,
                             NeedsGrad(bias) ? &bias->MutableGrad() : nullptr);
  });
}

Var ConvTranspose2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad,
                    int output_pad) {
  const Tensor* b = bias ? &bias->value() : nullptr;
  Tensor out =
      internal::ConvTranspose2dForward(x->value(), weight->value(), b, stride, pad, output_pad);
  return MakeResult(std::move(out), {x, weight, bias}, [=](Node& self) {
    internal::ConvTranspose2dBackward(x->value(), weight->value(), self.Grad(), stride, pad,
                                      NeedsGrad(x) ? &x->MutableGrad() : nullptr,
                                      NeedsGrad(weight) ? &weight->MutableGrad() : nullptr,
                                      NeedsGrad(bias) ? &bias->MutableGrad() : nullptr);
  });
}

Var Gdn(const Var& x, const Var& beta_raw, const Var& gamma_raw, bool inverse) {
  const Tensor& xv = x->value();
  const int c = xv.dim(0);
  const int p = xv.dim(1) * xv.dim(2);
  if (beta_raw->value().size() != static_cast<size_t>(c) ||
      gamma_raw->value().size() != static_cast<size_t>(c) * c) {
    throw ShapeError("gdn parameter shape mismatch");
  }
  RowMat gamma = ConstMapMat(gamma_raw->value().data(), c, c).array().square();
  Eigen::VectorXd beta(c);
  for (int i = 0; i < c; ++i) {
    const double b = beta_raw->value()[i];
    beta[i] = b * b + kGdnBetaMin;
    if (!(beta[i] > 0.0)) throw InvariantViolation("gdn beta not positive");
  }
  ConstMapMat xm(xv.data(), c, p);
  RowMat norm = gamma * xm.array().square().matrix();
  norm.colwise() += beta;
  Tensor out(xv.shape());
  MapMat om(out.data(), c, p);
  if (inverse) {
    om = xm.array() * norm.array().sqrt();
  } else {
    om = xm.array() * norm.array().rsqrt();
  }
  auto norm_shared = std::make_shared<RowMat>(std::move(norm));
  return MakeResult(std::move(out), {x, beta_raw, gamma_raw}, [=](Node& self) {
    ConstMapMat g(self.Grad().data(), c, p);
    ConstMapMat xm2(x->value().data(), c, p);
    const RowMat& n = *norm_shared;
    // q = dL/dnorm
    RowMat q;
    if (inverse) {
      q = (g.array() * xm2.array() * 0.5 * n.array().rsqrt()).matrix();
    } else {
      q = (g.array() * xm2.array() * -0.5 * n.array().rsqrt() / n.array()).matrix();
    }
    if (NeedsGrad(x)) {
      MapMat dx(x->MutableGrad().data(), c, p);
      const RowMat gamma_l = ConstMapMat(gamma_raw->value().data(), c, c).array().square();
      RowMat back = gamma_l.transpose() * q;
      if (inverse) {
        dx.array() += g.array() * n.array().sqrt() + 2.0 * xm2.array() * back.array();
      } else {
        dx.array() += g.array() * n.array().rsqrt() + 2.0 * xm2.array() * back.array();
      }
    }
    if (NeedsGrad(beta_raw)) {
      Tensor& db = beta_raw->MutableGrad();
      for (int i = 0; i < c; ++i) db[i] += q.row(i).sum() * 2.0 * beta_raw->value()[i];
    }
    if (NeedsGrad(gamma_raw)) {
      RowMat dgamma = q * xm2.array().square().matrix().transpose();
      MapMat dg(gamma_raw->MutableGrad().data(), c, c);
      dg.array() += dgamma.array() * 2.0 * ConstMapMat(gamma_raw->value().data(), c, c).array();
    }
  });
}

Var Relu(const Var& x) {
  Tensor out = x->value();
  for (double& v : out.storage()) v = v > 0.0 ? v : 0.0;
  return MakeResult(std::move(out), {x}, [=](Node& self) {
    Tensor& dx = x->MutableGrad();
    const Tensor& xv = x->value();
    const Tensor& g = self.Grad();
    for (size_t i = 0; i < dx.size(); ++i) {
      if (xv[i] > 0.0) dx[i] += g[i];
    }
  });
}

Var Sigmoid(const Var& x) {
  Tensor out = x->value();
  for (double& v : out.storage()) v = SigmoidScalar(v);
  auto self_value = std::make_shared<Tensor>(out);
  return MakeResult(std::move(out), {x}, [=](Node& self) {
    Tensor& dx = x->MutableGrad();
    const Tensor& g = self.Grad();
    for (size_t i = 0; i < dx.size(); ++i) {
      const double s = (*self_value)[i];
      dx[i] += g[i] * s * (1.0 - s);
    }
  });
}

Var ScaleFromRaw(const Var& x) {
  Tensor out = x->value();
  for (double& v : out.storage()) v = entropy::kScaleMin + Softplus(v);
  return MakeResult(std::move(out), {x}, [=](Node& self) {
    Tensor& dx = x->MutableGrad();
    const Tensor& xv = x->value();
    const Tensor& g = self.Grad();
    for (size_t i = 0; i < dx.size(); ++i) dx[i] += g[i] * SigmoidScalar(xv[i]);
  });
}

Var Add(const Var& a, const Var& b) {
  RequireSameShape(a->value(), b->value(), "add");
  Tensor out = a->value();
  const Tensor& bv = b->value();
  for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return MakeResult(std::move(out), {a, b}, [=](Node& self) {
    const Tensor& g = self.Grad();
    if (NeedsGrad(a)) {
      Tensor& da = a->MutableGrad();
      for (size_t i = 0; i < g.size(); ++i) da[i] += g[i];
    }
    if (NeedsGrad(b)) {
      Tensor& db = b->MutableGrad();
      for (size_t i = 0; i < g.size(); ++i) db[i] += g[i];
    }
  });
}

Var Sub(const Var& a, const Var& b) {
  RequireSameShape(a->value(), b->value(), "sub");
  Tensor out = a->value();
  const Tensor& bv = b->value();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return MakeResult(std::move(out), {a, b}, [=](Node& self) {
    const Tensor& g = self.Grad();
    if (NeedsGrad(a)) {
      Tensor& da = a->MutableGrad();
      for (size_t i = 0; i < g.size(); ++i) da[i] += g[i];
    }
    if (NeedsGrad(b)) {
      Tensor& db = b->MutableGrad();
      for (size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
    }
  });
}

Var Scale(const Var& x, double s) {
  Tensor out = x->value();
  for (double& v : out.storage()) v *= s;
  return MakeResult(std::move(out), {x}, [=](Node& self) {
    Tensor& dx = x->MutableGrad();
    const Tensor& g = self.Grad();
    for (size_t i = 0; i < dx.size(); ++i) dx[i] += g[i] * s;
  });
}

Var SliceChannels(const Var& x, int begin, int end) {
  Tensor out = x->value().Channels(begin, end);
  const size_t offset = static_cast<size_t>(begin) * x->value().dim(1) * x->value().dim(2);
  return MakeResult(std::move(out), {x}, [=](Node& self) {
    Tensor& dx = x->MutableGrad();
    const Tensor& g = self.Grad();
    for (size_t i = 0; i < g.size(); ++i) dx[offset + i] += g[i];
  });
}

Var ConcatChannels(std::span<const Var> parts) {
  std::vector<const Tensor*> values;
  values.reserve(parts.size());
  for (const Var& p : parts) values.push_back(&p->value());
  Tensor out = scic::ConcatChannels(values);
  std::vector<Var> parents(parts.begin(), parts.end());
  return MakeResult(std::move(out), parents, [parents](Node& self) {
    const Tensor& g = self.Grad();
    size_t offset = 0;
    for (const Var& p : parents) {
      const size_t n = p->value().size();
      if (NeedsGrad(p)) {
        Tensor& dp = p->MutableGrad();
        for (size_t i = 0; i < n; ++i) dp[i] += g[offset + i];
      }
      offset += n;
    }
  });
}

Var GaussianBits(const Var& v, const Var& mean, const Var& scale) {
  RequireSameShape(v->value(), mean->value(), "gaussian bits");
  RequireSameShape(v->value(), scale->value(), "gaussian bits");
  const size_t n = v->value().size();
  Tensor out(v->value().shape());
  for (size_t i = 0; i < n; ++i) {
    const double s = scale->value()[i];
    if (!(s >= entropy::kScaleMin)) {
      throw InvariantViolation("gaussian scale below floor");
    }
    out[i] = entropy::GaussianBinBits(v->value()[i], mean->value()[i], s);
  }
  return MakeResult(std::move(out), {v, mean, scale}, [=](Node& self) {
    const Tensor& g = self.Grad();
    Tensor* dv = NeedsGrad(v) ? &v->MutableGrad() : nullptr;
    Tensor* dm = NeedsGrad(mean) ? &mean->MutableGrad() : nullptr;
    Tensor* ds = NeedsGrad(scale) ? &scale->MutableGrad() : nullptr;
    for (size_t i = 0; i < n; ++i) {
      const double d = v->value()[i] - mean->value()[i];
      const double s = scale->value()[i];
      const double ad = std::abs(d);
      const double a = (0.5 - ad) / s, b = (-0.5 - ad) / s;
      const double mass = entropy::StdNormalCdf(a) - entropy::StdNormalCdf(b);
      if (!(mass > entropy::kLikelihoodFloor)) continue;
      const double pa = entropy::StdNormalPdf(a), pb = entropy::StdNormalPdf(b);
      const double dbits_dmass = -g[i] / (mass * std::numbers::ln2);
      const double sign = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
      const double dmass_dd = sign * (pb - pa) / s;
      const double dmass_ds = (b * pb - a * pa) / s;
      if (dv) (*dv)[i] += dbits_dmass * dmass_dd;
      if (dm) (*dm)[i] -= dbits_dmass * dmass_dd;
      if (ds) (*ds)[i] += dbits_dmass * dmass_ds;
    }
  });
}

Var Sum(const Var& x) {
  double s = 0.0;
  for (double v : x->value().values()) s += v;
  return MakeResult(Tensor({1}, s), {x}, [=](Node& self) {
    const double g = self.Grad()[0];
    Tensor& dx = x->MutableGrad();
    for (double& d : dx.storage()) d += g;
  });
}

Var MeanSquaredError(const Var& a, const Var& b) {
  RequireSameShape(a->value(), b->value(), "mse");
  const Tensor& av = a->value();
  const Tensor& bv = b->value();
  const size_t n = av.size();
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = av[i] - bv[i];
    s += d * d;
  }
  return MakeResult(Tensor({1}, s / static_cast<double>(n)), {a, b}, [=](Node& self) {
    const double k = 2.0 * self.Grad()[0] / static_cast<double>(n);
    Tensor* da = NeedsGrad(a) ? &a->MutableGrad() : nullptr;
    Tensor* db = NeedsGrad(b) ? &b->MutableGrad() : nullptr;
    for (size_t i = 0; i < n; ++i) {
      const double d = k * (a->value()[i] - b->value()[i]);
      if (da) (*da)[i] += d;
      if (db) (*db)[i] -= d;
    }
  });
}

void Backward(const Var& root, double seed) {
  if (root->value().size() != 1) throw ShapeError("backward root must be scalar");
  if (!root->requires_grad) return;
  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent && parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->MutableGrad()[0] += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && node->has_grad()) node->backward(*node);
  }
}

}  // namespace scic::nn
