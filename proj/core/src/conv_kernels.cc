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

#include "conv_kernels.h"

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#include "scic/error.h"

namespace scic::nn::internal {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

// Column blocks keep the im2col buffer near 16 MiB regardless of image size.
int BlockColumns(int rows, int total) {
  const int budget = (1 << 21) / std::max(rows, 1);
  return std::clamp(budget, 64, std::max(total, 64));
}

// Gathers image patches for grid positions [p0, p0 + n) into a row-major
// (C*K*K) x n matrix. Grid position (gy, gx) reads image pixel
// (gy*stride - pad + ky, gx*stride - pad + kx); out-of-range reads are zero.
void Im2Col(const double* img, int channels, int ih, int iw, int k, int stride, int pad, int gw,
            int p0, int n, double* cols) {
  for (int c = 0; c < channels; ++c) {
    const double* plane = img + static_cast<size_t>(c) * ih * iw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols + (static_cast<size_t>((c * k + ky) * k + kx)) * n;
        int gy = p0 / gw, gx = p0 % gw;
        for (int j = 0; j < n; ++j) {
          const int y = gy * stride - pad + ky;
          const int x = gx * stride - pad + kx;
          row[j] =
              (y >= 0 && y < ih && x >= 0 && x < iw) ? plane[static_cast<size_t>(y) * iw + x] : 0.0;
          if (++gx == gw) {
            gx = 0;
            ++gy;
          }
        }
      }
    }
  }
}

// Adjoint of Im2Col: scatters-and-adds the columns back into the image.
void Col2Im(const double* cols, int channels, int ih, int iw, int k, int stride, int pad, int gw,
            int p0, int n, double* img) {
  for (int c = 0; c < channels; ++c) {
    double* plane = img + static_cast<size_t>(c) * ih * iw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols + (static_cast<size_t>((c * k + ky) * k + kx)) * n;
        int gy = p0 / gw, gx = p0 % gw;
        for (int j = 0; j < n; ++j) {
          const int y = gy * stride - pad + ky;
          const int x = gx * stride - pad + kx;
          if (y >= 0 && y < ih && x >= 0 && x < iw) {
            plane[static_cast<size_t>(y) * iw + x] += row[j];
          }
          if (++gx == gw) {
            gx = 0;
            ++gy;
          }
        }
      }
    }
  }
}

void CheckRank(const Tensor& t, size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + " has unexpected shape " + t.ShapeString());
  }
}

void AddBias(const Tensor& bias, Tensor& out) {
  const size_t plane = static_cast<size_t>(out.dim(1)) * out.dim(2);
  for (int c = 0; c < out.dim(0); ++c) {
    double* p = out.data() + c * plane;
    const double b = bias[c];
    for (size_t i = 0; i < plane; ++i) p[i] += b;
  }
}

void AccumulateBiasGrad(const Tensor& dout, Tensor& dbias) {
  const size_t plane = static_cast<size_t>(dout.dim(1)) * dout.dim(2);
  for (int c = 0; c < dout.dim(0); ++c) {
    const double* p = dout.data() + c * plane;
    double s = 0.0;
    for (size_t i = 0; i < plane; ++i) s += p[i];
    dbias[c] += s;
  }
}

}  // namespace

int ConvOutputSize(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

int ConvTransposeOutputSize(int in, int kernel, int stride, int pad, int output_pad) {
  return (in - 1) * stride - 2 * pad + kernel + output_pad;
}

Tensor Conv2dForward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad) {
  CheckRank(x, 3, "conv input");
  CheckRank(w, 4, "conv weight");
  const int ci = x.dim(0), ih = x.dim(1), iw = x.dim(2);
  const int co = w.dim(0), k = w.dim(2);
  if (w.dim(1) != ci) throw ShapeError("conv channel mismatch");
  const int oh = ConvOutputSize(ih, k, stride, pad);
  const int ow = ConvOutputSize(iw, k, stride, pad);
  if (oh <= 0 || ow <= 0) throw ShapeError("conv input too small");
  const int rows = ci * k * k, total = oh * ow;
  Tensor out({co, oh, ow});
  const int block = BlockColumns(rows, total);
  AlignedVector cols(static_cast<size_t>(rows) * std::min(block, total));
  ConstMapMat wm(w.data(), co, rows);
  for (int p0 = 0; p0 < total; p0 += block) {
    const int n = std::min(block, total - p0);
    Im2Col(x.data(), ci, ih, iw, k, stride, pad, ow, p0, n, cols.data());
    StridedMap ob(out.data() + p0, co, n, Eigen::OuterStride<>(total));
    ob.noalias() = wm * ConstMapMat(cols.data(), rows, n);
  }
  if (bias && !bias->empty()) AddBias(*bias, out);
  return out;
}

void Conv2dBackward(const Tensor& x, const Tensor& w, const Tensor& dout, int stride, int pad,
                    Tensor* dx, Tensor* dw, Tensor* dbias) {
  const int ci = x.dim(0), ih = x.dim(1), iw = x.dim(2);
  const int co = w.dim(0), k = w.dim(2);
  const int ow = dout.dim(2);
  const int rows = ci * k * k, total = dout.dim(1) * ow;
  const int block = BlockColumns(rows, total);
  AlignedVector cols(static_cast<size_t>(rows) * std::min(block, total));
  ConstMapMat wm(w.data(), co, rows);
  for (int p0 = 0; p0 < total; p0 += block) {
    const int n = std::min(block, total - p0);
    ConstStridedMap db(dout.data() + p0, co, n, Eigen::OuterStride<>(total));
    if (dw) {
      Im2Col(x.data(), ci, ih, iw, k, stride, pad, ow, p0, n, cols.data());
      MapMat(dw->data(), co, rows).noalias() += db * ConstMapMat(cols.data(), rows, n).transpose();
    }
    if (dx) {
      MapMat(cols.data(), rows, n).noalias() = wm.transpose() * db;
      Col2Im(cols.data(), ci, ih, iw, k, stride, pad, ow, p0, n, dx->data());
    }
  }
  if (dbias) AccumulateBiasGrad(dout, *dbias);
}

Tensor ConvTranspose2dForward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride,
                              int pad, int output_pad) {
  CheckRank(x, 3, "deconv input");
  CheckRank(w, 4, "deconv weight");
  const int ci = x.dim(0), ih = x.dim(1), iw = x.dim(2);
  const int co = w.dim(1), k = w.dim(2);
  if (w.dim(0) != ci) throw ShapeError("deconv channel mismatch");
  const int oh = ConvTransposeOutputSize(ih, k, stride, pad, output_pad);
  const int ow = ConvTransposeOutputSize(iw, k, stride, pad, output_pad);
  const int rows = co * k * k, total = ih * iw;
  Tensor out({co, oh, ow});
  const int block = BlockColumns(rows, total);
  AlignedVector cols(static_cast<size_t>(rows) * std::min(block, total));
  ConstMapMat wm(w.data(), ci, rows);
  for (int p0 = 0; p0 < total; p0 += block) {
    const int n = std::min(block, total - p0);
    ConstStridedMap xb(x.data() + p0, ci, n, Eigen::OuterStride<>(total));
    MapMat(cols.data(), rows, n).noalias() = wm.transpose() * xb;
    Col2Im(cols.data(), co, oh, ow, k, stride, pad, iw, p0, n, out.data());
  }
  if (bias && !bias->empty()) AddBias(*bias, out);
  return out;
}

void ConvTranspose2dBackward(const Tensor& x, const Tensor& w, const Tensor& dout, int stride,
                             int pad, Tensor* dx, Tensor* dw, Tensor* dbias) {
  const int ci = x.dim(0), iw = x.dim(2);
  const int co = w.dim(1), k = w.dim(2);
  const int oh = dout.dim(1), ow = dout.dim(2);
  const int rows = co * k * k, total = x.dim(1) * iw;
  const int block = BlockColumns(rows, total);
  AlignedVector cols(static_cast<size_t>(rows) * std::min(block, total));
  ConstMapMat wm(w.data(), ci, rows);
  for (int p0 = 0; p0 < total; p0 += block) {
    const int n = std::min(block, total - p0);
    Im2Col(dout.data(), co, oh, ow, k, stride, pad, iw, p0, n, cols.data());
    ConstMapMat cm(cols.data(), rows, n);
    if (dx) {
      StridedMap dxb(dx->data() + p0, ci, n, Eigen::OuterStride<>(total));
      dxb.noalias() += wm * cm;
    }
    if (dw) {
      ConstStridedMap xb(x.data() + p0, ci, n, Eigen::OuterStride<>(total));
      MapMat(dw->data(), ci, rows).noalias() += xb * cm.transpose();
    }
  }
  if (dbias) AccumulateBiasGrad(dout, *dbias);
}

}  // namespace scic::nn::internal
