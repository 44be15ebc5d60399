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

#ifndef SCIC_SRC_CONV_KERNELS_H_
#define SCIC_SRC_CONV_KERNELS_H_

#include "scic/tensor.h"

namespace scic::nn::internal {

int ConvOutputSize(int in, int kernel, int stride, int pad);
int ConvTransposeOutputSize(int in, int kernel, int stride, int pad, int output_pad);

// x {Ci,H,W}, w {Co,Ci,K,K}, bias {Co} or empty.
Tensor Conv2dForward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad);
// Accumulates into dx / dw / dbias when non-null.
void Conv2dBackward(const Tensor& x, const Tensor& w, const Tensor& dout, int stride, int pad,
                    Tensor* dx, Tensor* dw, Tensor* dbias);

// x {Ci,H,W}, w {Ci,Co,K,K}, bias {Co} or empty.
Tensor ConvTranspose2dForward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride,
                              int pad, int output_pad);
void ConvTranspose2dBackward(const Tensor& x, const Tensor& w, const Tensor& dout, int stride,
                             int pad, Tensor* dx, Tensor* dw, Tensor* dbias);

}  // namespace scic::nn::internal

#endif  // SCIC_SRC_CONV_KERNELS_H_
