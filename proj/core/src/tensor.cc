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

#include "scic/tensor.h"

#include <algorithm>
#include <sstream>

#include "scic/error.h"

namespace scic {

size_t NumElements(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative tensor dimension");
    n *= static_cast<size_t>(d);
  }
  return n;
}

std::string ShapeToString(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, const std::vector<double>& data)
    : Tensor(std::move(shape), AlignedVector(data.begin(), data.end())) {}

Tensor::Tensor(std::vector<int> shape, AlignedVector data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != NumElements(shape_)) {
    throw ShapeError("tensor data size does not match shape " + ShapeToString(shape_));
  }
}

void Tensor::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::Reshape(std::vector<int> shape) {
  if (NumElements(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + ShapeString() + " to " + ShapeToString(shape));
  }
  shape_ = std::move(shape);
}

std::string Tensor::ShapeString() const { return ShapeToString(shape_); }

Tensor Tensor::Channels(int begin, int end) const {
  if (rank() != 3 || begin < 0 || end > shape_[0] || begin > end) {
    throw ShapeError("invalid channel range on " + ShapeString());
  }
  const size_t plane = static_cast<size_t>(shape_[1]) * shape_[2];
  Tensor out({end - begin, shape_[1], shape_[2]});
  std::copy(data_.begin() + begin * plane, data_.begin() + end * plane, out.data_.begin());
  return out;
}

Tensor ConcatChannels(std::span<const Tensor* const> parts) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const int h = parts[0]->dim(1), w = parts[0]->dim(2);
  int c = 0;
  for (const Tensor* t : parts) {
    if (t->rank() != 3 || t->dim(1) != h || t->dim(2) != w) {
      throw ShapeError("concat spatial mismatch");
    }
    c += t->dim(0);
  }
  Tensor out({c, h, w});
  double* dst = out.data();
  for (const Tensor* t : parts) dst = std::copy(t->data(), t->data() + t->size(), dst);
  return out;
}

}  // namespace scic
