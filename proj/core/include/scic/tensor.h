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

#ifndef SCIC_TENSOR_H_
#define SCIC_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace scic {

// Cache-line aligned allocation. Vectorized kernels peel to packet
// boundaries, so a fixed base alignment keeps their summation order, and
// therefore every result, independent of where the heap places a buffer.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}
  T* allocate(size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, size_t) { ::operator delete(p, kAlign); }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

// Dense row-major tensor of doubles. Image-like tensors use the
// channel/height/width layout {C, H, W}; convolution weights use
// {C_out, C_in, K, K} (transposed convolutions {C_in, C_out, K, K}).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, const std::vector<double>& data);
  Tensor(std::vector<int> shape, AlignedVector data);
  Tensor(std::vector<int> shape, std::initializer_list<double> data)
      : Tensor(std::move(shape), AlignedVector(data)) {}

  const std::vector<int>& shape() const { return shape_; }
  int dim(size_t i) const { return shape_[i]; }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  AlignedVector& storage() { return data_; }
  const AlignedVector& storage() const { return data_; }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  // CHW accessors; only valid for rank-3 tensors.
  double& at(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }

  void Fill(double v);
  void Reshape(std::vector<int> shape);
  bool SameShape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string ShapeString() const;

  // Channel range [begin, end) of a CHW tensor.
  Tensor Channels(int begin, int end) const;

 private:
  std::vector<int> shape_;
  AlignedVector data_;
};

size_t NumElements(const std::vector<int>& shape);
std::string ShapeToString(const std::vector<int>& shape);

// Concatenates CHW tensors along the channel axis.
Tensor ConcatChannels(std::span<const Tensor* const> parts);

}  // namespace scic

#endif  // SCIC_TENSOR_H_
