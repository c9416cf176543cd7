// Copyright (c) 2026 The vtspeech authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VTSPEECH_NN_ARRAY_H_
#define VTSPEECH_NN_ARRAY_H_

#include <cstdint>
#include <vector>

#include "common/status.h"

namespace vts {

// Dense row-major tensor of doubles. Double precision throughout: the test
// suite checks gradients against central finite differences and dynamic
// programs against enumeration at 1e-9, which float cannot sustain.
class Array {
 public:
  Array() = default;
  explicit Array(std::vector<int> shape);

  static Array Zeros(std::vector<int> shape) { return Array(std::move(shape)); }
  static Array Full(std::vector<int> shape, double value);
  static Array FromVector(const std::vector<double>& v);
  // Row-major data interpreted under the given shape.
  static Array FromData(std::vector<int> shape, std::vector<double> data);

  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  double& at(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
  double at(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
  double& at(int i, int j, int k) {
    return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  double at(int i, int j, int k) const {
    return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }

  bool SameShape(const Array& other) const { return shape_ == other.shape_; }
  Array Reshaped(std::vector<int> shape) const;

  void Fill(double value);
  void AddInPlace(const Array& other);        // this += other
  void ScaleInPlace(double s);                // this *= s
  void Axpy(double a, const Array& x);        // this += a * x

  double MaxAbs() const;
  double Sum() const;
  bool AllFinite() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

// C = A(n x k) * B(k x m). Eigen-backed.
Array MatMul(const Array& a, const Array& b);
// C += A * B with optional transposes; used by backward passes.
void MatMulAccum(const Array& a, bool trans_a, const Array& b, bool trans_b,
                 Array* out);
Array Transposed2d(const Array& a);

double LogSumExp(const double* v, int n);

// log(p) with the documented -1e10 floor for vanishing probabilities.
constexpr double kLogFloor = -1e10;
constexpr double kLogZero = -1e30;  // DP "impossible" sentinel
double SafeLog(double p);

}  // namespace vts

#endif  // VTSPEECH_NN_ARRAY_H_
