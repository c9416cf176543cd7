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

#include "nn/array.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace vts {

namespace {
int64_t ShapeSize(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    VTS_CHECK_ARG(d >= 0, "negative dimension in shape");
    n *= d;
  }
  return n;
}

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;
}  // namespace

Array::Array(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(ShapeSize(shape_)), 0.0);
}

Array Array::Full(std::vector<int> shape, double value) {
  Array a(std::move(shape));
  a.Fill(value);
  return a;
}

Array Array::FromVector(const std::vector<double>& v) {
  Array a({static_cast<int>(v.size())});
  a.data_ = v;
  return a;
}

Array Array::FromData(std::vector<int> shape, std::vector<double> data) {
  Array a;
  VTS_CHECK_ARG(ShapeSize(shape) == static_cast<int64_t>(data.size()),
                "shape does not match data length");
  a.shape_ = std::move(shape);
  a.data_ = std::move(data);
  return a;
}

Array Array::Reshaped(std::vector<int> shape) const {
  VTS_CHECK_ARG(ShapeSize(shape) == size(), "reshape changes element count");
  Array a;
  a.shape_ = std::move(shape);
  a.data_ = data_;
  return a;
}

void Array::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Array::AddInPlace(const Array& other) {
  VTS_CHECK_ARG(size() == other.size(), "size mismatch in AddInPlace");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

void Array::ScaleInPlace(double s) {
  for (double& x : data_) x *= s;
}

void Array::Axpy(double a, const Array& x) {
  VTS_CHECK_ARG(size() == x.size(), "size mismatch in Axpy");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += a * x.data_[i];
}

double Array::MaxAbs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::fabs(x));
  return m;
}

double Array::Sum() const {
  double s = 0.0;
  for (double x : data_) s += x;
  return s;
}

bool Array::AllFinite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Array MatMul(const Array& a, const Array& b) {
  VTS_CHECK_ARG(a.ndim() == 2 && b.ndim() == 2, "MatMul expects 2-D inputs");
  VTS_CHECK_ARG(a.dim(1) == b.dim(0), "MatMul inner dimension mismatch");
  Array c({a.dim(0), b.dim(1)});
  ECMap ma(a.data(), a.dim(0), a.dim(1));
  ECMap mb(b.data(), b.dim(0), b.dim(1));
  EMap mc(c.data(), c.dim(0), c.dim(1));
  mc.noalias() = ma * mb;
  return c;
}

void MatMulAccum(const Array& a, bool trans_a, const Array& b, bool trans_b,
                 Array* out) {
  const int ar = trans_a ? a.dim(1) : a.dim(0);
  const int ac = trans_a ? a.dim(0) : a.dim(1);
  const int br = trans_b ? b.dim(1) : b.dim(0);
  const int bc = trans_b ? b.dim(0) : b.dim(1);
  VTS_CHECK_ARG(ac == br, "MatMulAccum inner dimension mismatch");
  VTS_CHECK_ARG(out->dim(0) == ar && out->dim(1) == bc,
                "MatMulAccum output shape mismatch");
  ECMap ma(a.data(), a.dim(0), a.dim(1));
  ECMap mb(b.data(), b.dim(0), b.dim(1));
  EMap mc(out->data(), ar, bc);
  if (!trans_a && !trans_b) {
    mc.noalias() += ma * mb;
  } else if (trans_a && !trans_b) {
    mc.noalias() += ma.transpose() * mb;
  } else if (!trans_a && trans_b) {
    mc.noalias() += ma * mb.transpose();
  } else {
    mc.noalias() += ma.transpose() * mb.transpose();
  }
}

Array Transposed2d(const Array& a) {
  VTS_CHECK_ARG(a.ndim() == 2, "Transposed2d expects a matrix");
  Array t({a.dim(1), a.dim(0)});
  for (int i = 0; i < a.dim(0); ++i) {
    for (int j = 0; j < a.dim(1); ++j) t.at(j, i) = a.at(i, j);
  }
  return t;
}

double LogSumExp(const double* v, int n) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

double SafeLog(double p) {
  if (p <= 0.0) return kLogFloor;
  return std::max(std::log(p), kLogFloor);
}

}  // namespace vts
