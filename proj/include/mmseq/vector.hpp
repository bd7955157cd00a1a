// Copyright 2026 The mmseq Authors
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

#ifndef MMSEQ_VECTOR_HPP_
#define MMSEQ_VECTOR_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmseq/error.hpp"

namespace mmseq {

// Dense real vector tagged with its role so that feature vectors and
// parameter-space gradients cannot be mixed up.
template <class Tag>
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit DenseVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  const std::vector<double>& values() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  DenseVector& operator+=(const DenseVector& other) {
    check_same_size(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }

  DenseVector& operator-=(const DenseVector& other) {
    check_same_size(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
  }

  DenseVector& operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
  }

  // this += c * other
  void add_scaled(const DenseVector& other, double c) {
    check_same_size(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += c * other.values_[i];
  }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend DenseVector operator+(DenseVector a, const DenseVector& b) { return a += b; }
  friend DenseVector operator-(DenseVector a, const DenseVector& b) { return a -= b; }
  friend DenseVector operator*(double c, DenseVector a) { return a *= c; }
  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  void check_same_size(const DenseVector& other) const {
    require(other.size() == size(), ErrorCode::kShapeMismatch,
            "vector size mismatch: " + std::to_string(size()) + " vs " +
                std::to_string(other.size()));
  }

  std::vector<double> values_;
};

struct FeatureTag {};
struct GradientTag {};

using FeatureVector = DenseVector<FeatureTag>;
using GradientVector = DenseVector<GradientTag>;

inline double dot(const FeatureVector& a, const FeatureVector& b) {
  require(a.size() == b.size(), ErrorCode::kShapeMismatch,
          "feature dimension mismatch: " + std::to_string(a.size()) + " vs " +
              std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(const FeatureVector& a) { return dot(a, a); }

}  // namespace mmseq

#endif  // MMSEQ_VECTOR_HPP_
