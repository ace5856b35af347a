#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "ez/error.hpp"

namespace ez {

// Minimal dense row-major array of doubles. This is deliberately not a
// linear-algebra library; it is the carrier type for parameters, gradients,
// features, and waveforms.
class NdArray {
 public:
  NdArray() = default;

  explicit NdArray(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(numel_of(shape_), 0.0) {}

  NdArray(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != numel_of(shape_))
      raise(ErrorKind::SchemaError, "NdArray data size does not match shape");
  }

  static NdArray vector(std::vector<double> values) {
    std::vector<std::size_t> shape{values.size()};
    return NdArray(std::move(shape), std::move(values));
  }

  static NdArray matrix(std::size_t rows, std::size_t cols) {
    return NdArray({rows, cols});
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }

  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& at(std::size_t i) { return data_[i]; }
  double at(std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool same_shape(const NdArray& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const NdArray& a, const NdArray& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }
  friend bool operator!=(const NdArray& a, const NdArray& b) { return !(a == b); }

  static std::size_t numel_of(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, std::size_t b) { return a * b; });
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace ez
