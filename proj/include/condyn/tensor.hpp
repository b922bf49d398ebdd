#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "condyn/errors.hpp"

namespace condyn::diff {

// Row-major dimension list. All dimensions are positive.
using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

inline std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

// Dense f64 tensor with value semantics. A default-constructed Tensor is an
// empty placeholder (used internally for unallocated gradients) and must not
// be fed to operations.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double v);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor vec(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return v_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  bool empty() const { return v_.empty(); }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }

  // Value of a single-element tensor.
  double item() const;
  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<double> v_;
};

inline bool same_shape(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape();
}

}  // namespace condyn::diff
