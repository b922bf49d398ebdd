#include "condyn/tensor.hpp"

#include <cmath>

namespace condyn::diff {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  out += "]";
  return out;
}

namespace {
void check_dims(const Shape& s) {
  for (auto d : s)
    if (d == 0) throw ShapeError("zero dimension in shape " + shape_str(s));
}
}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_dims(shape_);
  v_.assign(shape_size(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), v_(std::move(values)) {
  check_dims(shape_);
  if (v_.size() != shape_size(shape_))
    throw ShapeError("tensor has " + std::to_string(v_.size()) +
                     " values but shape " + shape_str(shape_));
}

Tensor Tensor::full(Shape shape, double v) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = v;
  return t;
}

Tensor Tensor::vec(std::vector<double> values) {
  Shape s{values.size()};
  return Tensor(std::move(s), std::move(values));
}

double Tensor::item() const {
  if (v_.size() != 1)
    throw ShapeError("item() on tensor of shape " + shape_str(shape_));
  return v_[0];
}

bool Tensor::all_finite() const {
  for (double x : v_)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace condyn::diff
