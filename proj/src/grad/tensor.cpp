#include "srlfd/grad/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "srlfd/errors.hpp"

namespace srlfd::grad {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  for (auto d : shape_)
    if (d == 0) throw DimensionError("tensor dimensions must be positive: " + to_string(shape_));
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  for (auto d : shape_)
    if (d == 0) throw DimensionError("tensor dimensions must be positive: " + to_string(shape_));
  if (data_.size() != element_count(shape_))
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + to_string(shape_));
}

double Tensor::item() const {
  if (data_.size() != 1) throw DimensionError("item() on non-scalar tensor " + to_string(shape_));
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
  if (element_count(shape) != data_.size())
    throw DimensionError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  Tensor out = *this;
  out.shape_ = std::move(shape);
  return out;
}

}  // namespace srlfd::grad
