#include "swe/tensor.hpp"

#include <cmath>
#include <sstream>

#include "swe/error.hpp"

namespace swe::ad {

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    require(d > 0, "tensor dimensions must be positive, got " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require(shape_size(shape_) == data_.size(),
          "tensor data length " + std::to_string(data_.size()) +
              " does not match shape " + shape_str(shape_));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  for (auto& x : t.data_) x = v;
  return t;
}

int Tensor::last_dim() const {
  require(!shape_.empty(), "last_dim on rank-0 tensor");
  return shape_.back();
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

}  // namespace swe::ad
