#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace swe::ad {

// Dense row-major tensor of doubles. Rank 1 and 2 cover everything the
// models need; higher ranks are legal but nothing constructs them.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double v);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return data_.size(); }

  // 2-D views: rank-1 tensors count as a single row.
  int rows() const { return rank() == 2 ? shape_[0] : 1; }
  int cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 1); }
  int last_dim() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols() + c]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::string shape_str(const std::vector<int>& shape);
std::size_t shape_size(const std::vector<int>& shape);

}  // namespace swe::ad
