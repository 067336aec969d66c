#pragma once

#include <string>
#include <vector>

#include "swe/graph.hpp"
#include "swe/rng.hpp"
#include "swe/tensor.hpp"

namespace swe::nn {

// Named, ordered collection of learnable tensors. Layers hold indices into
// the store; the optimizer and the checkpoint writer iterate it.
class ParamStore {
 public:
  int add(std::string name, ad::Tensor init);

  ad::Tensor& value(int id) { return entries_[static_cast<std::size_t>(id)].value; }
  const ad::Tensor& value(int id) const { return entries_[static_cast<std::size_t>(id)].value; }
  const std::string& name(int id) const { return entries_[static_cast<std::size_t>(id)].name; }
  int find(const std::string& name) const;  // -1 if absent

  int count() const { return static_cast<int>(entries_.size()); }
  std::size_t total_size() const;

 private:
  struct Entry {
    std::string name;
    ad::Tensor value;
  };
  std::vector<Entry> entries_;
};

// Binds store values as leaves of one graph, one leaf per parameter, so a
// parameter used at several graph sites accumulates its gradient in one
// place (the LSTM reuses its weights every step, for example).
class Binder {
 public:
  Binder(ad::Graph& graph, const ParamStore& store, bool with_grad = true);
  // Binds against caller-provided leaves instead of the stored values, one
  // per parameter id; lets a gradient check perturb parameters directly.
  Binder(ad::Graph& graph, const ParamStore& store,
         const std::vector<ad::Var>& preset);

  ad::Var operator[](int param_id);
  ad::Graph& graph() { return graph_; }

  // Parameter ids bound so far, in first-use order.
  const std::vector<int>& bound_ids() const { return bound_; }
  ad::Var var_of(int param_id) const { return vars_[static_cast<std::size_t>(param_id)]; }

 private:
  ad::Graph& graph_;
  const ParamStore& store_;
  bool with_grad_;
  std::vector<ad::Var> vars_;
  std::vector<int> bound_;
};

// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
ad::Tensor fan_in_init(std::vector<int> shape, int fan_in, Rng& rng);

}  // namespace swe::nn
