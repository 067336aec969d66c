#include "swe/params.hpp"

#include <cmath>

#include "swe/error.hpp"

namespace swe::nn {

int ParamStore::add(std::string name, ad::Tensor init) {
  require(find(name) < 0, "duplicate parameter name: " + name);
  entries_.push_back({std::move(name), std::move(init)});
  return static_cast<int>(entries_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

Binder::Binder(ad::Graph& graph, const ParamStore& store, bool with_grad)
    : graph_(graph),
      store_(store),
      with_grad_(with_grad),
      vars_(static_cast<std::size_t>(store.count())) {}

Binder::Binder(ad::Graph& graph, const ParamStore& store,
               const std::vector<ad::Var>& preset)
    : graph_(graph), store_(store), with_grad_(false), vars_(preset) {
  require(preset.size() == static_cast<std::size_t>(store.count()),
          "binder: preset var count does not match parameter count");
  for (int id = 0; id < store.count(); ++id) {
    require(preset[static_cast<std::size_t>(id)].graph == &graph,
            "binder: preset var from another graph");
    require(preset[static_cast<std::size_t>(id)].value().same_shape(store.value(id)),
            "binder: preset var shape mismatch for " + store.name(id));
    bound_.push_back(id);
  }
}

ad::Var Binder::operator[](int param_id) {
  require(param_id >= 0 && param_id < store_.count(),
          "binder: parameter id out of range");
  ad::Var& v = vars_[static_cast<std::size_t>(param_id)];
  if (v.graph == nullptr) {
    v = graph_.leaf(store_.value(param_id), with_grad_);
    bound_.push_back(param_id);
  }
  return v;
}

ad::Tensor fan_in_init(std::vector<int> shape, int fan_in, Rng& rng) {
  require(fan_in > 0, "fan_in_init: fan_in must be positive");
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  ad::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace swe::nn
