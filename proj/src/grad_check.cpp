#include "swe/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "swe/error.hpp"

namespace swe::ad {

namespace {

double evaluate(const ScalarFn& f, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& t : inputs) leaves.push_back(g.leaf(t));
  Var loss = f(g, leaves);
  require(loss.value().size() == 1,
          "grad_check: f must return a scalar, got shape " +
              shape_str(loss.value().shape()));
  return loss.value()[0];
}

}  // namespace

double grad_check(const ScalarFn& f, const std::vector<Tensor>& inputs,
                  double eps) {
  require(eps > 0.0, "grad_check: eps must be positive");

  double v1 = evaluate(f, inputs);
  double v2 = evaluate(f, inputs);
  require(v1 == v2,
          "grad_check: f is not deterministic (two evaluations differ); "
          "disable dropout/randomness first");

  // Analytic gradients.
  Graph g;
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& t : inputs) leaves.push_back(g.leaf(t, true));
  Var loss = f(g, leaves);
  g.backward(loss);

  double max_rel_err = 0.0;
  std::vector<Tensor> work = inputs;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const Tensor& analytic = g.grad(leaves[t]);
    for (std::size_t i = 0; i < work[t].size(); ++i) {
      double orig = work[t][i];
      work[t][i] = orig + eps;
      double plus = evaluate(f, work);
      work[t][i] = orig - eps;
      double minus = evaluate(f, work);
      work[t][i] = orig;
      double numeric = (plus - minus) / (2.0 * eps);
      double a = analytic[i];
      double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_rel_err = std::max(max_rel_err, std::abs(a - numeric) / denom);
    }
  }
  return max_rel_err;
}

}  // namespace swe::ad
