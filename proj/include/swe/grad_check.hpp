#pragma once

#include <functional>
#include <vector>

#include "swe/graph.hpp"

namespace swe::ad {

// Scalar-valued function of a fixed set of input tensors, expressed as a
// graph builder so it can be re-evaluated under perturbation.
using ScalarFn = std::function<Var(Graph&, const std::vector<Var>&)>;

// Central finite differences vs reverse-mode gradients, coordinate by
// coordinate. Returns the max relative error with denominator
// max(|analytic|, |numeric|, 1e-8). Throws if f evaluates to different
// values on two identical runs (stochastic f, e.g. dropout left on).
double grad_check(const ScalarFn& f, const std::vector<Tensor>& inputs,
                  double eps);

}  // namespace swe::ad
