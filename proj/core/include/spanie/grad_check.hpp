#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spanie/graph.hpp"

namespace spanie {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
  bool passed = true;
};

// Builds the loss on a fresh graph. Must be a pure function of the parameter values.
using LossBuilder = std::function<Var(Graph&)>;

// Compares backward() against central finite differences for every element
// of `params`. Relative error per element is
// |g_a − g_n| / max(|g_a|, |g_n|, 1e-8); `passed` reports max < tolerance.
GradCheckResult grad_check(const LossBuilder& loss_fn, const std::vector<Parameter*>& params,
                           double epsilon = 1e-5, double tolerance = 1e-4);

}  // namespace spanie
