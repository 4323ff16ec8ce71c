#include "spanie/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "spanie/errors.hpp"

namespace spanie {

namespace {

double evaluate(const LossBuilder& loss_fn) {
  Graph g;
  const double v = g.scalar(loss_fn(g));
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss at perturbed point");
  return v;
}

}  // namespace

GradCheckResult grad_check(const LossBuilder& loss_fn, const std::vector<Parameter*>& params,
                           double epsilon, double tolerance) {
  if (!(epsilon > 0.0)) throw DomainError("grad_check: epsilon must be positive");

  for (auto* p : params) p->zero_grad();
  {
    Graph g;
    Var loss = loss_fn(g);
    if (!std::isfinite(g.scalar(loss))) throw NumericError("grad_check: non-finite loss");
    g.backward(loss);
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto* p = params[pi];
    auto values = p->value.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + epsilon;
      const double plus = evaluate(loss_fn);
      values[i] = saved - epsilon;
      const double minus = evaluate(loss_fn);
      values[i] = saved;

      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = analytic[pi][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++result.checked;
      if (rel > result.max_relative_error || result.checked == 1) {
        result.max_relative_error = rel;
        result.worst_parameter = p->name;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  result.passed = result.max_relative_error < tolerance;
  return result;
}

}  // namespace spanie
