#include "ipseq/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ipseq {

namespace {

double evaluate(Graph& g, Var loss) {
  g.invalidate();
  g.forward();
  const double v = g.value(loss)[0];
  if (!std::isfinite(v)) throw std::domain_error("grad_check: loss is not finite");
  return v;
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& loss_fn, ParamStore& params, double eps, double tolerance,
                           double floor) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");

  Graph g(&params);
  Var loss = loss_fn(g);
  if (g.shape(loss) != Shape{1, 1}) throw ShapeError("grad_check loss", {g.shape(loss)});
  evaluate(g, loss);

  params.zero_grad();
  g.backward(loss, Tensor::scalar(1.0), &params);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& entry = params.entry(pi);
    ParamGradError err{.name = entry.name};
    auto values = entry.value.mutable_data();
    const auto analytic = entry.grad.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = evaluate(g, loss);
      values[i] = saved - eps;
      const double down = evaluate(g, loss);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double abs_err = std::abs(analytic[i] - numeric);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      err.max_absolute_error = std::max(err.max_absolute_error, abs_err);
      err.max_relative_error = std::max(err.max_relative_error, abs_err / denom);
    }
    report.max_relative_error = std::max(report.max_relative_error, err.max_relative_error);
    report.params.push_back(std::move(err));
  }
  report.passed = report.max_relative_error <= tolerance;
  return report;
}

}  // namespace ipseq
