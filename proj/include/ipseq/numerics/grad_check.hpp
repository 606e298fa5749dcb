#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ipseq/numerics/graph.hpp"
#include "ipseq/numerics/param_store.hpp"

namespace ipseq {

struct ParamGradError {
  std::string name;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
};

struct GradCheckReport {
  std::vector<ParamGradError> params;
  double max_relative_error = 0.0;
  bool passed = false;
};

// Builds a scalar (1x1) loss on the given graph, reading parameters through
// Graph::param().
using LossBuilder = std::function<Var(Graph&)>;

// Compares backward() gradients against central finite differences
// (f(p+eps) - f(p-eps)) / 2eps for every element of every parameter.
//
// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor);
// the floor keeps components whose true gradient is ~0 from dividing
// round-off by round-off. Parameters are restored bit-exactly afterwards.
GradCheckReport grad_check(const LossBuilder& loss, ParamStore& params, double eps, double tolerance,
                           double floor = 1e-6);

}  // namespace ipseq
