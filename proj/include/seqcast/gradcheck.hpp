#pragma once

#include <functional>

#include "seqcast/autodiff.hpp"

namespace seqcast {

// Compares analytic gradients of a scalar-valued forward pass against central
// differences over every element of every parameter. The forward closure must
// rebuild the graph from the current parameter values on each call.
//
// Returns max over elements of
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
double grad_check(const std::function<Value()>& forward, ParamStore& params,
                  double step = 1e-5);

} // namespace seqcast
