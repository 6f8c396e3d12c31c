#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "hdrf/rng.hpp"
#include "hdrf/tensor.hpp"

namespace hdrf {

struct GradCheckReport {
  bool passed = true;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;    // "input 1 [37]: analytic ..., numeric ..."
  std::string failure;  // set when a gradient is non-finite
};

// Relative error |a - n| / max(|a|, |n|, 1e-6).
double gradient_relative_error(double analytic, double numeric);

using DifferentiableOp = std::function<Tensor(const std::vector<Tensor>&)>;

// Compares reverse-mode gradients of sum(op(inputs) * R), R a fixed random
// projection drawn from `seed`, against central differences with `step`.
GradCheckReport grad_check(const DifferentiableOp& op, const std::vector<Tensor>& inputs,
                           double step = 1e-5, double tol = 1e-4, std::uint64_t seed = 0);

struct ElementRef {
  std::size_t tensor;
  std::size_t index;
};

// Same comparison for selected elements of leaf tensors feeding a scalar
// loss. `loss` must rebuild the graph from the current leaf values.
GradCheckReport grad_check_elements(const std::function<Tensor()>& loss,
                                    const std::vector<Tensor>& leaves,
                                    const std::vector<ElementRef>& elements, double step,
                                    double tol);

// Differentiable operators with input generators that keep clear of kinks
// (ReLU/abs zeros, integer bilinear sampling positions).
struct RegisteredOp {
  std::string name;
  std::function<std::vector<Tensor>(Rng&)> make_inputs;
  DifferentiableOp apply;
};

const std::vector<RegisteredOp>& op_registry();
const RegisteredOp* find_registered_op(std::string_view name);

}  // namespace hdrf
