#include "hdrf/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hdrf/error.hpp"
#include "hdrf/ops.hpp"

namespace hdrf {
namespace {

void record(GradCheckReport& report, double analytic, double numeric, double tol,
            const std::string& where) {
  ++report.checked;
  if (!std::isfinite(analytic) || !std::isfinite(numeric)) {
    report.passed = false;
    if (report.failure.empty()) {
      std::ostringstream os;
      os << "non-finite gradient at " << where << ": analytic " << analytic << ", numeric "
         << numeric;
      report.failure = os.str();
    }
    return;
  }
  const double err = gradient_relative_error(analytic, numeric);
  if (err >= report.max_rel_error) {
    report.max_rel_error = err;
    std::ostringstream os;
    os.precision(10);
    os << where << ": analytic " << analytic << ", numeric " << numeric;
    report.worst = os.str();
  }
  if (err > tol) report.passed = false;
}

}  // namespace

double gradient_relative_error(double analytic, double numeric) {
  const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
  return std::fabs(analytic - numeric) / scale;
}

GradCheckReport grad_check(const DifferentiableOp& op, const std::vector<Tensor>& inputs,
                           double step, double tol, std::uint64_t seed) {
  std::vector<Tensor> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& input : inputs) {
    for (double v : input.data()) {
      if (!std::isfinite(v)) throw ContractViolation("grad_check: inputs must be finite");
    }
    Tensor leaf = input.clone();
    leaf.set_requires_grad(true);
    leaves.push_back(leaf);
  }

  Tensor projection;
  {
    NoGradGuard no_grad;
    const Tensor probe = op(leaves);
    Rng rng(seed);
    std::vector<double> r(probe.numel());
    for (double& v : r) v = rng.normal();
    projection = Tensor::from_data(probe.shape(), std::move(r));
  }
  const auto objective = [&](const std::vector<Tensor>& args) {
    return sum(mul(op(args), projection));
  };

  backward(objective(leaves));

  GradCheckReport report;
  NoGradGuard no_grad;
  for (std::size_t t = 0; t < leaves.size(); ++t) {
    std::vector<double> analytic(leaves[t].numel(), 0.0);
    if (leaves[t].has_grad()) {
      std::copy(leaves[t].grad().begin(), leaves[t].grad().end(), analytic.begin());
    }
    auto values = leaves[t].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + step;
      const double plus = objective(leaves).item();
      values[i] = original - step;
      const double minus = objective(leaves).item();
      values[i] = original;
      record(report, analytic[i], (plus - minus) / (2.0 * step), tol,
             "input " + std::to_string(t) + " [" + std::to_string(i) + "]");
    }
  }
  return report;
}

GradCheckReport grad_check_elements(const std::function<Tensor()>& loss,
                                    const std::vector<Tensor>& leaves,
                                    const std::vector<ElementRef>& elements, double step,
                                    double tol) {
  std::vector<Tensor> handles = leaves;
  for (Tensor& leaf : handles) {
    if (!leaf.requires_grad() || !leaf.is_leaf()) {
      throw ContractViolation("grad_check_elements: every tensor must be a grad leaf");
    }
    leaf.zero_grad();
  }
  backward(loss());

  GradCheckReport report;
  NoGradGuard no_grad;
  for (const ElementRef& ref : elements) {
    Tensor& leaf = handles.at(ref.tensor);
    const double analytic = leaf.has_grad() ? leaf.grad()[ref.index] : 0.0;
    auto values = leaf.mutable_data();
    const double original = values[ref.index];
    values[ref.index] = original + step;
    const double plus = loss().item();
    values[ref.index] = original - step;
    const double minus = loss().item();
    values[ref.index] = original;
    const std::string label = leaf.name().empty() ? "tensor " + std::to_string(ref.tensor)
                                                  : leaf.name();
    record(report, analytic, (plus - minus) / (2.0 * step), tol,
           label + " [" + std::to_string(ref.index) + "]");
  }
  for (Tensor& leaf : handles) leaf.zero_grad();
  return report;
}

const RegisteredOp* find_registered_op(std::string_view name) {
  for (const RegisteredOp& op : op_registry()) {
    if (op.name == name) return &op;
  }
  return nullptr;
}

}  // namespace hdrf
