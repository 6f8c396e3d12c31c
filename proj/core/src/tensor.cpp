#include "hdrf/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "hdrf/error.hpp"

namespace hdrf {
namespace {

thread_local bool g_grad_mode = true;

void require_defined(const TensorImpl* impl) {
  if (impl == nullptr) throw ContractViolation("operation on an undefined tensor");
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  auto impl = std::make_shared<TensorImpl>();
  impl->data.assign(shape_numel(shape), value);
  impl->shape = std::move(shape);
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value) { return full({}, value); }

Tensor Tensor::from_data(Shape shape, std::vector<double> data) {
  if (shape_numel(shape) != data.size()) {
    throw ContractViolation("shape " + shape_string(shape) + " does not match " +
                            std::to_string(data.size()) + " values");
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  return Tensor(std::move(impl));
}

const Shape& Tensor::shape() const {
  require_defined(impl_.get());
  return impl_->shape;
}

std::size_t Tensor::size(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) throw ContractViolation("axis out of range");
  return s[axis];
}

std::size_t Tensor::numel() const { return data().size(); }

std::span<const double> Tensor::data() const {
  require_defined(impl_.get());
  return impl_->data;
}

std::span<double> Tensor::mutable_data() {
  require_defined(impl_.get());
  return impl_->data;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractViolation("item() on tensor of shape " + shape_string(shape()));
  }
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool value) {
  require_defined(impl_.get());
  if (impl_->node && !value) {
    throw ContractViolation("cannot clear requires_grad on a non-leaf tensor");
  }
  impl_->requires_grad = value;
  return *this;
}

bool Tensor::is_leaf() const { return impl_ && !impl_->node; }
bool Tensor::is_detached() const { return impl_ && impl_->detached; }

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  require_defined(impl_.get());
  return impl_->grad;
}

void Tensor::zero_grad() {
  require_defined(impl_.get());
  impl_->grad.clear();
}

const std::string& Tensor::name() const {
  require_defined(impl_.get());
  return impl_->name;
}

Tensor& Tensor::set_name(std::string name) {
  require_defined(impl_.get());
  impl_->name = std::move(name);
  return *this;
}

const std::shared_ptr<Node>& Tensor::node() const {
  require_defined(impl_.get());
  return impl_->node;
}

Tensor Tensor::detach() const {
  require_defined(impl_.get());
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->detached = impl_->requires_grad || impl_->node != nullptr;
  impl->name = impl_->name;
  return Tensor(std::move(impl));
}

Tensor Tensor::clone() const {
  Tensor copy = detach();
  copy.impl_->detached = false;
  return copy;
}

Tensor Tensor::reshape(Shape new_shape) const {
  if (shape_numel(new_shape) != numel()) {
    throw ContractViolation("cannot reshape " + shape_string(shape()) + " to " +
                            shape_string(new_shape));
  }
  std::vector<double> values(data().begin(), data().end());
  return make_result(std::move(new_shape), std::move(values), "reshape", {*this},
                     [](const BackwardArgs& args) {
                       auto g = grad_sink(args.inputs[0]);
                       if (g.empty()) return;
                       for (std::size_t i = 0; i < g.size(); ++i) g[i] += args.grad_out[i];
                     });
}

Tensor make_result(Shape shape, std::vector<double> data, std::string op,
                   std::vector<Tensor> inputs, BackwardFn backward) {
  Tensor out = Tensor::from_data(std::move(shape), std::move(data));
  if (!g_grad_mode) return out;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor& t) { return t.requires_grad(); });
  if (!any) return out;
  auto node = std::make_shared<Node>();
  node->op = std::move(op);
  node->inputs = std::move(inputs);
  node->backward = std::move(backward);
  out.impl_->node = std::move(node);
  out.impl_->requires_grad = true;
  return out;
}

std::span<double> grad_sink(const Tensor& input) {
  TensorImpl* impl = input.impl();
  if (impl == nullptr || !impl->requires_grad) return {};
  if (impl->grad.empty()) impl->grad.assign(impl->data.size(), 0.0);
  return impl->grad;
}

bool grad_mode_enabled() { return g_grad_mode; }

NoGradGuard::NoGradGuard() : previous_(g_grad_mode) { g_grad_mode = false; }
NoGradGuard::~NoGradGuard() { g_grad_mode = previous_; }

BackwardReport backward(const Tensor& root) {
  if (!root.defined() || root.numel() != 1) {
    throw ContractViolation("backward() requires a scalar root, got " +
                            (root.defined() ? shape_string(root.shape()) : "undefined"));
  }
  BackwardReport report;
  if (!root.requires_grad()) {
    report.diagnostics.push_back("root does not require grad; nothing to do");
    return report;
  }

  // Iterative post-order DFS; inputs visited in declaration order so the
  // resulting schedule is a pure function of the graph.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> visited;
  struct Frame {
    TensorImpl* impl;
    std::size_t next_input;
  };
  std::vector<Frame> stack{{root.impl(), 0}};
  visited.insert(root.impl());
  while (!stack.empty()) {
    Frame& frame = stack.back();
    const auto& node = frame.impl->node;
    if (node && frame.next_input < node->inputs.size()) {
      const std::size_t index = frame.next_input++;
      const Tensor& input = node->inputs[index];
      TensorImpl* child = input.impl();
      if (child->detached) {
        report.diagnostics.push_back("missing gradient: input " + std::to_string(index) +
                                     " of '" + node->op + "'" +
                                     (child->name.empty() ? "" : " ('" + child->name + "')") +
                                     " is detached");
      }
      if (child->requires_grad && visited.insert(child).second) {
        stack.push_back({child, 0});
      }
      continue;
    }
    order.push_back(frame.impl);
    stack.pop_back();
  }

  TensorImpl* root_impl = root.impl();
  if (root_impl->grad.empty()) root_impl->grad.assign(1, 0.0);
  root_impl->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* impl = *it;
    if (!impl->node) continue;
    ++report.nodes_visited;
    if (!impl->grad.empty()) {
      impl->node->backward(BackwardArgs{impl->data, impl->grad, impl->node->inputs});
    }
    impl->grad.clear();
    impl->grad.shrink_to_fit();
  }
  return report;
}

}  // namespace hdrf
