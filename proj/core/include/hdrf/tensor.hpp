#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hdrf {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tensor;

// Arguments handed to a node's vector-Jacobian product. `out` and `grad_out`
// belong to the tensor the node produced; gradients are accumulated into the
// inputs through grad_sink().
struct BackwardArgs {
  std::span<const double> out;
  std::span<const double> grad_out;
  const std::vector<Tensor>& inputs;
};

using BackwardFn = std::function<void(const BackwardArgs&)>;

// One recorded operation on the tape.
struct Node {
  std::string op;
  std::vector<Tensor> inputs;
  BackwardFn backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool detached = false;
  std::shared_ptr<Node> node;
  std::string name;
};

// Dense row-major float64 array with an optional gradient slot. Copies are
// shallow handles onto the same storage; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor from_data(Shape shape, std::vector<double> data);

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const;
  std::size_t dim() const { return shape().size(); }
  std::size_t size(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool value = true);
  bool is_leaf() const;
  bool is_detached() const;

  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  const std::string& name() const;
  Tensor& set_name(std::string name);

  const std::shared_ptr<Node>& node() const;

  // Same values, no history. Marked so backward() can report it when such a
  // tensor sits on a path that was expected to carry gradient.
  Tensor detach() const;
  Tensor clone() const;
  Tensor reshape(Shape shape) const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  TensorImpl* impl() const { return impl_.get(); }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<TensorImpl> impl_;

  friend Tensor make_result(Shape, std::vector<double>, std::string,
                            std::vector<Tensor>, BackwardFn);
};

// Records `op` on the tape if gradient mode is on and any input requires
// grad; otherwise returns a plain tensor.
Tensor make_result(Shape shape, std::vector<double> data, std::string op,
                   std::vector<Tensor> inputs, BackwardFn backward);

// Accumulation buffer for an input inside a backward rule. Empty when the
// input does not take gradients.
std::span<double> grad_sink(const Tensor& input);

bool grad_mode_enabled();

// Disables tape recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

struct BackwardReport {
  std::size_t nodes_visited = 0;
  std::vector<std::string> diagnostics;
};

// Reverse-mode sweep from a scalar root. Leaf gradients accumulate across
// calls; intermediate gradients are released after use.
BackwardReport backward(const Tensor& root);

}  // namespace hdrf
