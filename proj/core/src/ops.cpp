#include "hdrf/ops.hpp"

#include <algorithm>
#include <cmath>

#include "hdrf/error.hpp"

namespace hdrf {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ContractViolation(std::string(op) + ": shape mismatch " +
                            shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return make_result(a.shape(), std::move(out), "add", {a, b}, [](const BackwardArgs& args) {
    for (const Tensor& input : args.inputs) {
      auto g = grad_sink(input);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += args.grad_out[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return make_result(a.shape(), std::move(out), "sub", {a, b}, [](const BackwardArgs& args) {
    auto ga = grad_sink(args.inputs[0]);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += args.grad_out[i];
    auto gb = grad_sink(args.inputs[1]);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= args.grad_out[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return make_result(a.shape(), std::move(out), "mul", {a, b}, [](const BackwardArgs& args) {
    const auto x = args.inputs[0].data();
    const auto y = args.inputs[1].data();
    auto ga = grad_sink(args.inputs[0]);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += args.grad_out[i] * y[i];
    auto gb = grad_sink(args.inputs[1]);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += args.grad_out[i] * x[i];
  });
}

Tensor affine(const Tensor& a, double scale, double shift) {
  std::vector<double> out(a.numel());
  const auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * x[i] + shift;
  return make_result(a.shape(), std::move(out), "affine", {a},
                     [scale](const BackwardArgs& args) {
                       auto g = grad_sink(args.inputs[0]);
                       for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * args.grad_out[i];
                     });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  const auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return make_result(a.shape(), std::move(out), "relu", {a}, [](const BackwardArgs& args) {
    const auto x = args.inputs[0].data();
    auto g = grad_sink(args.inputs[0]);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > 0.0) g[i] += args.grad_out[i];
    }
  });
}

Tensor sigmoid(const Tensor& a, double steepness) {
  std::vector<double> out(a.numel());
  const auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(steepness * x[i]);
  return make_result(a.shape(), std::move(out), "sigmoid", {a},
                     [steepness](const BackwardArgs& args) {
                       auto g = grad_sink(args.inputs[0]);
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const double s = args.out[i];
                         g[i] += args.grad_out[i] * steepness * s * (1.0 - s);
                       }
                     });
}

Tensor abs(const Tensor& a) {
  std::vector<double> out(a.numel());
  const auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(x[i]);
  return make_result(a.shape(), std::move(out), "abs", {a}, [](const BackwardArgs& args) {
    const auto x = args.inputs[0].data();
    auto g = grad_sink(args.inputs[0]);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > 0.0) {
        g[i] += args.grad_out[i];
      } else if (x[i] < 0.0) {
        g[i] -= args.grad_out[i];
      }
    }
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result({}, {total}, "sum", {a}, [](const BackwardArgs& args) {
    auto g = grad_sink(args.inputs[0]);
    for (double& v : g) v += args.grad_out[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ContractViolation("mean of an empty tensor");
  double total = 0.0;
  for (double v : a.data()) total += v;
  const double n = static_cast<double>(a.numel());
  return make_result({}, {total / n}, "mean", {a}, [n](const BackwardArgs& args) {
    auto g = grad_sink(args.inputs[0]);
    for (double& v : g) v += args.grad_out[0] / n;
  });
}

Tensor softmax(const Tensor& a) {
  if (a.dim() == 0) throw ContractViolation("softmax needs at least one axis");
  const std::size_t width = a.shape().back();
  const std::size_t rows = width == 0 ? 0 : a.numel() / width;
  std::vector<double> out(a.numel());
  const auto x = a.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = x.data() + r * width;
    double* dst = out.data() + r * width;
    const double peak = *std::max_element(row, row + width);
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      dst[j] = std::exp(row[j] - peak);
      total += dst[j];
    }
    for (std::size_t j = 0; j < width; ++j) dst[j] /= total;
  }
  return make_result(a.shape(), std::move(out), "softmax", {a},
                     [rows, width](const BackwardArgs& args) {
                       auto g = grad_sink(args.inputs[0]);
                       if (g.empty()) return;
                       for (std::size_t r = 0; r < rows; ++r) {
                         const std::size_t base = r * width;
                         double dot = 0.0;
                         for (std::size_t j = 0; j < width; ++j) {
                           dot += args.out[base + j] * args.grad_out[base + j];
                         }
                         for (std::size_t j = 0; j < width; ++j) {
                           g[base + j] += args.out[base + j] * (args.grad_out[base + j] - dot);
                         }
                       }
                     });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractViolation("concat of zero tensors");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t leading = 0;
  for (const Tensor& part : parts) {
    if (part.dim() == 0 || Shape(part.shape().begin() + 1, part.shape().end()) != tail) {
      throw ContractViolation("concat: trailing shapes differ");
    }
    leading += part.size(0);
  }
  std::vector<double> out;
  out.reserve(leading * shape_numel(tail));
  std::vector<std::size_t> offsets;
  for (const Tensor& part : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), part.data().begin(), part.data().end());
  }
  Shape shape = tail;
  shape.insert(shape.begin(), leading);
  return make_result(std::move(shape), std::move(out), "concat", parts,
                     [offsets](const BackwardArgs& args) {
                       for (std::size_t p = 0; p < args.inputs.size(); ++p) {
                         auto g = grad_sink(args.inputs[p]);
                         for (std::size_t i = 0; i < g.size(); ++i) {
                           g[i] += args.grad_out[offsets[p] + i];
                         }
                       }
                     });
}

Tensor slice(const Tensor& a, std::size_t begin, std::size_t count) {
  if (a.dim() == 0 || begin + count > a.size(0)) {
    throw ContractViolation("slice: range out of bounds");
  }
  const std::size_t stride = a.numel() / a.size(0);
  Shape shape = a.shape();
  shape[0] = count;
  const auto x = a.data();
  std::vector<double> out(x.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                          x.begin() + static_cast<std::ptrdiff_t>((begin + count) * stride));
  const std::size_t offset = begin * stride;
  return make_result(std::move(shape), std::move(out), "slice", {a},
                     [offset](const BackwardArgs& args) {
                       auto g = grad_sink(args.inputs[0]);
                       if (g.empty()) return;
                       for (std::size_t i = 0; i < args.grad_out.size(); ++i) {
                         g[offset + i] += args.grad_out[i];
                       }
                     });
}

Tensor l1_distance(const Tensor& a, const Tensor& b) { return mean(abs(sub(a, b))); }

}  // namespace hdrf
