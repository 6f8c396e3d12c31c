#include "hdrf/attention.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "hdrf/error.hpp"
#include "hdrf/linalg.hpp"
#include "im2col.hpp"

namespace hdrf {
namespace {

struct AttentionState {
  detail::PatchGeometry geom{};
  std::size_t count = 0;             // N patches
  std::vector<double> cols;          // D x N raw patches
  std::vector<double> unit;          // D x N normalized patches
  std::vector<double> norms;         // N, |patch| (without epsilon)
  std::vector<double> softmax;       // N x N
  std::vector<double> valid;         // N, 1 - M
  std::vector<double> weighted;      // N x N
  std::vector<double> coverage;      // H x W
  bool degenerate = false;
};

void validate(const Tensor& feature, const Tensor& mask, const AttentionOptions& options) {
  if (feature.dim() != 3) throw ContractViolation("attention expects C x H x W feature");
  if (mask.shape() != Shape{1, feature.size(1), feature.size(2)}) {
    throw ContractViolation("attention: mask " + shape_string(mask.shape()) +
                            " does not match feature " + shape_string(feature.shape()));
  }
  if (options.patch % 2 == 0) throw ContractViolation("attention: patch size must be odd");
}

std::shared_ptr<AttentionState> compute_scores(const Tensor& feature, const Tensor& mask,
                                               const AttentionOptions& options) {
  auto state = std::make_shared<AttentionState>();
  const std::size_t height = feature.size(1);
  const std::size_t width = feature.size(2);
  const std::size_t n = height * width;
  state->geom = {feature.size(0), height, width, options.patch, 1, 1, options.patch / 2,
                 height, width};
  state->count = n;
  const std::size_t depth = state->geom.rows();

  state->valid.resize(n);
  double valid_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    state->valid[i] = 1.0 - mask.data()[i];
    valid_total += state->valid[i];
  }
  state->degenerate = valid_total < options.degenerate_threshold;

  state->cols.resize(depth * n);
  detail::im2col(feature.data(), state->geom, state->cols);
  state->norms.assign(n, 0.0);
  for (std::size_t d = 0; d < depth; ++d) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = state->cols[d * n + i];
      state->norms[i] += v * v;
    }
  }
  for (double& v : state->norms) v = std::sqrt(v);
  state->unit.resize(depth * n);
  for (std::size_t d = 0; d < depth; ++d) {
    for (std::size_t i = 0; i < n; ++i) {
      state->unit[d * n + i] = state->cols[d * n + i] / (state->norms[i] + options.epsilon);
    }
  }

  // Cosine similarities, then a row-wise softmax of temperature * s.
  state->softmax.resize(n * n);
  gemm(true, false, n, n, depth, options.temperature, state->unit, state->unit, 0.0,
       state->softmax);
  for (std::size_t q = 0; q < n; ++q) {
    double* row = state->softmax.data() + q * n;
    const double peak = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      row[s] = std::exp(row[s] - peak);
      total += row[s];
    }
    for (std::size_t s = 0; s < n; ++s) row[s] /= total;
  }
  state->weighted.resize(n * n);
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t s = 0; s < n; ++s) {
      state->weighted[q * n + s] = state->softmax[q * n + s] * state->valid[s];
    }
  }

  const long radius = static_cast<long>(options.patch / 2);
  state->coverage.resize(n);
  for (std::size_t y = 0; y < height; ++y) {
    const long rows = std::min<long>(static_cast<long>(height) - 1, static_cast<long>(y) + radius) -
                      std::max<long>(0, static_cast<long>(y) - radius) + 1;
    for (std::size_t x = 0; x < width; ++x) {
      const long cols = std::min<long>(static_cast<long>(width) - 1, static_cast<long>(x) + radius) -
                        std::max<long>(0, static_cast<long>(x) - radius) + 1;
      state->coverage[y * width + x] = static_cast<double>(rows * cols);
    }
  }
  return state;
}

}  // namespace

AttentionScores attention_scores(const Tensor& feature, const Tensor& mask,
                                 const AttentionOptions& options) {
  validate(feature, mask, options);
  auto state = compute_scores(feature, mask, options);
  return {state->count, std::move(state->softmax), std::move(state->weighted),
          state->degenerate};
}

Tensor contextual_attention(const Tensor& feature, const Tensor& mask,
                            const AttentionOptions& options,
                            std::vector<std::string>* diagnostics) {
  validate(feature, mask, options);
  auto state = compute_scores(feature, mask, options);
  const std::size_t n = state->count;
  const std::size_t depth = state->geom.rows();

  if (state->degenerate) {
    if (diagnostics != nullptr) {
      diagnostics->push_back(
          "contextual_attention: every source patch is saturated; output set to zero");
    }
    return make_result(feature.shape(), std::vector<double>(feature.numel(), 0.0),
                       "contextual_attention", {feature, mask}, [](const BackwardArgs&) {});
  }

  // Rt[d, q] = sum_s cols[d, s] * weighted[q, s]: each query's patch rebuilt
  // from the sources; folding Rt back is a transposed convolution.
  std::vector<double> rebuilt(depth * n);
  gemm(false, true, depth, n, n, 1.0, state->cols, state->weighted, 0.0, rebuilt);
  std::vector<double> out(feature.numel(), 0.0);
  detail::col2im(rebuilt, state->geom, out);
  const std::size_t plane = n;
  for (std::size_t c = 0; c < feature.size(0); ++c) {
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] /= state->coverage[i];
  }

  const double temperature = options.temperature;
  const double epsilon = options.epsilon;
  return make_result(
      feature.shape(), std::move(out), "contextual_attention", {feature, mask},
      [state, temperature, epsilon](const BackwardArgs& args) {
        const std::size_t n = state->count;
        const std::size_t depth = state->geom.rows();
        auto g_feature = grad_sink(args.inputs[0]);
        auto g_mask = grad_sink(args.inputs[1]);

        std::vector<double> scaled(args.grad_out.begin(), args.grad_out.end());
        for (std::size_t c = 0; c < state->geom.channels; ++c) {
          for (std::size_t i = 0; i < n; ++i) scaled[c * n + i] /= state->coverage[i];
        }
        std::vector<double> g_rebuilt(depth * n);
        detail::im2col(scaled, state->geom, g_rebuilt);

        // d/d weighted[q, s] = sum_d g_rebuilt[d, q] * cols[d, s]
        std::vector<double> g_weighted(n * n);
        gemm(true, false, n, n, depth, 1.0, g_rebuilt, state->cols, 0.0, g_weighted);

        std::vector<double> g_cols;
        if (!g_feature.empty()) {
          g_cols.assign(depth * n, 0.0);
          gemm(false, false, depth, n, n, 1.0, g_rebuilt, state->weighted, 0.0, g_cols);
        }

        if (!g_mask.empty()) {
          for (std::size_t s = 0; s < n; ++s) {
            double total = 0.0;
            for (std::size_t q = 0; q < n; ++q) {
              total += g_weighted[q * n + s] * state->softmax[q * n + s];
            }
            g_mask[s] -= total;
          }
        }
        if (g_feature.empty()) return;

        // Softmax backward into g_logits (reusing g_weighted's storage).
        std::vector<double>& g_logits = g_weighted;
        for (std::size_t q = 0; q < n; ++q) {
          double* g = g_logits.data() + q * n;
          const double* a = state->softmax.data() + q * n;
          double dot = 0.0;
          for (std::size_t s = 0; s < n; ++s) {
            g[s] *= state->valid[s];
            dot += g[s] * a[s];
          }
          for (std::size_t s = 0; s < n; ++s) g[s] = temperature * a[s] * (g[s] - dot);
        }
        // Similarity is symmetric in its two patch arguments.
        std::vector<double> g_sym(n * n);
        for (std::size_t q = 0; q < n; ++q) {
          for (std::size_t s = 0; s < n; ++s) {
            g_sym[q * n + s] = g_logits[q * n + s] + g_logits[s * n + q];
          }
        }
        std::vector<double> g_unit(depth * n);
        gemm(false, false, depth, n, n, 1.0, state->unit, g_sym, 0.0, g_unit);

        for (std::size_t i = 0; i < n; ++i) {
          const double norm = state->norms[i];
          const double r = norm + epsilon;
          double dot = 0.0;
          for (std::size_t d = 0; d < depth; ++d) dot += g_unit[d * n + i] * state->cols[d * n + i];
          const double radial = norm > 0.0 ? dot / (r * r * norm) : 0.0;
          for (std::size_t d = 0; d < depth; ++d) {
            g_cols[d * n + i] += g_unit[d * n + i] / r - state->cols[d * n + i] * radial;
          }
        }
        detail::col2im(g_cols, state->geom, g_feature);
      });
}

Tensor complete(const Tensor& coarse, const Tensor& fine, const Tensor& mask) {
  if (coarse.shape() != fine.shape() || coarse.dim() != 3 ||
      mask.shape() != Shape{1, coarse.size(1), coarse.size(2)}) {
    throw ContractViolation("complete: shapes " + shape_string(coarse.shape()) + ", " +
                            shape_string(fine.shape()) + ", " + shape_string(mask.shape()) +
                            " are incompatible");
  }
  const std::size_t channels = coarse.size(0);
  const std::size_t plane = coarse.size(1) * coarse.size(2);
  const auto hc = coarse.data();
  const auto hf = fine.data();
  const auto m = mask.data();
  std::vector<double> out(coarse.numel());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      out[c * plane + i] = (1.0 - m[i]) * hc[c * plane + i] + m[i] * hf[c * plane + i];
    }
  }
  return make_result(coarse.shape(), std::move(out), "complete", {coarse, fine, mask},
                     [channels, plane](const BackwardArgs& args) {
                       const auto hc = args.inputs[0].data();
                       const auto hf = args.inputs[1].data();
                       const auto m = args.inputs[2].data();
                       auto gc = grad_sink(args.inputs[0]);
                       auto gf = grad_sink(args.inputs[1]);
                       auto gm = grad_sink(args.inputs[2]);
                       for (std::size_t c = 0; c < channels; ++c) {
                         for (std::size_t i = 0; i < plane; ++i) {
                           const double g = args.grad_out[c * plane + i];
                           if (!gc.empty()) gc[c * plane + i] += (1.0 - m[i]) * g;
                           if (!gf.empty()) gf[c * plane + i] += m[i] * g;
                           if (!gm.empty()) {
                             gm[i] += g * (hf[c * plane + i] - hc[c * plane + i]);
                           }
                         }
                       }
                     });
}

Tensor hard_saturation_mask(const Tensor& coarse, double tau) {
  if (coarse.dim() != 3) throw ContractViolation("hard_saturation_mask expects C x H x W");
  const std::size_t plane = coarse.size(1) * coarse.size(2);
  std::vector<double> out(plane, 0.0);
  const auto v = coarse.data();
  for (std::size_t i = 0; i < plane; ++i) {
    double peak = v[i];
    for (std::size_t c = 1; c < coarse.size(0); ++c) peak = std::max(peak, v[c * plane + i]);
    out[i] = peak >= tau ? 1.0 : 0.0;
  }
  return Tensor::from_data({1, coarse.size(1), coarse.size(2)}, std::move(out));
}

}  // namespace hdrf
