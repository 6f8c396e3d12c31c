#include <cmath>

#include "hdrf/attention.hpp"
#include "hdrf/conv.hpp"
#include "hdrf/deform.hpp"
#include "hdrf/gradcheck.hpp"
#include "hdrf/losses.hpp"
#include "hdrf/ops.hpp"
#include "hdrf/radiometry.hpp"

namespace hdrf {
namespace {

constexpr double kKinkMargin = 0.05;

Tensor normal(Rng& rng, Shape shape, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) v = scale * rng.normal();
  return t;
}

Tensor uniform(Rng& rng, Shape shape, double lo, double hi) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) v = rng.uniform(lo, hi);
  return t;
}

// Normal draws pushed at least kKinkMargin away from zero.
Tensor off_zero(Rng& rng, Shape shape) {
  Tensor t = normal(rng, std::move(shape));
  for (double& v : t.mutable_data()) {
    if (std::fabs(v) < kKinkMargin) v = v < 0.0 ? v - kKinkMargin : v + kKinkMargin;
  }
  return t;
}

// Values whose fractional part stays in [0.1, 0.9], so bilinear sampling never
// sits on a lattice line.
Tensor off_lattice(Rng& rng, Shape shape, double lo, double hi) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) {
    v = std::floor(rng.uniform(lo, hi)) + rng.uniform(0.1, 0.9);
  }
  return t;
}

// Positive radiance pair whose tonemapped values differ by a clear margin.
std::vector<Tensor> radiance_pair(Rng& rng, Shape shape) {
  Tensor a = uniform(rng, shape, 0.05, 1.0);
  Tensor b = Tensor::zeros(shape);
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double factor = rng.uniform() < 0.5 ? rng.uniform(0.3, 0.7) : rng.uniform(1.5, 2.5);
    b.mutable_data()[i] = a.data()[i] * factor;
  }
  return {a, b};
}

// Positive image whose tonemapped neighbours all differ by at least `margin`.
Tensor tv_image(Rng& rng, Shape shape, double margin) {
  for (;;) {
    Tensor t = uniform(rng, shape, 0.01, 2.0);
    const Tensor m = mu_law(t);
    const std::size_t h = shape[1], w = shape[2];
    bool ok = true;
    for (std::size_t c = 0; c < shape[0] && ok; ++c) {
      const double* p = m.data().data() + c * h * w;
      for (std::size_t y = 0; y < h && ok; ++y) {
        for (std::size_t x = 0; x < w && ok; ++x) {
          if (x + 1 < w && std::fabs(p[y * w + x + 1] - p[y * w + x]) < margin) ok = false;
          if (y + 1 < h && std::fabs(p[(y + 1) * w + x] - p[y * w + x]) < margin) ok = false;
        }
      }
    }
    if (ok) return t;
  }
}

const PerceptualExtractor& test_extractor() {
  static const PerceptualExtractor extractor = PerceptualExtractor::random(7);
  return extractor;
}

std::vector<RegisteredOp> build_registry() {
  std::vector<RegisteredOp> ops;
  auto reg = [&ops](std::string name, std::function<std::vector<Tensor>(Rng&)> make,
                    DifferentiableOp apply) {
    ops.push_back({std::move(name), std::move(make), std::move(apply)});
  };

  reg("add", [](Rng& r) { return std::vector{normal(r, {2, 3, 4}), normal(r, {2, 3, 4})}; },
      [](const std::vector<Tensor>& x) { return add(x[0], x[1]); });
  reg("sub", [](Rng& r) { return std::vector{normal(r, {2, 3, 4}), normal(r, {2, 3, 4})}; },
      [](const std::vector<Tensor>& x) { return sub(x[0], x[1]); });
  reg("mul", [](Rng& r) { return std::vector{normal(r, {2, 3, 4}), normal(r, {2, 3, 4})}; },
      [](const std::vector<Tensor>& x) { return mul(x[0], x[1]); });
  reg("affine", [](Rng& r) { return std::vector{normal(r, {3, 5})}; },
      [](const std::vector<Tensor>& x) { return affine(x[0], 1.7, 0.3); });
  reg("relu", [](Rng& r) { return std::vector{off_zero(r, {2, 4, 4})}; },
      [](const std::vector<Tensor>& x) { return relu(x[0]); });
  reg("sigmoid", [](Rng& r) { return std::vector{normal(r, {2, 4, 4})}; },
      [](const std::vector<Tensor>& x) { return sigmoid(x[0], 3.0); });
  reg("abs", [](Rng& r) { return std::vector{off_zero(r, {2, 4, 4})}; },
      [](const std::vector<Tensor>& x) { return abs(x[0]); });
  reg("sum", [](Rng& r) { return std::vector{normal(r, {2, 3, 4})}; },
      [](const std::vector<Tensor>& x) { return sum(x[0]); });
  reg("mean", [](Rng& r) { return std::vector{normal(r, {2, 3, 4})}; },
      [](const std::vector<Tensor>& x) { return mean(x[0]); });
  reg("softmax", [](Rng& r) { return std::vector{normal(r, {3, 6}, 2.0)}; },
      [](const std::vector<Tensor>& x) { return softmax(x[0]); });
  reg("concat", [](Rng& r) { return std::vector{normal(r, {2, 3, 3}), normal(r, {1, 3, 3})}; },
      [](const std::vector<Tensor>& x) { return concat({x[0], x[1]}); });
  reg("slice", [](Rng& r) { return std::vector{normal(r, {4, 3, 3})}; },
      [](const std::vector<Tensor>& x) { return slice(x[0], 1, 2); });
  reg("reshape", [](Rng& r) { return std::vector{normal(r, {2, 3, 4})}; },
      [](const std::vector<Tensor>& x) { return x[0].reshape({6, 4}); });
  reg("l1_distance", [](Rng& r) { return std::vector{off_zero(r, {2, 3, 3}), Tensor::zeros({2, 3, 3})}; },
      [](const std::vector<Tensor>& x) { return l1_distance(x[0], x[1]); });
  reg("mu_law", [](Rng& r) { return std::vector{uniform(r, {2, 3, 3}, 0.01, 2.0)}; },
      [](const std::vector<Tensor>& x) { return mu_law(x[0]); });

  auto conv_inputs = [](std::size_t k) {
    return [k](Rng& r) {
      return std::vector{normal(r, {2, 6, 7}), normal(r, {3, 2, k, k}, 0.5), normal(r, {3})};
    };
  };
  reg("conv2d", conv_inputs(3),
      [](const std::vector<Tensor>& x) { return conv2d(x[0], x[1], x[2]); });
  reg("conv2d_stride2", conv_inputs(3), [](const std::vector<Tensor>& x) {
    return conv2d(x[0], x[1], x[2], {.stride = 2, .dilation = 1, .padding = 1});
  });
  reg("conv2d_dilation2", conv_inputs(3), [](const std::vector<Tensor>& x) {
    return conv2d(x[0], x[1], x[2], {.stride = 1, .dilation = 2, .padding = {}});
  });
  reg("conv2d_1x1_nobias", conv_inputs(1),
      [](const std::vector<Tensor>& x) { return conv2d(x[0], x[1], Tensor()); });
  reg("residual_block",
      [](Rng& r) {
        return std::vector{normal(r, {2, 4, 4}), normal(r, {2, 2, 3, 3}, 0.5), normal(r, {2}),
                           normal(r, {2, 2, 3, 3}, 0.5), normal(r, {2})};
      },
      [](const std::vector<Tensor>& x) { return residual_block(x[0], x[1], x[2], x[3], x[4]); });
  reg("avg_pool2", [](Rng& r) { return std::vector{normal(r, {2, 5, 7})}; },
      [](const std::vector<Tensor>& x) { return avg_pool2(x[0]); });
  reg("upsample_nearest", [](Rng& r) { return std::vector{normal(r, {2, 3, 4})}; },
      [](const std::vector<Tensor>& x) { return upsample_nearest(x[0], 2, 5, 8); });

  reg("sample_points",
      [](Rng& r) { return std::vector{normal(r, {2, 5, 5}), off_lattice(r, {7, 2}, -1.0, 5.0)}; },
      [](const std::vector<Tensor>& x) { return sample_points(x[0], x[1]); });
  reg("deform_conv",
      [](Rng& r) {
        return std::vector{normal(r, {2, 5, 5}), normal(r, {9, 5, 5}),
                           off_lattice(r, {18, 5, 5}, -2.0, 2.0)};
      },
      [](const std::vector<Tensor>& x) {
        return pixel_adaptive_deformable_conv(x[0], {x[1], x[2]});
      });
  reg("contextual_attention",
      [](Rng& r) { return std::vector{normal(r, {2, 5, 5}), uniform(r, {1, 5, 5}, 0.1, 0.9)}; },
      [](const std::vector<Tensor>& x) { return contextual_attention(x[0], x[1]); });
  reg("complete",
      [](Rng& r) {
        return std::vector{normal(r, {3, 4, 4}), normal(r, {3, 4, 4}),
                           uniform(r, {1, 4, 4}, 0.05, 0.95)};
      },
      [](const std::vector<Tensor>& x) { return complete(x[0], x[1], x[2]); });

  reg("recon_loss", [](Rng& r) { return radiance_pair(r, {3, 4, 4}); },
      [](const std::vector<Tensor>& x) { return recon_loss(x[0], x[1]); });
  reg("color_loss", [](Rng& r) { return radiance_pair(r, {3, 4, 4}); },
      [](const std::vector<Tensor>& x) { return color_loss(x[0], x[1]); });
  reg("tv_loss", [](Rng& r) { return std::vector{tv_image(r, {3, 4, 4}, 1e-3)}; },
      [](const std::vector<Tensor>& x) { return tv_loss(x[0]); });
  reg("perceptual_loss", [](Rng& r) { return radiance_pair(r, {3, 6, 6}); },
      [](const std::vector<Tensor>& x) { return perceptual_loss(x[0], x[1], test_extractor()); });
  return ops;
}

}  // namespace

const std::vector<RegisteredOp>& op_registry() {
  static const std::vector<RegisteredOp> registry = build_registry();
  return registry;
}

}  // namespace hdrf
