#include "hdrf/conv.hpp"

#include <vector>

#include "hdrf/error.hpp"
#include "hdrf/linalg.hpp"
#include "hdrf/ops.hpp"
#include "im2col.hpp"

namespace hdrf {

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv2dOptions& options) {
  if (x.dim() != 3 || weight.dim() != 4) {
    throw ContractViolation("conv2d expects C x H x W input and O x C x k x k weight");
  }
  const std::size_t channels = x.size(0);
  const std::size_t out_channels = weight.size(0);
  const std::size_t k = weight.size(2);
  if (weight.size(1) != channels || weight.size(3) != k) {
    throw ContractViolation("conv2d: weight " + shape_string(weight.shape()) +
                            " incompatible with input " + shape_string(x.shape()));
  }
  if (bias.defined() && bias.shape() != Shape{out_channels}) {
    throw ContractViolation("conv2d: bias must have shape [" +
                            std::to_string(out_channels) + "]");
  }
  if (options.stride == 0 || options.dilation == 0) {
    throw ContractViolation("conv2d: stride and dilation must be positive");
  }
  const std::size_t pad = options.padding.value_or(options.dilation * (k - 1) / 2);
  const std::size_t span = options.dilation * (k - 1) + 1;
  const std::size_t height = x.size(1);
  const std::size_t width = x.size(2);
  if (height + 2 * pad < span || width + 2 * pad < span) {
    throw ContractViolation("conv2d: kernel larger than padded input");
  }
  const detail::PatchGeometry geom{channels,
                                   height,
                                   width,
                                   k,
                                   options.stride,
                                   options.dilation,
                                   pad,
                                   (height + 2 * pad - span) / options.stride + 1,
                                   (width + 2 * pad - span) / options.stride + 1};
  const std::size_t plane = geom.cols();
  const std::size_t depth = geom.rows();

  std::vector<double> cols(depth * plane);
  detail::im2col(x.data(), geom, cols);
  std::vector<double> out(out_channels * plane, 0.0);
  if (bias.defined()) {
    const auto b = bias.data();
    for (std::size_t o = 0; o < out_channels; ++o) {
      std::fill(out.begin() + static_cast<std::ptrdiff_t>(o * plane),
                out.begin() + static_cast<std::ptrdiff_t>((o + 1) * plane), b[o]);
    }
  }
  gemm(false, false, out_channels, plane, depth, 1.0, weight.data(), cols, 1.0, out);

  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      {out_channels, geom.out_height, geom.out_width}, std::move(out), "conv2d",
      std::move(inputs), [geom, out_channels](const BackwardArgs& args) {
        const Tensor& x = args.inputs[0];
        const Tensor& weight = args.inputs[1];
        const std::size_t plane = geom.cols();
        const std::size_t depth = geom.rows();
        auto gw = grad_sink(weight);
        if (!gw.empty()) {
          std::vector<double> cols(depth * plane);
          detail::im2col(x.data(), geom, cols);
          gemm(false, true, out_channels, depth, plane, 1.0, args.grad_out, cols, 1.0, gw);
        }
        auto gx = grad_sink(x);
        if (!gx.empty()) {
          std::vector<double> gcols(depth * plane);
          gemm(true, false, depth, plane, out_channels, 1.0, weight.data(), args.grad_out,
               0.0, gcols);
          detail::col2im(gcols, geom, gx);
        }
        if (args.inputs.size() > 2) {
          auto gb = grad_sink(args.inputs[2]);
          for (std::size_t o = 0; o < gb.size(); ++o) {
            double total = 0.0;
            for (std::size_t i = 0; i < plane; ++i) total += args.grad_out[o * plane + i];
            gb[o] += total;
          }
        }
      });
}

Tensor residual_block(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                      const Tensor& b2) {
  return add(x, conv2d(relu(conv2d(x, w1, b1)), w2, b2));
}

Tensor avg_pool2(const Tensor& x) {
  if (x.dim() != 3) throw ContractViolation("avg_pool2 expects C x H x W");
  const std::size_t channels = x.size(0);
  const std::size_t height = x.size(1);
  const std::size_t width = x.size(2);
  const std::size_t oh = (height + 1) / 2;
  const std::size_t ow = (width + 1) / 2;
  // Per-output window population, shared by all channels.
  std::vector<double> counts(oh * ow);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      const std::size_t ny = std::min<std::size_t>(2, height - 2 * oy);
      const std::size_t nx = std::min<std::size_t>(2, width - 2 * ox);
      counts[oy * ow + ox] = static_cast<double>(ny * nx);
    }
  }
  std::vector<double> out(channels * oh * ow, 0.0);
  const auto src = x.data();
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t xx = 0; xx < width; ++xx) {
        out[(c * oh + y / 2) * ow + xx / 2] += src[(c * height + y) * width + xx];
      }
    }
    for (std::size_t i = 0; i < oh * ow; ++i) out[c * oh * ow + i] /= counts[i];
  }
  return make_result({channels, oh, ow}, std::move(out), "avg_pool2", {x},
                     [channels, height, width, oh, ow, counts](const BackwardArgs& args) {
                       auto g = grad_sink(args.inputs[0]);
                       if (g.empty()) return;
                       for (std::size_t c = 0; c < channels; ++c) {
                         for (std::size_t y = 0; y < height; ++y) {
                           for (std::size_t xx = 0; xx < width; ++xx) {
                             const std::size_t o = (y / 2) * ow + xx / 2;
                             g[(c * height + y) * width + xx] +=
                                 args.grad_out[c * oh * ow + o] / counts[o];
                           }
                         }
                       }
                     });
}

Tensor upsample_nearest(const Tensor& x, std::size_t factor, std::size_t out_h,
                        std::size_t out_w) {
  if (x.dim() != 3 || factor == 0) {
    throw ContractViolation("upsample_nearest expects C x H x W and factor > 0");
  }
  const std::size_t channels = x.size(0);
  const std::size_t height = x.size(1);
  const std::size_t width = x.size(2);
  if (out_h > height * factor || out_w > width * factor) {
    throw ContractViolation("upsample_nearest: crop larger than upsampled map");
  }
  std::vector<double> out(channels * out_h * out_w);
  const auto src = x.data();
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < out_h; ++y) {
      for (std::size_t xx = 0; xx < out_w; ++xx) {
        out[(c * out_h + y) * out_w + xx] =
            src[(c * height + y / factor) * width + xx / factor];
      }
    }
  }
  return make_result({channels, out_h, out_w}, std::move(out), "upsample_nearest", {x},
                     [=](const BackwardArgs& args) {
                       auto g = grad_sink(args.inputs[0]);
                       if (g.empty()) return;
                       for (std::size_t c = 0; c < channels; ++c) {
                         for (std::size_t y = 0; y < out_h; ++y) {
                           for (std::size_t xx = 0; xx < out_w; ++xx) {
                             g[(c * height + y / factor) * width + xx / factor] +=
                                 args.grad_out[(c * out_h + y) * out_w + xx];
                           }
                         }
                       }
                     });
}

}  // namespace hdrf
