#pragma once

#include <cstddef>
#include <optional>

#include "hdrf/tensor.hpp"

namespace hdrf {

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t dilation = 1;
  // Zero padding on every side; nullopt means dilation * (k - 1) / 2, which
  // keeps the spatial size at stride 1.
  std::optional<std::size_t> padding;
};

// Cross-correlation of x (C x H x W) with weight (O x C x k x k), plus an
// optional bias (O). Pass an undefined tensor to skip the bias.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv2dOptions& options = {});

// x + conv(relu(conv(x))), both convolutions 3x3 same-size.
Tensor residual_block(const Tensor& x, const Tensor& w1, const Tensor& b1,
                      const Tensor& w2, const Tensor& b2);

// Area downsampling by 2; an odd trailing row/column is averaged over the
// pixels that exist. Output is ceil(H/2) x ceil(W/2).
Tensor avg_pool2(const Tensor& x);

// Nearest-neighbour upsampling by `factor`, cropped to out_h x out_w.
Tensor upsample_nearest(const Tensor& x, std::size_t factor, std::size_t out_h,
                        std::size_t out_w);

}  // namespace hdrf
