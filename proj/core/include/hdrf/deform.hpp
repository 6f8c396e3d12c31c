#pragma once

#include <vector>

#include "hdrf/tensor.hpp"

namespace hdrf {

// Per-channel bilinear sample of a C x H x W map at fractional (y, x).
// Lattice points outside the map contribute zero.
std::vector<double> bilinear_sample(const Tensor& feature, double y, double x);

// Differentiable gather: points is P x 2 of (y, x); result is C x P.
// At integer coordinates the position derivative is the one-sided
// (forward) difference.
Tensor sample_points(const Tensor& feature, const Tensor& points);

// Per-pixel 3x3 kernels and tap offsets for a feature map of size H x W.
// Tap n enumerates the regular grid in raster order, n = (dy + 1) * 3 + (dx + 1).
struct DeformableKernelField {
  Tensor kernels;  // 9 x H x W, shared across feature channels
  Tensor offsets;  // 18 x H x W; channel 2n is the row shift of tap n, 2n + 1 the column shift
};

inline constexpr int kTapCount = 9;
inline constexpr int kTapRow[kTapCount] = {-1, -1, -1, 0, 0, 0, 1, 1, 1};
inline constexpr int kTapCol[kTapCount] = {-1, 0, 1, -1, 0, 1, -1, 0, 1};

// out(c, p) = sum_n K(n, p) * F(c, p + r_n + offset_n(p)), bilinear sampling.
Tensor pixel_adaptive_deformable_conv(const Tensor& feature, const DeformableKernelField& field);

}  // namespace hdrf
