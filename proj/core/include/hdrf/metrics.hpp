#pragma once

#include <limits>
#include <string>

#include "hdrf/tensor.hpp"

namespace hdrf {

// 10 log10(peak^2 / MSE); +inf when the inputs are identical.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

// Mean local SSIM of C x H x W images, averaged over channels. 11x11
// Gaussian window (sigma 1.5) over the valid region, K1 = 0.01, K2 = 0.03,
// dynamic range L = 1.
double ssim(const Tensor& a, const Tensor& b);

struct HdrMetrics {
  double psnr_t = 0.0;  // on mu-law tonemapped values
  double ssim_t = 0.0;
  double psnr_l = 0.0;  // on linear values divided by max(target)
  double ssim_l = 0.0;
};

// Negative predicted radiance is clamped to zero before tonemapping.
HdrMetrics evaluate_hdr(const Tensor& pred, const Tensor& target, double mu = 5000.0);

// "%.6g", with "inf" for infinity and a ".0" suffix on integral values.
std::string format_metric(double value);

}  // namespace hdrf
