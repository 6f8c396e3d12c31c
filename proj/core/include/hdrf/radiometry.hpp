#pragma once

#include <string_view>

#include "hdrf/image_io.hpp"
#include "hdrf/tensor.hpp"

namespace hdrf {

struct GammaConfig {
  double gamma = 2.2;
  double mu = 5000.0;

  bool operator==(const GammaConfig&) const = default;
};

// The tonemap divides by log(1 + mu) so that T(1) = 1.
inline constexpr std::string_view kTonemapDenominator = "mu";

// H = I^gamma / t
HdrImage ldr_to_hdr(const LdrImage& ldr, double exposure, double gamma = 2.2);

// I = clip((H * t)^(1 / gamma), 0, 1)
LdrImage synth_static_ldr(const HdrImage& hdr, double exposure, double gamma = 2.2);

// 6 x H x W tensor: channels 0-2 the LDR image, 3-5 its linearization.
Tensor build_input(const LdrImage& ldr, double exposure, double gamma = 2.2);

// T(H) = log(1 + mu H) / log(1 + mu), for H >= 0.
double mu_law(double radiance, double mu = 5000.0);
Tensor mu_law(const Tensor& radiance, double mu = 5000.0);

// Planar C x H x W <-> interleaved RGB conversions.
Tensor image_to_tensor(const ImageData& image);
HdrImage tensor_to_hdr(const Tensor& planar);
LdrImage tensor_to_ldr(const Tensor& planar);

}  // namespace hdrf
