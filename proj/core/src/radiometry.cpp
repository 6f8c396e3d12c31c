#include "hdrf/radiometry.hpp"

#include <algorithm>
#include <cmath>

#include "hdrf/error.hpp"

namespace hdrf {
namespace {

void require_exposure(double exposure) {
  if (!(exposure > 0.0) || !std::isfinite(exposure)) {
    throw ContractViolation("exposure time must be positive, got " + std::to_string(exposure));
  }
}

void require_gamma(double gamma) {
  if (!(gamma > 0.0)) throw ContractViolation("gamma must be positive");
}

void fill_from_planar(const Tensor& planar, ImageData& image) {
  if (planar.dim() != 3 || planar.size(0) != ImageData::kChannels) {
    throw ContractViolation("expected a 3 x H x W tensor, got " + shape_string(planar.shape()));
  }
  image.height = planar.size(1);
  image.width = planar.size(2);
  const std::size_t plane = image.height * image.width;
  image.values.resize(plane * ImageData::kChannels);
  const auto src = planar.data();
  for (std::size_t c = 0; c < ImageData::kChannels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) image.values[i * 3 + c] = src[c * plane + i];
  }
}

}  // namespace

HdrImage ldr_to_hdr(const LdrImage& ldr, double exposure, double gamma) {
  require_exposure(exposure);
  require_gamma(gamma);
  HdrImage hdr{{ldr.height, ldr.width, std::vector<double>(ldr.values.size())}};
  for (std::size_t i = 0; i < ldr.values.size(); ++i) {
    hdr.values[i] = std::pow(ldr.values[i], gamma) / exposure;
  }
  return hdr;
}

LdrImage synth_static_ldr(const HdrImage& hdr, double exposure, double gamma) {
  require_exposure(exposure);
  require_gamma(gamma);
  LdrImage ldr{{hdr.height, hdr.width, std::vector<double>(hdr.values.size())}};
  for (std::size_t i = 0; i < hdr.values.size(); ++i) {
    if (hdr.values[i] < 0.0) throw ContractViolation("synth_static_ldr: negative radiance");
    ldr.values[i] = std::clamp(std::pow(hdr.values[i] * exposure, 1.0 / gamma), 0.0, 1.0);
  }
  return ldr;
}

Tensor build_input(const LdrImage& ldr, double exposure, double gamma) {
  const HdrImage hdr = ldr_to_hdr(ldr, exposure, gamma);
  const std::size_t plane = ldr.pixel_count();
  std::vector<double> data(6 * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      data[c * plane + i] = ldr.values[i * 3 + c];
      data[(c + 3) * plane + i] = hdr.values[i * 3 + c];
    }
  }
  return Tensor::from_data({6, ldr.height, ldr.width}, std::move(data));
}

double mu_law(double radiance, double mu) {
  if (!(mu > 0.0)) throw ContractViolation("mu must be positive");
  if (radiance < 0.0) throw ContractViolation("mu_law: radiance must be non-negative");
  return std::log1p(mu * radiance) / std::log1p(mu);
}

Tensor mu_law(const Tensor& radiance, double mu) {
  if (!(mu > 0.0)) throw ContractViolation("mu must be positive");
  const double norm = std::log1p(mu);
  const auto x = radiance.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0.0) throw ContractViolation("mu_law: radiance must be non-negative");
    out[i] = std::log1p(mu * x[i]) / norm;
  }
  return make_result(radiance.shape(), std::move(out), "mu_law", {radiance},
                     [mu, norm](const BackwardArgs& args) {
                       const auto x = args.inputs[0].data();
                       auto g = grad_sink(args.inputs[0]);
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         g[i] += args.grad_out[i] * mu / ((1.0 + mu * x[i]) * norm);
                       }
                     });
}

Tensor image_to_tensor(const ImageData& image) {
  const std::size_t plane = image.pixel_count();
  if (image.values.size() != plane * ImageData::kChannels) {
    throw ContractViolation("image_to_tensor: malformed image");
  }
  std::vector<double> data(image.values.size());
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) data[c * plane + i] = image.values[i * 3 + c];
  }
  return Tensor::from_data({3, image.height, image.width}, std::move(data));
}

HdrImage tensor_to_hdr(const Tensor& planar) {
  HdrImage image;
  fill_from_planar(planar, image);
  return image;
}

LdrImage tensor_to_ldr(const Tensor& planar) {
  LdrImage image;
  fill_from_planar(planar, image);
  return image;
}

}  // namespace hdrf
