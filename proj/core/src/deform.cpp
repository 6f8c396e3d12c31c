#include "hdrf/deform.hpp"

#include <cmath>

#include "hdrf/error.hpp"

namespace hdrf {
namespace {

struct Bilinear {
  long y0, x0;
  double fy, fx;

  Bilinear(double y, double x)
      : y0(static_cast<long>(std::floor(y))),
        x0(static_cast<long>(std::floor(x))),
        fy(y - std::floor(y)),
        fx(x - std::floor(x)) {}
};

class Plane {
 public:
  Plane(const double* data, long height, long width)
      : data_(data), height_(height), width_(width) {}

  double at(long y, long x) const {
    if (y < 0 || x < 0 || y >= height_ || x >= width_) return 0.0;
    return data_[y * width_ + x];
  }

  double sample(const Bilinear& b) const {
    return (1.0 - b.fy) * ((1.0 - b.fx) * at(b.y0, b.x0) + b.fx * at(b.y0, b.x0 + 1)) +
           b.fy * ((1.0 - b.fx) * at(b.y0 + 1, b.x0) + b.fx * at(b.y0 + 1, b.x0 + 1));
  }

  double d_dy(const Bilinear& b) const {
    return (1.0 - b.fx) * (at(b.y0 + 1, b.x0) - at(b.y0, b.x0)) +
           b.fx * (at(b.y0 + 1, b.x0 + 1) - at(b.y0, b.x0 + 1));
  }

  double d_dx(const Bilinear& b) const {
    return (1.0 - b.fy) * (at(b.y0, b.x0 + 1) - at(b.y0, b.x0)) +
           b.fy * (at(b.y0 + 1, b.x0 + 1) - at(b.y0 + 1, b.x0));
  }

 private:
  const double* data_;
  long height_, width_;
};

// Adds `value` times the bilinear weights onto a gradient plane.
void scatter(double* plane, long height, long width, const Bilinear& b, double value) {
  const double w[2][2] = {{(1.0 - b.fy) * (1.0 - b.fx), (1.0 - b.fy) * b.fx},
                          {b.fy * (1.0 - b.fx), b.fy * b.fx}};
  for (long a = 0; a < 2; ++a) {
    for (long c = 0; c < 2; ++c) {
      const long y = b.y0 + a;
      const long x = b.x0 + c;
      if (y < 0 || x < 0 || y >= height || x >= width) continue;
      plane[y * width + x] += w[a][c] * value;
    }
  }
}

void require_finite_points(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw ContractViolation(std::string(what) + " must be finite");
  }
}

}  // namespace

std::vector<double> bilinear_sample(const Tensor& feature, double y, double x) {
  if (feature.dim() != 3) throw ContractViolation("bilinear_sample expects C x H x W");
  if (!std::isfinite(y) || !std::isfinite(x)) {
    throw ContractViolation("bilinear_sample: position must be finite");
  }
  const long height = static_cast<long>(feature.size(1));
  const long width = static_cast<long>(feature.size(2));
  const Bilinear b(y, x);
  std::vector<double> out(feature.size(0));
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = Plane(feature.data().data() + c * height * width, height, width).sample(b);
  }
  return out;
}

Tensor sample_points(const Tensor& feature, const Tensor& points) {
  if (feature.dim() != 3 || points.dim() != 2 || points.size(1) != 2) {
    throw ContractViolation("sample_points expects C x H x W feature and P x 2 points");
  }
  require_finite_points(points.data(), "sample_points: points");
  const std::size_t channels = feature.size(0);
  const long height = static_cast<long>(feature.size(1));
  const long width = static_cast<long>(feature.size(2));
  const std::size_t count = points.size(0);
  const auto f = feature.data();
  const auto p = points.data();
  std::vector<double> out(channels * count);
  for (std::size_t i = 0; i < count; ++i) {
    const Bilinear b(p[2 * i], p[2 * i + 1]);
    for (std::size_t c = 0; c < channels; ++c) {
      out[c * count + i] = Plane(f.data() + c * height * width, height, width).sample(b);
    }
  }
  return make_result({channels, count}, std::move(out), "sample_points", {feature, points},
                     [=](const BackwardArgs& args) {
                       const auto f = args.inputs[0].data();
                       const auto p = args.inputs[1].data();
                       auto gf = grad_sink(args.inputs[0]);
                       auto gp = grad_sink(args.inputs[1]);
                       for (std::size_t i = 0; i < count; ++i) {
                         const Bilinear b(p[2 * i], p[2 * i + 1]);
                         for (std::size_t c = 0; c < channels; ++c) {
                           const double g = args.grad_out[c * count + i];
                           if (!gf.empty()) {
                             scatter(gf.data() + c * height * width, height, width, b, g);
                           }
                           if (!gp.empty()) {
                             const Plane plane(f.data() + c * height * width, height, width);
                             gp[2 * i] += g * plane.d_dy(b);
                             gp[2 * i + 1] += g * plane.d_dx(b);
                           }
                         }
                       }
                     });
}

Tensor pixel_adaptive_deformable_conv(const Tensor& feature, const DeformableKernelField& field) {
  if (feature.dim() != 3) throw ContractViolation("deformable conv expects C x H x W feature");
  const std::size_t channels = feature.size(0);
  const std::size_t height = feature.size(1);
  const std::size_t width = feature.size(2);
  if (field.kernels.shape() != Shape{kTapCount, height, width} ||
      field.offsets.shape() != Shape{2 * kTapCount, height, width}) {
    throw ContractViolation("deformable conv: kernel field " +
                            shape_string(field.kernels.shape()) + " / offsets " +
                            shape_string(field.offsets.shape()) + " do not match feature " +
                            shape_string(feature.shape()));
  }
  require_finite_points(field.offsets.data(), "deformable conv: offsets");
  const std::size_t plane = height * width;
  const long h = static_cast<long>(height);
  const long w = static_cast<long>(width);
  const auto f = feature.data();
  const auto kernels = field.kernels.data();
  const auto offsets = field.offsets.data();

  std::vector<double> out(channels * plane, 0.0);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t p = y * width + x;
      for (int n = 0; n < kTapCount; ++n) {
        const double k = kernels[n * plane + p];
        const Bilinear b(static_cast<double>(y) + kTapRow[n] + offsets[2 * n * plane + p],
                         static_cast<double>(x) + kTapCol[n] + offsets[(2 * n + 1) * plane + p]);
        for (std::size_t c = 0; c < channels; ++c) {
          out[c * plane + p] += k * Plane(f.data() + c * plane, h, w).sample(b);
        }
      }
    }
  }

  return make_result(
      feature.shape(), std::move(out), "deform_conv", {feature, field.kernels, field.offsets},
      [=](const BackwardArgs& args) {
        const auto f = args.inputs[0].data();
        const auto kernels = args.inputs[1].data();
        const auto offsets = args.inputs[2].data();
        auto gf = grad_sink(args.inputs[0]);
        auto gk = grad_sink(args.inputs[1]);
        auto go = grad_sink(args.inputs[2]);
        for (std::size_t y = 0; y < height; ++y) {
          for (std::size_t x = 0; x < width; ++x) {
            const std::size_t p = y * width + x;
            for (int n = 0; n < kTapCount; ++n) {
              const double k = kernels[n * plane + p];
              const Bilinear b(
                  static_cast<double>(y) + kTapRow[n] + offsets[2 * n * plane + p],
                  static_cast<double>(x) + kTapCol[n] + offsets[(2 * n + 1) * plane + p]);
              double dk = 0.0;
              double dy = 0.0;
              double dx = 0.0;
              for (std::size_t c = 0; c < channels; ++c) {
                const double g = args.grad_out[c * plane + p];
                if (g == 0.0) continue;
                const Plane src(f.data() + c * plane, h, w);
                if (!gk.empty()) dk += g * src.sample(b);
                if (!go.empty()) {
                  dy += g * src.d_dy(b);
                  dx += g * src.d_dx(b);
                }
                if (!gf.empty()) scatter(gf.data() + c * plane, h, w, b, g * k);
              }
              if (!gk.empty()) gk[n * plane + p] += dk;
              if (!go.empty()) {
                go[2 * n * plane + p] += k * dy;
                go[(2 * n + 1) * plane + p] += k * dx;
              }
            }
          }
        }
      });
}

}  // namespace hdrf
