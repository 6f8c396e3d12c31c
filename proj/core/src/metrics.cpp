#include "hdrf/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "hdrf/error.hpp"
#include "hdrf/radiometry.hpp"

namespace hdrf {
namespace {

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double total = 0.0;
  for (std::size_t i = 0; i < kWindow; ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(kWindow / 2);
    taps[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

// Separable valid-region filtering of one plane.
std::vector<double> filter_valid(const double* plane, std::size_t height, std::size_t width,
                                 const std::array<double, kWindow>& taps) {
  const std::size_t oh = height - kWindow + 1;
  const std::size_t ow = width - kWindow + 1;
  std::vector<double> rows(height * ow);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) s += taps[k] * plane[y * width + x + k];
      rows[y * ow + x] = s;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) s += taps[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = s;
    }
  }
  return out;
}

Tensor clamp_nonnegative(const Tensor& t) {
  std::vector<double> v(t.data().begin(), t.data().end());
  for (double& x : v) x = std::max(x, 0.0);
  return Tensor::from_data(t.shape(), std::move(v));
}

Tensor scaled(const Tensor& t, double factor, bool clamp_unit) {
  std::vector<double> v(t.data().begin(), t.data().end());
  for (double& x : v) {
    x *= factor;
    if (clamp_unit) x = std::clamp(x, 0.0, 1.0);
  }
  return Tensor::from_data(t.shape(), std::move(v));
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b, double peak) {
  if (a.shape() != b.shape() || a.numel() == 0) {
    throw ContractViolation("psnr: shapes " + shape_string(a.shape()) + " and " +
                            shape_string(b.shape()) + " differ");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    total += d * d;
  }
  const double mse = total / static_cast<double>(a.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape() || a.dim() != 3) {
    throw ContractViolation("ssim: expects two C x H x W images of equal shape");
  }
  const std::size_t channels = a.size(0);
  const std::size_t height = a.size(1);
  const std::size_t width = a.size(2);
  if (height < kWindow || width < kWindow) {
    throw ContractViolation("ssim: images must be at least 11 x 11");
  }
  const auto taps = gaussian_taps();
  const std::size_t plane = height * width;
  std::vector<double> xx(plane), yy(plane), xy(plane);
  double total = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* x = a.data().data() + c * plane;
    const double* y = b.data().data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, height, width, taps);
    const auto my = filter_valid(y, height, width, taps);
    const auto sxx = filter_valid(xx.data(), height, width, taps);
    const auto syy = filter_valid(yy.data(), height, width, taps);
    const auto sxy = filter_valid(xy.data(), height, width, taps);
    double channel_total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      channel_total += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cov + kC2)) /
                       ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
    }
    total += channel_total / static_cast<double>(mx.size());
  }
  return total / static_cast<double>(channels);
}

HdrMetrics evaluate_hdr(const Tensor& pred, const Tensor& target, double mu) {
  if (pred.shape() != target.shape()) {
    throw ContractViolation("evaluate_hdr: shapes " + shape_string(pred.shape()) + " and " +
                            shape_string(target.shape()) + " differ");
  }
  const Tensor p = clamp_nonnegative(pred);
  HdrMetrics m;
  const Tensor tp = mu_law(p, mu);
  const Tensor tt = mu_law(target, mu);
  m.psnr_t = psnr(tp, tt);
  m.ssim_t = ssim(scaled(tp, 1.0, true), scaled(tt, 1.0, true));
  const double peak = *std::max_element(target.data().begin(), target.data().end());
  if (!(peak > 0.0)) throw NumericalError("evaluate_hdr: ground truth has no positive radiance");
  m.psnr_l = psnr(scaled(p, 1.0 / peak, false), scaled(target, 1.0 / peak, false));
  m.ssim_l = ssim(scaled(p, 1.0 / peak, false), scaled(target, 1.0 / peak, false));
  return m;
}

std::string format_metric(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  std::string text = buffer;
  if (text.find_first_of(".e") == std::string::npos) text += ".0";
  return text;
}

}  // namespace hdrf
