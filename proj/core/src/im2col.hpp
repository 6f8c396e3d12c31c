#pragma once

#include <cstddef>
#include <span>

namespace hdrf::detail {

struct PatchGeometry {
  std::size_t channels, height, width;
  std::size_t kernel, stride, dilation, padding;
  std::size_t out_height, out_width;

  std::size_t rows() const { return channels * kernel * kernel; }
  std::size_t cols() const { return out_height * out_width; }
};

// cols[(c*k*k + ky*k + kx) * (Ho*Wo) + oy*Wo + ox] = x[c, oy*s + ky*d - p, ox*s + kx*d - p],
// zero outside the image.
inline void im2col(std::span<const double> x, const PatchGeometry& g, std::span<double> cols) {
  const std::size_t plane = g.out_height * g.out_width;
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* src = x.data() + c * g.height * g.width;
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        double* dst = cols.data() + ((c * g.kernel + ky) * g.kernel + kx) * plane;
        for (std::size_t oy = 0; oy < g.out_height; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky * g.dilation) -
                          static_cast<long>(g.padding);
          double* row = dst + oy * g.out_width;
          if (iy < 0 || iy >= static_cast<long>(g.height)) {
            for (std::size_t ox = 0; ox < g.out_width; ++ox) row[ox] = 0.0;
            continue;
          }
          const double* src_row = src + static_cast<std::size_t>(iy) * g.width;
          for (std::size_t ox = 0; ox < g.out_width; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx * g.dilation) -
                            static_cast<long>(g.padding);
            row[ox] = (ix < 0 || ix >= static_cast<long>(g.width))
                          ? 0.0
                          : src_row[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters (accumulates) cols back onto the image.
inline void col2im(std::span<const double> cols, const PatchGeometry& g, std::span<double> x) {
  const std::size_t plane = g.out_height * g.out_width;
  for (std::size_t c = 0; c < g.channels; ++c) {
    double* dst = x.data() + c * g.height * g.width;
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        const double* src = cols.data() + ((c * g.kernel + ky) * g.kernel + kx) * plane;
        for (std::size_t oy = 0; oy < g.out_height; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky * g.dilation) -
                          static_cast<long>(g.padding);
          if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
          double* dst_row = dst + static_cast<std::size_t>(iy) * g.width;
          const double* row = src + oy * g.out_width;
          for (std::size_t ox = 0; ox < g.out_width; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx * g.dilation) -
                            static_cast<long>(g.padding);
            if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
            dst_row[static_cast<std::size_t>(ix)] += row[ox];
          }
        }
      }
    }
  }
}

}  // namespace hdrf::detail
