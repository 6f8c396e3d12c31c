#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace hdrf {

// Interleaved RGB raster, row-major from the top-left pixel.
struct ImageData {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // height * width * 3

  static constexpr std::size_t kChannels = 3;

  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return values[(y * width + x) * kChannels + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return values[(y * width + x) * kChannels + c];
  }
  std::size_t pixel_count() const { return height * width; }

  bool operator==(const ImageData&) const = default;
};

// Display-referred values in [0, 1].
struct LdrImage : ImageData {
  static LdrImage blank(std::size_t height, std::size_t width) {
    return {{height, width, std::vector<double>(height * width * kChannels, 0.0)}};
  }
};

// Linear, non-negative radiance in relative units.
struct HdrImage : ImageData {
  static HdrImage blank(std::size_t height, std::size_t width) {
    return {{height, width, std::vector<double>(height * width * kChannels, 0.0)}};
  }
};

// Binary P6 with maxval 255. Values decode as v / 255 and encode as
// round(255 * clamp(v, 0, 1)).
LdrImage read_ppm(const std::filesystem::path& path);
void write_ppm(const LdrImage& image, const std::filesystem::path& path);

// "PF" colour PFM. Any scale sign is accepted on read (negative means
// little-endian); files are always written little-endian with scale -1.
// Rows are stored bottom-to-top on disk.
HdrImage read_pfm(const std::filesystem::path& path);
void write_pfm(const HdrImage& image, const std::filesystem::path& path);

// 8-bit quantization used by write_ppm.
unsigned char quantize_8bit(double value);

// mu-law tonemapped 8-bit preview of an HDR image (negative radiance is
// clamped to zero first).
void write_preview_ppm(const HdrImage& image, const std::filesystem::path& path,
                       double mu = 5000.0);

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

}  // namespace hdrf
