#include "hdrf/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "hdrf/error.hpp"
#include "hdrf/radiometry.hpp"

namespace hdrf {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t last_token_offset() const { return last_token_; }

  // Next whitespace-delimited token, skipping '#' comments.
  std::string token() {
    skip_space();
    const std::size_t start = pos_;
    last_token_ = start;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) ++pos_;
    if (start == pos_) throw FormatError("unexpected end of header", pos_);
    return std::string(bytes_.begin() + static_cast<std::ptrdiff_t>(start),
                       bytes_.begin() + static_cast<std::ptrdiff_t>(pos_));
  }

  std::size_t positive_integer(const char* what) {
    const std::size_t at = (skip_space(), pos_);
    const std::string text = token();
    if (text.empty() || !std::all_of(text.begin(), text.end(), ::isdigit) || text.size() > 9) {
      throw FormatError(std::string("invalid ") + what + " '" + text + "'", at);
    }
    const std::size_t value = std::stoul(text);
    if (value == 0) throw FormatError(std::string(what) + " must be positive", at);
    return value;
  }

  // Consumes the single whitespace byte that ends the header.
  void end_of_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("missing whitespace after header", pos_);
    }
    ++pos_;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  std::size_t last_token_ = 0;
  std::size_t pos_ = 0;
};

void check_magic(const std::vector<unsigned char>& bytes, const char* magic) {
  if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1]) {
    throw FormatError(std::string("bad magic, expected ") + magic, 0);
  }
}

void check_image(const ImageData& image, const char* what) {
  if (image.height == 0 || image.width == 0 ||
      image.values.size() != image.height * image.width * ImageData::kChannels) {
    throw ContractViolation(std::string(what) + ": image dimensions do not match its data");
  }
}

}  // namespace

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

unsigned char quantize_8bit(double value) {
  const double clamped = std::clamp(value, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(255.0 * clamped));
}

LdrImage read_ppm(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  check_magic(bytes, "P6");
  HeaderReader header(bytes);
  header.token();
  const std::size_t width = header.positive_integer("width");
  const std::size_t height = header.positive_integer("height");
  const std::size_t maxval = header.positive_integer("maxval");
  const std::size_t maxval_at = header.last_token_offset();
  if (maxval != 255) {
    throw FormatError("unsupported maxval " + std::to_string(maxval) + " (need 255)", maxval_at);
  }
  header.end_of_header();
  const std::size_t start = header.offset();
  const std::size_t needed = width * height * 3;
  if (bytes.size() - start < needed) {
    throw FormatError("truncated payload: expected " + std::to_string(needed) + " bytes", bytes.size());
  }
  LdrImage image = LdrImage::blank(height, width);
  for (std::size_t i = 0; i < needed; ++i) image.values[i] = bytes[start + i] / 255.0;
  return image;
}

void write_ppm(const LdrImage& image, const std::filesystem::path& path) {
  check_image(image, "write_ppm");
  const std::string header = "P6\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + image.values.size());
  for (double v : image.values) bytes.push_back(quantize_8bit(v));
  write_file_bytes(path, bytes);
}

HdrImage read_pfm(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  check_magic(bytes, "PF");
  HeaderReader header(bytes);
  if (header.token() != "PF") throw FormatError("bad magic, expected PF", 0);
  const std::size_t width = header.positive_integer("width");
  const std::size_t height = header.positive_integer("height");
  const std::size_t scale_at = header.offset();
  const std::string scale_text = header.token();
  double scale = 0.0;
  try {
    std::size_t used = 0;
    scale = std::stod(scale_text, &used);
    if (used != scale_text.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw FormatError("invalid scale '" + scale_text + "'", scale_at);
  }
  if (scale == 0.0 || !std::isfinite(scale)) throw FormatError("scale must be non-zero", scale_at);
  header.end_of_header();
  const bool little = scale < 0.0;
  const std::size_t start = header.offset();
  const std::size_t floats = width * height * 3;
  if (bytes.size() - start < floats * 4) {
    throw FormatError("truncated payload: expected " + std::to_string(floats * 4) + " bytes",
                      bytes.size());
  }
  HdrImage image = HdrImage::blank(height, width);
  for (std::size_t row = 0; row < height; ++row) {
    const std::size_t y = height - 1 - row;
    for (std::size_t i = 0; i < width * 3; ++i) {
      const unsigned char* p = bytes.data() + start + (row * width * 3 + i) * 4;
      const std::uint32_t word =
          little ? (std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
                    std::uint32_t{p[3]} << 24)
                 : (std::uint32_t{p[3]} | std::uint32_t{p[2]} << 8 | std::uint32_t{p[1]} << 16 |
                    std::uint32_t{p[0]} << 24);
      image.values[y * width * 3 + i] = std::bit_cast<float>(word);
    }
  }
  return image;
}

void write_pfm(const HdrImage& image, const std::filesystem::path& path) {
  check_image(image, "write_pfm");
  const std::string header =
      "PF\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n-1.0\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + image.values.size() * 4);
  for (std::size_t row = 0; row < image.height; ++row) {
    const std::size_t y = image.height - 1 - row;
    for (std::size_t i = 0; i < image.width * 3; ++i) {
      const double v = image.values[y * image.width * 3 + i];
      if (std::isnan(v)) {
        throw NumericalError("write_pfm: NaN at pixel (" + std::to_string(y) + ", " +
                             std::to_string(i / 3) + ")");
      }
      const std::uint32_t word = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<unsigned char>(word >> (8 * b)));
    }
  }
  write_file_bytes(path, bytes);
}

void write_preview_ppm(const HdrImage& image, const std::filesystem::path& path, double mu) {
  check_image(image, "write_preview_ppm");
  LdrImage preview = LdrImage::blank(image.height, image.width);
  for (std::size_t i = 0; i < image.values.size(); ++i) {
    preview.values[i] = mu_law(std::max(image.values[i], 0.0), mu);
  }
  write_ppm(preview, path);
}

}  // namespace hdrf
