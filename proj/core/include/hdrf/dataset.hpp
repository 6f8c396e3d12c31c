#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "hdrf/image_io.hpp"
#include "hdrf/tensor.hpp"

namespace hdrf {

enum class ExposureFormat {
  kTimes,  // exposures.txt holds relative exposure times
  kBias,   // exposures.txt holds biases v, time = 2^v
};

inline constexpr std::array<double, 3> kDefaultExposures = {0.25, 1.0, 4.0};

// Three bracketed LDR frames, short to long, and the HDR ground truth aligned
// with the middle frame.
struct Scene {
  std::array<LdrImage, 3> ldr;
  std::array<double, 3> exposures = kDefaultExposures;
  HdrImage gt;

  bool operator==(const Scene&) const = default;
};

// Directory layout: ldr_0.ppm ldr_1.ppm ldr_2.ppm, exposures.txt (three
// numbers, one per line) and gt.pfm. Errors name the offending file.
Scene load_scene(const std::filesystem::path& dir, ExposureFormat format = ExposureFormat::kTimes);
void save_scene(const Scene& scene, const std::filesystem::path& dir);

// Throws IoError when sizes differ or exposures are not strictly increasing.
void validate_scene(const Scene& scene);

// Frames rendered from `hdr` itself, so the stack has no motion. With
// `quantize` the frames are rounded to 8 bits as they would be on disk.
Scene make_static_scene(const HdrImage& hdr, const std::array<double, 3>& exposures,
                        double gamma = 2.2, bool quantize = false);

// Per-frame radiance of a procedural scene: a smooth background spanning
// about 2.5 decades plus a textured sprite displaced by -motion, 0, +motion
// pixels across the three frames. Values are rounded to float32.
std::array<HdrImage, 3> synth_dynamic_frames(std::uint64_t seed, std::size_t size,
                                             std::size_t motion_px);

// 8-bit frames rendered from synth_dynamic_frames; the ground truth is the
// middle frame's radiance.
Scene synth_dynamic_scene(std::uint64_t seed, std::size_t size, std::size_t motion_px,
                          double gamma = 2.2);

// Dihedral transform id = rotation + 4 * flip: mirror left-right when flip is
// set, then rotate counter-clockwise by rotation * 90 degrees.
inline constexpr int kDihedralCount = 8;
int dihedral_inverse(int id);

template <typename Image>
Image dihedral(const Image& image, int id) {
  Image out = image;
  const bool flip = id >= 4;
  const int rotation = id % 4;
  const std::size_t h = image.height;
  const std::size_t w = image.width;
  const bool swap = rotation % 2 == 1;
  out.height = swap ? w : h;
  out.width = swap ? h : w;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t fx = flip ? w - 1 - x : x;
      std::size_t ty = y, tx = fx;
      switch (rotation) {
        case 1: ty = w - 1 - fx; tx = y; break;
        case 2: ty = h - 1 - y; tx = w - 1 - fx; break;
        case 3: ty = fx; tx = h - 1 - y; break;
        default: break;
      }
      for (std::size_t c = 0; c < ImageData::kChannels; ++c) out.at(ty, tx, c) = image.at(y, x, c);
    }
  }
  return out;
}

template <typename Image>
Image crop(const Image& image, std::size_t y0, std::size_t x0, std::size_t height,
           std::size_t width) {
  Image out = Image::blank(height, width);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < ImageData::kChannels; ++c) {
        out.at(y, x, c) = image.at(y0 + y, x0 + x, c);
      }
    }
  }
  return out;
}

struct Sample {
  std::array<LdrImage, 3> ldr;
  std::array<double, 3> exposures = kDefaultExposures;
  HdrImage gt;
  bool is_static = false;
  std::size_t crop_y = 0;
  std::size_t crop_x = 0;
  int augmentation = 0;
};

// n square crops of side `size` at uniform positions, each with one uniformly
// drawn dihedral transform applied to all its images. Sample i depends only
// on (seed, i).
std::vector<Sample> sample_patches(const Scene& scene, std::size_t n, std::size_t size,
                                   std::uint64_t seed);

// A static sample: a crop of the ground truth with frames re-rendered from it.
Sample static_sample(const Scene& scene, std::size_t size, std::uint64_t seed,
                     double gamma = 2.2);

struct Batch {
  std::vector<Sample> samples;

  std::size_t static_count() const;
  std::size_t dynamic_count() const { return samples.size() - static_count(); }
};

// Three dynamic samples per static one, in a seed-determined order. Dynamic
// samples come from `dynamic_pool`, static ones are rendered from the ground
// truth of `static_pool` scenes.
Batch make_batch(const std::vector<Scene>& dynamic_pool, const std::vector<Scene>& static_pool,
                 std::size_t batch_size, std::size_t patch_size, std::uint64_t seed,
                 double gamma = 2.2);

struct SampleTensors {
  std::array<Tensor, 3> inputs;  // 6 x H x W each
  Tensor gt;                     // 3 x H x W
};

SampleTensors to_tensors(const Sample& sample, double gamma = 2.2);
SampleTensors to_tensors(const Scene& scene, double gamma = 2.2);

}  // namespace hdrf
