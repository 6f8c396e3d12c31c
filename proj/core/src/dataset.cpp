#include "hdrf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "hdrf/config.hpp"
#include "hdrf/error.hpp"
#include "hdrf/radiometry.hpp"
#include "hdrf/rng.hpp"

namespace hdrf {
namespace {

constexpr const char* kLdrNames[3] = {"ldr_0.ppm", "ldr_1.ppm", "ldr_2.ppm"};
constexpr const char* kExposureFile = "exposures.txt";
constexpr const char* kGtFile = "gt.pfm";
constexpr double kDecades = 2.5;

std::array<double, 3> parse_exposures(const std::filesystem::path& path, ExposureFormat format) {
  const auto bytes = read_file_bytes(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::array<double, 3> values{};
  std::string line;
  std::size_t count = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string text = line.substr(first, last - first + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
      throw IoError(path.string() + ": line " + std::to_string(line_no) + ": invalid number '" +
                    text + "'");
    }
    if (count == 3) throw IoError(path.string() + ": more than three exposures");
    values[count++] = format == ExposureFormat::kBias ? std::exp2(v) : v;
  }
  if (count != 3) {
    throw IoError(path.string() + ": expected three exposures, found " + std::to_string(count));
  }
  return values;
}

float round_float(double v) { return static_cast<float>(v); }

LdrImage quantized(const LdrImage& image) {
  LdrImage out = image;
  for (double& v : out.values) v = quantize_8bit(v) / 255.0;
  return out;
}

}  // namespace

void validate_scene(const Scene& scene) {
  for (std::size_t i = 0; i < 3; ++i) {
    const ImageData& img = scene.ldr[i];
    if (img.height != scene.gt.height || img.width != scene.gt.width) {
      throw IoError(std::string(kLdrNames[i]) + " is " + std::to_string(img.width) + "x" +
                    std::to_string(img.height) + " but " + kGtFile + " is " +
                    std::to_string(scene.gt.width) + "x" + std::to_string(scene.gt.height));
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(scene.exposures[i] > 0.0)) {
      throw IoError(std::string(kExposureFile) + ": exposure " + std::to_string(i) +
                    " must be positive");
    }
  }
  if (!(scene.exposures[0] < scene.exposures[1] && scene.exposures[1] < scene.exposures[2])) {
    throw IoError(std::string(kExposureFile) + ": exposures must be strictly increasing, got " +
                  format_double(scene.exposures[0]) + " " + format_double(scene.exposures[1]) +
                  " " + format_double(scene.exposures[2]));
  }
}

Scene load_scene(const std::filesystem::path& dir, ExposureFormat format) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("scene directory '" + dir.string() + "' does not exist");
  }
  Scene scene;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto path = dir / kLdrNames[i];
    if (!std::filesystem::exists(path)) throw IoError("missing " + path.string());
    try {
      scene.ldr[i] = read_ppm(path);
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ": " + e.what(), e.offset());
    }
  }
  const auto exposures = dir / kExposureFile;
  if (!std::filesystem::exists(exposures)) throw IoError("missing " + exposures.string());
  scene.exposures = parse_exposures(exposures, format);
  const auto gt = dir / kGtFile;
  if (!std::filesystem::exists(gt)) throw IoError("missing " + gt.string());
  try {
    scene.gt = read_pfm(gt);
  } catch (const FormatError& e) {
    throw FormatError(gt.string() + ": " + e.what(), e.offset());
  }
  validate_scene(scene);
  return scene;
}

void save_scene(const Scene& scene, const std::filesystem::path& dir) {
  validate_scene(scene);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  for (std::size_t i = 0; i < 3; ++i) write_ppm(scene.ldr[i], dir / kLdrNames[i]);
  std::string text;
  for (double t : scene.exposures) text += format_double(t) + "\n";
  write_file_bytes(dir / kExposureFile, std::vector<unsigned char>(text.begin(), text.end()));
  write_pfm(scene.gt, dir / kGtFile);
}

Scene make_static_scene(const HdrImage& hdr, const std::array<double, 3>& exposures,
                        double gamma, bool quantize) {
  Scene scene;
  scene.exposures = exposures;
  scene.gt = hdr;
  for (std::size_t i = 0; i < 3; ++i) {
    scene.ldr[i] = synth_static_ldr(hdr, exposures[i], gamma);
    if (quantize) scene.ldr[i] = quantized(scene.ldr[i]);
  }
  return scene;
}

std::array<HdrImage, 3> synth_dynamic_frames(std::uint64_t seed, std::size_t size,
                                             std::size_t motion_px) {
  if (size < 4) throw ContractViolation("synthetic scenes need size >= 4");
  Rng rng(seed);
  const std::size_t n = size * size;
  const double s = static_cast<double>(size);

  // Smooth random field, rank-equalized so the radiance spans the full
  // log range regardless of the draw.
  std::vector<double> field(n, 0.0);
  for (int k = 0; k < 6; ++k) {
    const double amp = rng.uniform(0.5, 1.0);
    const double fu = rng.uniform(-2.0, 2.0);
    const double fv = rng.uniform(-2.0, 2.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        field[y * size + x] +=
            amp * std::cos(2.0 * std::numbers::pi * (fu * x + fv * y) / s + phase);
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&field](std::size_t a, std::size_t b) { return field[a] < field[b]; });
  std::vector<double> level(n);
  for (std::size_t r = 0; r < n; ++r) level[order[r]] = static_cast<double>(r) / (n - 1);

  const double peak = rng.uniform(1.0, 2.0);
  std::array<double, 3> tint{};
  for (double& t : tint) t = rng.uniform(0.75, 1.0);
  std::array<double, 3> sprite_color{};
  for (double& c : sprite_color) c = rng.uniform(0.02, 0.3);

  const std::size_t half = std::max<std::size_t>(2, size / 6);
  const long m = static_cast<long>(motion_px);
  const long lo = static_cast<long>(half) + m;
  const long hi = static_cast<long>(size) - static_cast<long>(half) - m;
  const long cy = hi > lo ? lo + static_cast<long>(rng.uniform_int(hi - lo)) : static_cast<long>(size / 2);
  const long cx = hi > lo ? lo + static_cast<long>(rng.uniform_int(hi - lo)) : static_cast<long>(size / 2);
  const long dx = rng.uniform() < 0.5 ? -m : m;
  const long dy = static_cast<long>(rng.uniform_int(2 * motion_px + 1)) - m;

  std::array<HdrImage, 3> frames;
  for (long f = 0; f < 3; ++f) {
    HdrImage& img = frames[f];
    img = HdrImage::blank(size, size);
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const double base = peak * std::pow(10.0, -kDecades * (1.0 - level[y * size + x]));
        for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = base * tint[c];
      }
    }
    const long oy = cy + (f - 1) * dy;
    const long ox = cx + (f - 1) * dx;
    const long h = static_cast<long>(half);
    for (long v = -h; v <= h; ++v) {
      for (long u = -h; u <= h; ++u) {
        const long y = oy + v;
        const long x = ox + u;
        if (y < 0 || x < 0 || y >= static_cast<long>(size) || x >= static_cast<long>(size)) continue;
        const double checker = ((v + h) / 2 + (u + h) / 2) % 2 == 0 ? 1.0 : 0.4;
        const double stripe = 1.0 + 0.3 * std::sin(0.9 * static_cast<double>(u + 2 * v));
        for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = sprite_color[c] * checker * stripe;
      }
    }
    for (double& v : img.values) v = round_float(v);
  }
  return frames;
}

Scene synth_dynamic_scene(std::uint64_t seed, std::size_t size, std::size_t motion_px,
                          double gamma) {
  const auto frames = synth_dynamic_frames(seed, size, motion_px);
  Scene scene;
  scene.exposures = kDefaultExposures;
  scene.gt = frames[1];
  for (std::size_t i = 0; i < 3; ++i) {
    scene.ldr[i] = quantized(synth_static_ldr(frames[i], scene.exposures[i], gamma));
  }
  return scene;
}

int dihedral_inverse(int id) {
  if (id < 0 || id >= kDihedralCount) throw ContractViolation("dihedral id out of range");
  return id >= 4 ? id : (4 - id) % 4;
}

std::vector<Sample> sample_patches(const Scene& scene, std::size_t n, std::size_t size,
                                   std::uint64_t seed) {
  if (size == 0 || scene.gt.height < size || scene.gt.width < size) {
    throw ContractViolation("scene " + std::to_string(scene.gt.width) + "x" +
                            std::to_string(scene.gt.height) + " is smaller than patch size " +
                            std::to_string(size));
  }
  std::vector<Sample> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, i));
    Sample s;
    s.crop_y = rng.uniform_int(scene.gt.height - size + 1);
    s.crop_x = rng.uniform_int(scene.gt.width - size + 1);
    s.augmentation = static_cast<int>(rng.uniform_int(kDihedralCount));
    s.exposures = scene.exposures;
    for (std::size_t f = 0; f < 3; ++f) {
      s.ldr[f] = dihedral(crop(scene.ldr[f], s.crop_y, s.crop_x, size, size), s.augmentation);
    }
    s.gt = dihedral(crop(scene.gt, s.crop_y, s.crop_x, size, size), s.augmentation);
    samples.push_back(std::move(s));
  }
  return samples;
}

Sample static_sample(const Scene& scene, std::size_t size, std::uint64_t seed, double gamma) {
  Scene gt_only;
  gt_only.gt = scene.gt;
  gt_only.exposures = scene.exposures;
  for (auto& ldr : gt_only.ldr) ldr = LdrImage::blank(scene.gt.height, scene.gt.width);
  Sample s = sample_patches(gt_only, 1, size, seed).front();
  for (std::size_t f = 0; f < 3; ++f) s.ldr[f] = synth_static_ldr(s.gt, s.exposures[f], gamma);
  s.is_static = true;
  return s;
}

std::size_t Batch::static_count() const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [](const Sample& s) { return s.is_static; }));
}

Batch make_batch(const std::vector<Scene>& dynamic_pool, const std::vector<Scene>& static_pool,
                 std::size_t batch_size, std::size_t patch_size, std::uint64_t seed,
                 double gamma) {
  if (batch_size == 0 || batch_size % 4 != 0) {
    throw ContractViolation("batch size " + std::to_string(batch_size) +
                            " is not a positive multiple of 4");
  }
  if (dynamic_pool.empty() || static_pool.empty()) {
    throw ContractViolation("make_batch needs non-empty dynamic and static pools");
  }
  const std::size_t dynamic = batch_size / 4 * 3;
  Batch batch;
  batch.samples.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    Rng rng(derive_seed(seed, i));
    if (i < dynamic) {
      const Scene& scene = dynamic_pool[rng.uniform_int(dynamic_pool.size())];
      batch.samples.push_back(sample_patches(scene, 1, patch_size, rng.next_u64()).front());
    } else {
      const Scene& scene = static_pool[rng.uniform_int(static_pool.size())];
      batch.samples.push_back(static_sample(scene, patch_size, rng.next_u64(), gamma));
    }
  }
  Rng shuffle(derive_seed(seed, batch_size));
  for (std::size_t i = batch_size - 1; i > 0; --i) {
    std::swap(batch.samples[i], batch.samples[shuffle.uniform_int(i + 1)]);
  }
  return batch;
}

SampleTensors to_tensors(const Sample& sample, double gamma) {
  SampleTensors t;
  for (std::size_t i = 0; i < 3; ++i) t.inputs[i] = build_input(sample.ldr[i], sample.exposures[i], gamma);
  t.gt = image_to_tensor(sample.gt);
  return t;
}

SampleTensors to_tensors(const Scene& scene, double gamma) {
  SampleTensors t;
  for (std::size_t i = 0; i < 3; ++i) t.inputs[i] = build_input(scene.ldr[i], scene.exposures[i], gamma);
  t.gt = image_to_tensor(scene.gt);
  return t;
}

}  // namespace hdrf
