#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "hdrf/dataset.hpp"
#include "hdrf/error.hpp"
#include "hdrf/radiometry.hpp"
#include "test_support.hpp"

using namespace hdrf;
using hdrf::testing::scratch_dir;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

HdrImage composited_middle(std::uint64_t seed, std::size_t size) {
  return synth_dynamic_frames(seed, size, 0)[1];
}

}  // namespace

TEST(LoadScene, ParsesExposureTimes) {
  const auto dir = scratch_dir("scene_times");
  save_scene(synth_dynamic_scene(1, 16, 2), dir);
  write_text(dir / "exposures.txt", "0.25\n1\n4\n");
  const Scene scene = load_scene(dir);
  EXPECT_EQ(scene.exposures, (std::array<double, 3>{0.25, 1.0, 4.0}));
}

TEST(LoadScene, BiasModeUsesPowersOfTwo) {
  const auto dir = scratch_dir("scene_bias");
  save_scene(synth_dynamic_scene(1, 16, 2), dir);
  write_text(dir / "exposures.txt", "-2\n0\n2\n");
  EXPECT_EQ(load_scene(dir, ExposureFormat::kBias).exposures, (std::array<double, 3>{0.25, 1.0, 4.0}));
}

TEST(LoadScene, DecreasingExposuresAreRejected) {
  const auto dir = scratch_dir("scene_order");
  save_scene(synth_dynamic_scene(1, 16, 2), dir);
  write_text(dir / "exposures.txt", "4\n1\n0.25\n");
  try {
    load_scene(dir);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("exposures.txt"), std::string::npos);
  }
}

TEST(LoadScene, MalformedExposureFile) {
  const auto dir = scratch_dir("scene_badexp");
  save_scene(synth_dynamic_scene(1, 16, 2), dir);
  write_text(dir / "exposures.txt", "0.25\nfast\n4\n");
  EXPECT_THROW(load_scene(dir), IoError);
  write_text(dir / "exposures.txt", "0.25\n1\n");
  EXPECT_THROW(load_scene(dir), IoError);
  write_text(dir / "exposures.txt", "0.25\n1\n4\n8\n");
  EXPECT_THROW(load_scene(dir), IoError);
}

TEST(LoadScene, MissingFileIsNamed) {
  const auto dir = scratch_dir("scene_missing");
  save_scene(synth_dynamic_scene(1, 16, 2), dir);
  std::filesystem::remove(dir / "ldr_2.ppm");
  try {
    load_scene(dir);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("ldr_2.ppm"), std::string::npos);
  }
}

TEST(LoadScene, SizeMismatchIsRejected) {
  const auto dir = scratch_dir("scene_size");
  save_scene(synth_dynamic_scene(1, 16, 2), dir);
  write_ppm(LdrImage::blank(16, 15), dir / "ldr_0.ppm");
  EXPECT_THROW(load_scene(dir), IoError);
}

TEST(LoadScene, SyntheticSceneRoundTrip) {
  const auto dir = scratch_dir("scene_roundtrip");
  const Scene scene = synth_dynamic_scene(3, 24, 4);
  save_scene(scene, dir);
  EXPECT_EQ(load_scene(dir), scene);
}

TEST(StaticScene, FramesAreRenderedFromGroundTruth) {
  const HdrImage hdr = composited_middle(4, 16);
  const Scene scene = make_static_scene(hdr, kDefaultExposures);
  EXPECT_EQ(scene.gt, hdr);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(scene.ldr[i], synth_static_ldr(hdr, kDefaultExposures[i]));
    const HdrImage back = ldr_to_hdr(scene.ldr[i], kDefaultExposures[i]);
    for (std::size_t k = 0; k < hdr.values.size(); ++k) {
      if (scene.ldr[i].values[k] < 1.0) {
        EXPECT_NEAR(back.values[k], hdr.values[k], 1e-6);
      } else {
        EXPECT_GE(hdr.values[k] * kDefaultExposures[i], 1.0);
      }
    }
  }
}

TEST(SynthScene, ZeroMotionEqualsStaticStack) {
  const Scene dynamic = synth_dynamic_scene(5, 20, 0);
  const Scene still = make_static_scene(dynamic.gt, kDefaultExposures, 2.2, true);
  EXPECT_EQ(dynamic, still);
}

TEST(SynthScene, SeedDeterminesScene) {
  EXPECT_EQ(synth_dynamic_scene(6, 20, 3), synth_dynamic_scene(6, 20, 3));
  EXPECT_NE(synth_dynamic_scene(6, 20, 3).gt, synth_dynamic_scene(7, 20, 3).gt);
}

TEST(SynthScene, SpriteMovesBetweenFrames) {
  const auto frames = synth_dynamic_frames(8, 24, 3);
  EXPECT_NE(frames[0], frames[1]);
  EXPECT_NE(frames[2], frames[1]);
  EXPECT_EQ(synth_dynamic_scene(8, 24, 3).gt, frames[1]);
}

TEST(SynthScene, DynamicRangeSpansTwoDecades) {
  const HdrImage gt = composited_middle(9, 32);
  double lo = INFINITY, hi = 0.0;
  for (double v : gt.values) {
    EXPECT_GT(v, 0.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GE(hi / lo, 100.0);
}

TEST(SynthScene, LongExposureSaturatesOverHundredSeeds) {
  std::size_t bright = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scene scene = synth_dynamic_scene(seed, 32, 4);
    double peak = 0.0;
    for (double v : scene.gt.values) peak = std::max(peak, v);
    if (peak * scene.exposures[2] < 4.0) continue;
    ++bright;
    std::size_t clipped = 0;
    for (double v : scene.ldr[2].values) clipped += v == 1.0;
    EXPECT_GE(static_cast<double>(clipped), 0.05 * scene.ldr[2].values.size()) << seed;
  }
  EXPECT_GE(bright, 50u);
}

TEST(Dihedral, IdentityAndInverse) {
  const HdrImage image = composited_middle(10, 5);
  HdrImage rect = HdrImage::blank(3, 5);
  for (std::size_t i = 0; i < rect.values.size(); ++i) rect.values[i] = static_cast<double>(i);
  EXPECT_EQ(dihedral(rect, 0), rect);
  std::set<std::vector<double>> distinct;
  for (int id = 0; id < kDihedralCount; ++id) {
    const HdrImage t = dihedral(rect, id);
    EXPECT_EQ(dihedral(t, dihedral_inverse(id)), rect) << id;
    EXPECT_EQ(dihedral(dihedral(image, id), dihedral_inverse(id)), image) << id;
    distinct.insert(t.values);
  }
  EXPECT_EQ(distinct.size(), 8u);
  EXPECT_THROW(dihedral_inverse(8), ContractViolation);
}

TEST(Dihedral, EncodingOnTwoByTwo) {
  HdrImage image = HdrImage::blank(2, 2);
  // Channel 0 holds a b / c d.
  image.at(0, 0, 0) = 1;
  image.at(0, 1, 0) = 2;
  image.at(1, 0, 0) = 3;
  image.at(1, 1, 0) = 4;
  auto corners = [](const HdrImage& m) {
    return std::vector<double>{m.at(0, 0, 0), m.at(0, 1, 0), m.at(1, 0, 0), m.at(1, 1, 0)};
  };
  EXPECT_EQ(corners(dihedral(image, 1)), (std::vector<double>{2, 4, 1, 3}));
  EXPECT_EQ(corners(dihedral(image, 4)), (std::vector<double>{2, 1, 4, 3}));
}

TEST(SamplePatches, CropsStayInBounds) {
  const Scene scene = synth_dynamic_scene(11, 20, 2);
  const auto samples = sample_patches(scene, 10000, 7, 12);
  ASSERT_EQ(samples.size(), 10000u);
  std::set<int> augmentations;
  for (const Sample& s : samples) {
    ASSERT_LE(s.crop_y + 7, 20u);
    ASSERT_LE(s.crop_x + 7, 20u);
    augmentations.insert(s.augmentation);
  }
  EXPECT_EQ(augmentations.size(), 8u);
}

TEST(SamplePatches, SameTransformForEveryImage) {
  const Scene scene = synth_dynamic_scene(13, 20, 2);
  for (const Sample& s : sample_patches(scene, 20, 9, 14)) {
    EXPECT_EQ(s.gt, dihedral(crop(scene.gt, s.crop_y, s.crop_x, 9, 9), s.augmentation));
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(s.ldr[i], dihedral(crop(scene.ldr[i], s.crop_y, s.crop_x, 9, 9), s.augmentation));
    }
    EXPECT_FALSE(s.is_static);
  }
}

TEST(SamplePatches, SampleDependsOnlyOnSeedAndIndex) {
  const Scene scene = synth_dynamic_scene(15, 20, 2);
  const auto few = sample_patches(scene, 3, 8, 99);
  const auto many = sample_patches(scene, 30, 8, 99);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(few[i].gt, many[i].gt);
    EXPECT_EQ(few[i].augmentation, many[i].augmentation);
  }
}

TEST(SamplePatches, PatchLargerThanSceneIsRejected) {
  EXPECT_THROW(sample_patches(synth_dynamic_scene(1, 16, 2), 1, 17, 0), ContractViolation);
}

TEST(StaticSample, FramesMatchGroundTruthBitForBit) {
  const Scene scene = synth_dynamic_scene(16, 24, 5);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Sample s = static_sample(scene, 10, seed);
    EXPECT_TRUE(s.is_static);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(s.ldr[i], synth_static_ldr(s.gt, s.exposures[i]));
  }
}

TEST(Batch, SixteenSplitsTwelveToFour) {
  const std::vector<Scene> pool = {synth_dynamic_scene(1, 16, 2), synth_dynamic_scene(2, 16, 2)};
  const Batch batch = make_batch(pool, pool, 16, 8, 3);
  EXPECT_EQ(batch.samples.size(), 16u);
  EXPECT_EQ(batch.dynamic_count(), 12u);
  EXPECT_EQ(batch.static_count(), 4u);
}

TEST(Batch, FourSplitsThreeToOne) {
  const std::vector<Scene> pool = {synth_dynamic_scene(1, 16, 2)};
  const Batch batch = make_batch(pool, pool, 4, 8, 3);
  EXPECT_EQ(batch.dynamic_count(), 3u);
  EXPECT_EQ(batch.static_count(), 1u);
}

TEST(Batch, IndivisibleSizeIsRejected) {
  const std::vector<Scene> pool = {synth_dynamic_scene(1, 16, 2)};
  EXPECT_THROW(make_batch(pool, pool, 10, 8, 3), ContractViolation);
  EXPECT_THROW(make_batch(pool, pool, 0, 8, 3), ContractViolation);
  EXPECT_THROW(make_batch({}, pool, 4, 8, 3), ContractViolation);
}

TEST(Batch, DeterministicAndShuffled) {
  const std::vector<Scene> pool = {synth_dynamic_scene(1, 16, 2), synth_dynamic_scene(2, 16, 2)};
  const Batch a = make_batch(pool, pool, 16, 8, 21);
  const Batch b = make_batch(pool, pool, 16, 8, 21);
  std::set<std::size_t> static_positions;
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_EQ(a.samples[i].gt, b.samples[i].gt);
    EXPECT_EQ(a.samples[i].is_static, b.samples[i].is_static);
  }
  bool any_order_differs = false;
  for (std::uint64_t seed = 0; seed < 8 && !any_order_differs; ++seed) {
    const Batch c = make_batch(pool, pool, 16, 8, seed);
    for (std::size_t i = 0; i < 16; ++i) any_order_differs |= c.samples[i].is_static != a.samples[i].is_static;
  }
  EXPECT_TRUE(any_order_differs);
}

TEST(Tensors, SampleInputsFollowExposures) {
  const Scene scene = synth_dynamic_scene(17, 12, 2);
  const SampleTensors t = to_tensors(scene);
  for (std::size_t i = 0; i < 3; ++i) {
    const Tensor expected = build_input(scene.ldr[i], scene.exposures[i]);
    EXPECT_TRUE(std::equal(t.inputs[i].data().begin(), t.inputs[i].data().end(), expected.data().begin()));
  }
  EXPECT_EQ(tensor_to_hdr(t.gt), scene.gt);
}
