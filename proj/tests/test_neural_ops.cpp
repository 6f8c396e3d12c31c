#include <gtest/gtest.h>

#include <cmath>

#include "hdrf/attention.hpp"
#include "hdrf/conv.hpp"
#include "hdrf/deform.hpp"
#include "hdrf/error.hpp"
#include "hdrf/ops.hpp"
#include "test_support.hpp"

using namespace hdrf;
using hdrf::testing::max_abs_diff;
using hdrf::testing::planar;
using hdrf::testing::random_normal;
using hdrf::testing::random_uniform;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

DeformableKernelField identity_field(std::size_t h, std::size_t w) {
  Tensor k = Tensor::zeros({9, h, w});
  for (std::size_t i = 0; i < h * w; ++i) k.mutable_data()[4 * h * w + i] = 1.0;
  return {k, Tensor::zeros({18, h, w})};
}

}  // namespace

TEST(Conv2d, OneByOneIdentityKernel) {
  Rng rng(1);
  const Tensor x = random_normal(rng, {3, 4, 5});
  Tensor w = Tensor::zeros({3, 3, 1, 1});
  for (std::size_t c = 0; c < 3; ++c) w.mutable_data()[c * 3 + c] = 1.0;
  EXPECT_EQ(values(conv2d(x, w, Tensor())), values(x));
}

TEST(Conv2d, AllOnesKernelOnOnesInterior) {
  const std::size_t c = 4;
  const Tensor x = Tensor::full({c, 5, 5}, 1.0);
  const Tensor w = Tensor::full({1, c, 3, 3}, 1.0);
  const Tensor y = conv2d(x, w, Tensor::zeros({1}));
  ASSERT_EQ(y.shape(), (Shape{1, 5, 5}));
  EXPECT_EQ(y.data()[2 * 5 + 2], 9.0 * c);
  EXPECT_EQ(y.data()[0], 4.0 * c);
}

TEST(Conv2d, MatchesOracleAcrossOptions) {
  struct Case {
    std::size_t in, out, k, stride, dilation, pad, h, w;
  };
  for (const Case& cs : {Case{2, 3, 3, 1, 1, 1, 6, 7}, Case{3, 2, 3, 2, 1, 1, 7, 6},
                         Case{2, 2, 3, 1, 2, 2, 8, 8}, Case{4, 5, 1, 1, 1, 0, 3, 5},
                         Case{1, 1, 5, 1, 1, 0, 6, 6}}) {
    Rng rng(cs.in * 100 + cs.k);
    const Tensor x = random_normal(rng, {cs.in, cs.h, cs.w});
    const Tensor w = random_normal(rng, {cs.out, cs.in, cs.k, cs.k});
    const Tensor b = random_normal(rng, {cs.out});
    const Tensor y = conv2d(x, w, b, {.stride = cs.stride, .dilation = cs.dilation, .padding = cs.pad});
    const oracle::Planar ref =
        oracle::conv2d(planar(x), values(w), cs.out, cs.k, values(b), cs.stride, cs.dilation, cs.pad);
    ASSERT_EQ(y.shape(), (Shape{ref.channels, ref.height, ref.width}));
    EXPECT_LT(max_abs_diff(y.data(), ref.values), 1e-12);
  }
}

TEST(Conv2d, ShapeMismatchIsContractViolation) {
  EXPECT_THROW(conv2d(Tensor::zeros({2, 4, 4}), Tensor::zeros({1, 3, 3, 3}), Tensor()),
               ContractViolation);
}

TEST(Pooling, AveragePoolHandlesOddSizes) {
  const Tensor x = Tensor::from_data({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Tensor y = avg_pool2(x);
  ASSERT_EQ(y.shape(), (Shape{1, 2, 2}));
  EXPECT_DOUBLE_EQ(y.data()[0], 3.0);
  EXPECT_DOUBLE_EQ(y.data()[1], 4.5);
  EXPECT_DOUBLE_EQ(y.data()[2], 7.5);
  EXPECT_DOUBLE_EQ(y.data()[3], 9.0);
  const Tensor up = upsample_nearest(y, 2, 3, 3);
  EXPECT_EQ(values(up), (std::vector<double>{3, 3, 4.5, 3, 3, 4.5, 7.5, 7.5, 9}));
}

TEST(Bilinear, ExactOnLattice) {
  Rng rng(3);
  const Tensor f = random_normal(rng, {2, 4, 5});
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 5; ++x) {
      const auto v = bilinear_sample(f, static_cast<double>(y), static_cast<double>(x));
      EXPECT_EQ(v[0], f.data()[y * 5 + x]);
      EXPECT_EQ(v[1], f.data()[20 + y * 5 + x]);
    }
}

TEST(Bilinear, CenterOfFourIsTheirMean) {
  const Tensor f = Tensor::from_data({1, 2, 2}, {1.0, 2.0, 3.0, 6.0});
  EXPECT_DOUBLE_EQ(bilinear_sample(f, 0.5, 0.5)[0], 3.0);
  const Tensor flat = Tensor::full({1, 2, 2}, 7.0);
  EXPECT_DOUBLE_EQ(bilinear_sample(flat, 0.5, 0.5)[0], 7.0);
}

TEST(Bilinear, OutsideTheMapIsZero) {
  const Tensor f = Tensor::full({1, 2, 2}, 1.0);
  EXPECT_EQ(bilinear_sample(f, -3.0, 0.0)[0], 0.0);
  EXPECT_DOUBLE_EQ(bilinear_sample(f, -0.5, 0.0)[0], 0.5);
}

TEST(Bilinear, MatchesOracle) {
  Rng rng(4);
  const Tensor f = random_normal(rng, {3, 6, 7});
  const auto ref = planar(f);
  for (int i = 0; i < 500; ++i) {
    const double y = rng.uniform(-2.0, 8.0);
    const double x = rng.uniform(-2.0, 9.0);
    EXPECT_LT(max_abs_diff(bilinear_sample(f, y, x), oracle::bilinear(ref, y, x)), 1e-12);
  }
}

TEST(Bilinear, GatherMatchesPointSamples) {
  Rng rng(5);
  const Tensor f = random_normal(rng, {2, 5, 5});
  const Tensor points = Tensor::from_data({3, 2}, {0.25, 1.5, 3.0, 3.0, -0.75, 4.5});
  const Tensor g = sample_points(f, points);
  ASSERT_EQ(g.shape(), (Shape{2, 3}));
  for (std::size_t p = 0; p < 3; ++p) {
    const auto v = bilinear_sample(f, points.data()[2 * p], points.data()[2 * p + 1]);
    EXPECT_EQ(g.data()[p], v[0]);
    EXPECT_EQ(g.data()[3 + p], v[1]);
  }
}

TEST(DeformConv, CenterTapWithZeroOffsetsIsIdentity) {
  Rng rng(6);
  const Tensor f = random_normal(rng, {3, 5, 6});
  EXPECT_EQ(values(pixel_adaptive_deformable_conv(f, identity_field(5, 6))), values(f));
}

TEST(DeformConv, ConstantInputScalesByKernelSum) {
  Rng rng(7);
  const std::size_t h = 6, w = 6;
  const Tensor f = Tensor::full({2, h, w}, 2.5);
  const Tensor k = random_normal(rng, {9, h, w});
  // Offsets small enough that every interior tap stays inside the map.
  const Tensor o = random_uniform(rng, {18, h, w}, -0.4, 0.4);
  const Tensor out = pixel_adaptive_deformable_conv(f, {k, o});
  for (std::size_t y = 2; y + 2 < h; ++y)
    for (std::size_t x = 2; x + 2 < w; ++x) {
      double ksum = 0.0;
      for (std::size_t n = 0; n < 9; ++n) ksum += k.data()[(n * h + y) * w + x];
      EXPECT_NEAR(out.data()[y * w + x], 2.5 * ksum, 1e-12);
      EXPECT_NEAR(out.data()[h * w + y * w + x], 2.5 * ksum, 1e-12);
    }
}

TEST(DeformConv, MatchesOracle) {
  Rng rng(8);
  const Tensor f = random_normal(rng, {3, 7, 6});
  const Tensor k = random_normal(rng, {9, 7, 6});
  const Tensor o = random_normal(rng, {18, 7, 6}, 1.5);
  const Tensor out = pixel_adaptive_deformable_conv(f, {k, o});
  const auto ref = oracle::deform_conv(planar(f), planar(k), planar(o));
  EXPECT_LT(max_abs_diff(out.data(), ref.values), 1e-12);
}

TEST(DeformConv, IntegerOffsetShiftsTaps) {
  Rng rng(9);
  const Tensor f = random_normal(rng, {1, 5, 5});
  DeformableKernelField field = identity_field(5, 5);
  // Centre tap moved one column right.
  for (std::size_t i = 0; i < 25; ++i) field.offsets.mutable_data()[9 * 25 + i] = 1.0;
  const Tensor out = pixel_adaptive_deformable_conv(f, field);
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x + 1 < 5; ++x) EXPECT_EQ(out.data()[y * 5 + x], f.data()[y * 5 + x + 1]);
}

TEST(Attention, SinglePixelReturnsWellExposedFraction) {
  const Tensor f = Tensor::from_data({2, 1, 1}, {0.7, -1.2});
  const Tensor m = Tensor::from_data({1, 1, 1}, {0.25});
  const Tensor out = contextual_attention(f, m);
  EXPECT_NEAR(out.data()[0], 0.75 * 0.7, 1e-12);
  EXPECT_NEAR(out.data()[1], 0.75 * -1.2, 1e-12);
}

TEST(Attention, OrthogonalSourcesConcentrateOnSelf) {
  const Tensor f = Tensor::from_data({2, 1, 2}, {1.0, 0.0, 0.0, 1.0});
  const Tensor m = Tensor::zeros({1, 1, 2});
  const auto scores = attention_scores(f, m, {.patch = 1});
  ASSERT_EQ(scores.count, 2u);
  EXPECT_GT(scores.softmax[0], 0.99);
  EXPECT_GT(scores.softmax[3], 0.99);
}

TEST(Attention, MatchesOracle) {
  Rng rng(10);
  const Tensor f = random_normal(rng, {3, 5, 6});
  const Tensor m = random_uniform(rng, {1, 5, 6}, 0.0, 1.0);
  const AttentionOptions options;
  const Tensor out = contextual_attention(f, m, options);
  const auto scores = attention_scores(f, m, options);
  const auto ref = oracle::contextual_attention(planar(f), values(m), options.patch,
                                                options.temperature, options.epsilon);
  EXPECT_LT(max_abs_diff(out.data(), ref.output.values), 1e-5);
  EXPECT_LT(max_abs_diff(scores.softmax, ref.softmax), 1e-5);
  EXPECT_LT(max_abs_diff(scores.weighted, ref.weighted), 1e-5);
}

TEST(Attention, SoftmaxRowsSumToOne) {
  Rng rng(11);
  const Tensor f = random_normal(rng, {2, 4, 4});
  const Tensor m = random_uniform(rng, {1, 4, 4}, 0.0, 1.0);
  const auto scores = attention_scores(f, m);
  for (std::size_t q = 0; q < scores.count; ++q) {
    double row = 0.0;
    for (std::size_t s = 0; s < scores.count; ++s) row += scores.softmax[q * scores.count + s];
    EXPECT_NEAR(row, 1.0, 1e-12);
  }
}

TEST(Attention, ScoresIgnorePerPatchScale) {
  Rng rng(12);
  const Tensor f = random_normal(rng, {3, 4, 4});
  Tensor scaled = f.clone();
  for (std::size_t p = 0; p < 16; ++p) {
    const double s = rng.uniform(0.5, 4.0);
    for (std::size_t c = 0; c < 3; ++c) scaled.mutable_data()[c * 16 + p] *= s;
  }
  const Tensor m = random_uniform(rng, {1, 4, 4}, 0.0, 1.0);
  const auto a = attention_scores(f, m, {.patch = 1});
  const auto b = attention_scores(scaled, m, {.patch = 1});
  EXPECT_LT(max_abs_diff(a.softmax, b.softmax), 1e-6);
}

TEST(Attention, FullySaturatedMaskIsDegenerate) {
  Rng rng(13);
  const Tensor f = random_normal(rng, {2, 3, 3});
  std::vector<std::string> diagnostics;
  const Tensor out = contextual_attention(f, Tensor::full({1, 3, 3}, 1.0), {}, &diagnostics);
  EXPECT_EQ(max_abs_diff(out.data(), std::vector<double>(out.numel(), 0.0)), 0.0);
  ASSERT_EQ(diagnostics.size(), 1u);
  EXPECT_TRUE(attention_scores(f, Tensor::full({1, 3, 3}, 1.0)).degenerate);
}

TEST(Complete, BlendsByMask) {
  const Tensor coarse = Tensor::full({3, 1, 3}, 2.0);
  const Tensor fine = Tensor::full({3, 1, 3}, 6.0);
  const Tensor mask = Tensor::from_data({1, 1, 3}, {0.0, 1.0, 0.5});
  const Tensor out = complete(coarse, fine, mask);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(out.data()[c * 3 + 0], 2.0);
    EXPECT_EQ(out.data()[c * 3 + 1], 6.0);
    EXPECT_EQ(out.data()[c * 3 + 2], 4.0);
  }
}

TEST(Complete, HardMaskThresholdsChannelMaximum) {
  const Tensor coarse = Tensor::from_data({3, 1, 3}, {0.1, 0.95, 0.2, 0.3, 0.1, 0.9, 0.0, 0.0, 0.1});
  const Tensor m = hard_saturation_mask(coarse, 0.9);
  EXPECT_EQ(values(m), (std::vector<double>{0.0, 1.0, 1.0}));
  EXPECT_FALSE(m.requires_grad());
}
