#include <gtest/gtest.h>

#include <cmath>

#include "hdrf/error.hpp"
#include "hdrf/losses.hpp"
#include "hdrf/ops.hpp"
#include "hdrf/radiometry.hpp"
#include "test_support.hpp"

using namespace hdrf;
using hdrf::testing::planar;
using hdrf::testing::random_uniform;
using hdrf::testing::scratch_dir;

namespace {

struct Pair {
  Tensor pred, target;
};

Pair random_pair(std::uint64_t seed, std::size_t h = 6, std::size_t w = 7) {
  Rng rng(seed);
  return {random_uniform(rng, {3, h, w}, 0.0, 1.5), random_uniform(rng, {3, h, w}, 0.0, 1.5)};
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

TermEvaluator constant_stub(std::array<TermValues, 3> table) {
  return [table](Output o, Term t, const Tensor& pred, const Tensor&) {
    return affine(sum(affine(pred, 0.0)), 1.0,
                  table[static_cast<std::size_t>(o)][static_cast<std::size_t>(t)]);
  };
}

}  // namespace

TEST(Recon, ZeroForIdenticalImages) {
  const Pair p = random_pair(1);
  EXPECT_EQ(recon_loss(p.pred, p.pred).item(), 0.0);
}

TEST(Recon, SinglePixelExample) {
  const Tensor pred = Tensor::from_data({3, 1, 1}, {0.5, 0.0, 1.0});
  const Tensor target = Tensor::from_data({3, 1, 1}, {0.0, 0.0, 1.0});
  EXPECT_NEAR(recon_loss(pred, target).item(), mu_law(0.5) / 3.0, 1e-15);
}

TEST(Recon, MatchesOracle) {
  const Pair p = random_pair(2);
  EXPECT_NEAR(recon_loss(p.pred, p.target).item(),
              oracle::recon_loss(planar(p.pred), planar(p.target), 5000.0), 1e-12);
  EXPECT_NEAR(recon_loss(p.pred, p.target, 50.0).item(),
              oracle::recon_loss(planar(p.pred), planar(p.target), 50.0), 1e-12);
}

TEST(Color, GreyscaleVectorsArePerfectlyAligned) {
  const Tensor pred = Tensor::full({3, 2, 2}, 0.2);
  const Tensor target = Tensor::full({3, 2, 2}, 0.9);
  EXPECT_NEAR(color_loss(pred, target).item(), 0.0, 1e-8);
}

TEST(Color, OrthogonalColoursCostOne) {
  const Tensor red = Tensor::from_data({3, 1, 1}, {1.0, 0.0, 0.0});
  const Tensor green = Tensor::from_data({3, 1, 1}, {0.0, 1.0, 0.0});
  EXPECT_NEAR(color_loss(red, green).item(), 1.0, 1e-15);
}

TEST(Color, MatchesOracle) {
  const Pair p = random_pair(3);
  EXPECT_NEAR(color_loss(p.pred, p.target).item(),
              oracle::color_loss(planar(p.pred), planar(p.target), 5000.0, 1e-8), 1e-12);
}

TEST(Tv, ConstantImageIsZero) {
  EXPECT_EQ(tv_loss(Tensor::full({3, 4, 5}, 0.3)).item(), 0.0);
}

TEST(Tv, VerticalStepClosedForm) {
  const std::size_t h = 4, w = 5;
  Tensor image = Tensor::zeros({3, h, w});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = h / 2; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) image.mutable_data()[(c * h + y) * w + x] = 0.5;
  const double count = 3.0 * static_cast<double>(h * (w - 1) + (h - 1) * w);
  EXPECT_NEAR(tv_loss(image).item(), 3.0 * w * mu_law(0.5) / count, 1e-15);
}

TEST(Tv, MatchesOracle) {
  const Pair p = random_pair(4);
  EXPECT_NEAR(tv_loss(p.pred).item(), oracle::tv_loss(planar(p.pred), 5000.0), 1e-12);
}

TEST(Perceptual, MatchesOracle) {
  const PerceptualExtractor extractor = PerceptualExtractor::random(7);
  std::vector<std::vector<double>> weights, biases;
  for (int b = 1; b <= 3; ++b) {
    const std::string name = "block" + std::to_string(b);
    weights.push_back(values(extractor.weights().at(name + ".weight")));
    biases.push_back(values(extractor.weights().at(name + ".bias")));
  }
  const std::vector<std::size_t> channels(PerceptualExtractor::kChannels.begin(),
                                          PerceptualExtractor::kChannels.end());
  const Pair p = random_pair(5, 9, 7);
  EXPECT_NEAR(perceptual_loss(p.pred, p.target, extractor).item(),
              oracle::perceptual_loss(planar(p.pred), planar(p.target), 5000.0, weights, biases, channels),
              1e-12);
  EXPECT_EQ(perceptual_loss(p.pred, p.pred, extractor).item(), 0.0);
}

TEST(Perceptual, FeatureShapes) {
  const auto features = PerceptualExtractor::random(1).features(Tensor::zeros({3, 9, 8}));
  EXPECT_EQ(features[0].shape(), (Shape{8, 9, 8}));
  EXPECT_EQ(features[1].shape(), (Shape{16, 5, 4}));
  EXPECT_EQ(features[2].shape(), (Shape{32, 3, 2}));
}

TEST(Perceptual, SaveLoadRoundTrip) {
  const auto dir = scratch_dir("perceptual");
  const PerceptualExtractor a = PerceptualExtractor::random(3);
  a.save(dir / "vgg.hdrf");
  const PerceptualExtractor b = PerceptualExtractor::load(dir / "vgg.hdrf");
  for (const auto& [name, tensor] : a.weights()) EXPECT_EQ(values(tensor), values(b.weights().at(name)));
}

TEST(Total, UnitStubsGiveDefaultWeightSum) {
  const Pair p = random_pair(6);
  std::array<TermValues, 3> ones;
  for (auto& row : ones) row = {1.0, 1.0, 1.0, 1.0};
  const LossReport report =
      total_loss({p.pred, p.pred, p.pred}, p.target, LossWeights{}, constant_stub(ones));
  EXPECT_NEAR(report.total, 5.202, 1e-12);
  EXPECT_NEAR(report.total_tensor.item(), 5.202, 1e-12);
  EXPECT_NEAR(report.per_output[0], 2.101, 1e-12);
  EXPECT_NEAR(report.per_output[2], 1.0, 1e-12);
}

TEST(Total, ZeroWeightTermsDoNotContribute) {
  const Pair p = random_pair(7);
  std::array<TermValues, 3> a;
  for (auto& row : a) row = {1.0, 1.0, 1.0, 1.0};
  auto b = a;
  b[2] = {1.0, 50.0, -3.0, 1e6};
  const LossWeights weights;
  const auto ra = total_loss({p.pred, p.pred, p.pred}, p.target, weights, constant_stub(a));
  const auto rb = total_loss({p.pred, p.pred, p.pred}, p.target, weights, constant_stub(b));
  EXPECT_EQ(ra.total, rb.total);
  EXPECT_EQ(rb.terms[2][1], 50.0);
  EXPECT_EQ(rb.terms[2][3], 1e6);
}

TEST(Total, LinearInWeights) {
  const Pair p = random_pair(8);
  const PerceptualExtractor extractor = PerceptualExtractor::random(2);
  const auto evaluate = default_term_evaluator(extractor);
  LossWeights w1;
  LossWeights w2;
  for (auto& row : w2.weights)
    for (double& v : row) v *= 2.5;
  const std::array<Tensor, 3> outputs = {p.pred, affine(p.pred, 0.5), p.target};
  const auto r1 = total_loss(outputs, p.target, w1, evaluate);
  const auto r2 = total_loss(outputs, p.target, w2, evaluate);
  EXPECT_NEAR(r2.total, 2.5 * r1.total, 1e-12);
}

TEST(Total, MatchesTermByTermSum) {
  const Pair p = random_pair(9);
  const PerceptualExtractor extractor = PerceptualExtractor::random(2);
  const std::array<Tensor, 3> outputs = {p.pred, affine(p.pred, 0.7), affine(p.pred, 1.1)};
  const auto report = total_loss(outputs, p.target, LossWeights{}, default_term_evaluator(extractor));
  double expected = 0.0;
  const LossWeights weights;
  for (std::size_t o = 0; o < 3; ++o) {
    const double terms[4] = {recon_loss(outputs[o], p.target).item(),
                             color_loss(outputs[o], p.target).item(),
                             perceptual_loss(outputs[o], p.target, extractor).item(),
                             tv_loss(outputs[o]).item()};
    for (std::size_t t = 0; t < 4; ++t) {
      EXPECT_NEAR(report.terms[o][t], terms[t], 1e-12);
      expected += weights.weights[o][t] * terms[t];
    }
  }
  EXPECT_NEAR(report.total, expected, 1e-12);
}

TEST(Total, GradientFlowsOnlyThroughWeightedTerms) {
  const Pair p = random_pair(10);
  Tensor pred = p.pred.clone().set_requires_grad();
  const PerceptualExtractor extractor = PerceptualExtractor::random(2);
  LossWeights weights;
  weights.weights = {};
  weights.at(Output::kFinal, Term::kRecon) = 1.0;
  const auto report = total_loss({pred, pred, pred}, p.target, weights, default_term_evaluator(extractor));
  backward(report.total_tensor);
  Tensor direct = p.pred.clone().set_requires_grad();
  backward(recon_loss(direct, p.target));
  EXPECT_LT(hdrf::testing::max_abs_diff(pred.grad(), direct.grad()), 1e-15);
  EXPECT_GT(report.terms[0][1], 0.0);
}

TEST(Losses, NegativeRadianceIsRejected) {
  const Pair p = random_pair(11);
  EXPECT_THROW(recon_loss(affine(p.pred, -1.0, -0.1), p.target), ContractViolation);
}
