#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "hdrf/networks.hpp"
#include "hdrf/tensor.hpp"

namespace hdrf {

// Every loss compares mu-law tonemapped values; `mu` is the tonemap constant.

// mean |T(pred) - T(target)|
Tensor recon_loss(const Tensor& pred, const Tensor& target, double mu = 5000.0);

// 1 - mean over pixels of the cosine between tonemapped RGB vectors, with
// epsilon added to the product of norms.
Tensor color_loss(const Tensor& pred, const Tensor& target, double mu = 5000.0,
                  double epsilon = 1e-8);

// (sum |dx| + sum |dy|) / (number of dx terms + number of dy terms) of T(pred),
// forward differences over the valid region.
Tensor tv_loss(const Tensor& pred, double mu = 5000.0);

// Fixed, non-trainable three-block convolutional feature pyramid used as the
// perceptual feature space. Block b is conv3x3 + ReLU, preceded by a 2x
// average pool for b > 1.
class PerceptualExtractor {
 public:
  static constexpr std::array<std::size_t, 4> kChannels = {3, 8, 16, 32};

  static PerceptualExtractor random(std::uint64_t seed);
  static PerceptualExtractor load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::array<Tensor, 3> features(const Tensor& image) const;

  const ParameterSet& weights() const { return weights_; }

 private:
  ParameterSet weights_;
};

// Sum over the three blocks of the mean l1 distance between the features of
// T(pred) and T(target).
Tensor perceptual_loss(const Tensor& pred, const Tensor& target,
                       const PerceptualExtractor& extractor, double mu = 5000.0);

enum class Output : std::size_t { kCoarse = 0, kFine = 1, kFinal = 2 };
enum class Term : std::size_t { kRecon = 0, kColor = 1, kPerceptual = 2, kTv = 3 };

inline constexpr std::array<const char*, 3> kOutputNames = {"coarse", "fine", "final"};
inline constexpr std::array<const char*, 4> kTermNames = {"recon", "color", "perceptual", "tv"};

using TermValues = std::array<double, 4>;

struct LossWeights {
  std::array<TermValues, 3> weights = {{
      {1.0, 1.0, 0.001, 0.1},
      {1.0, 1.0, 0.001, 0.1},
      {1.0, 0.0, 0.0, 0.0},
  }};

  double& at(Output o, Term t) {
    return weights[static_cast<std::size_t>(o)][static_cast<std::size_t>(t)];
  }
  double at(Output o, Term t) const {
    return weights[static_cast<std::size_t>(o)][static_cast<std::size_t>(t)];
  }
};

struct LossReport {
  std::array<TermValues, 3> terms{};   // unweighted values
  std::array<double, 3> per_output{};  // sum of weighted terms per output
  double total = 0.0;
  Tensor total_tensor;  // differentiable scalar
};

// Computes one term for one output. The default evaluator calls the loss
// functions above; tests may substitute their own.
using TermEvaluator = std::function<Tensor(Output, Term, const Tensor& pred, const Tensor& target)>;

TermEvaluator default_term_evaluator(const PerceptualExtractor& extractor, double mu = 5000.0);

// Weighted sum over the coarse, fine and final outputs. Terms with a zero
// weight are evaluated without recording gradients and are only reported.
LossReport total_loss(const std::array<Tensor, 3>& outputs, const Tensor& target,
                      const LossWeights& weights, const TermEvaluator& evaluate);

LossReport pipeline_loss(const PipelineOutputs& outputs, const Tensor& target,
                         const LossWeights& weights, const TermEvaluator& evaluate);

}  // namespace hdrf
