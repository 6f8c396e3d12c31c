#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hdrf/tensor.hpp"

namespace hdrf {

struct AttentionOptions {
  std::size_t patch = 3;      // odd; patches are zero-padded, one per pixel
  double temperature = 10.0;  // softmax scale on cosine similarities
  double epsilon = 1e-8;      // added to every patch norm
  // Below this total well-exposedness, sum(1 - M), the output is all zero.
  double degenerate_threshold = 1e-6;
};

// Score matrices for N = H * W patches, row-major N x N with rows indexing
// query patches and columns indexing source patches.
struct AttentionScores {
  std::size_t count = 0;
  std::vector<double> softmax;   // rows sum to one
  std::vector<double> weighted;  // softmax times (1 - M) of the source
  bool degenerate = false;
};

AttentionScores attention_scores(const Tensor& feature, const Tensor& mask,
                                 const AttentionOptions& options = {});

// Adaptive contextual attention on a C x H x W feature with a 1 x H x W
// saturation mask. Every patch is rebuilt as a combination of all patches
// (cosine-similarity softmax weighted by source well-exposedness), then the
// overlapping patches are folded back and divided by their coverage count.
// A degenerate (fully saturated) mask yields zeros and appends a message to
// `diagnostics` when given.
Tensor contextual_attention(const Tensor& feature, const Tensor& mask,
                            const AttentionOptions& options = {},
                            std::vector<std::string>* diagnostics = nullptr);

// (1 - M) * coarse + M * fine, with the 1 x H x W mask broadcast over channels.
Tensor complete(const Tensor& coarse, const Tensor& fine, const Tensor& mask);

// Thresholded mask 1[max_c coarse(c, y, x) >= tau]; carries no gradient.
Tensor hard_saturation_mask(const Tensor& coarse, double tau);

}  // namespace hdrf
