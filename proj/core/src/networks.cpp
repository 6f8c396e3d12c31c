#include "hdrf/networks.hpp"

#include <cmath>

#include "hdrf/attention.hpp"
#include "hdrf/conv.hpp"
#include "hdrf/error.hpp"
#include "hdrf/ops.hpp"
#include "hdrf/rng.hpp"

namespace hdrf {
namespace {

constexpr std::size_t kInputChannels = 6;

void add_conv(std::vector<ParameterSpec>& specs, const std::string& name, std::size_t out,
              std::size_t in, std::size_t k = 3) {
  specs.push_back({name + ".weight", {out, in, k, k}});
  specs.push_back({name + ".bias", {out}});
}

Tensor conv(const Tensor& x, const ParameterSet& params, const std::string& name,
            const Conv2dOptions& options = {}) {
  return conv2d(x, params.at(name + ".weight"), params.at(name + ".bias"), options);
}

Tensor conv_relu(const Tensor& x, const ParameterSet& params, const std::string& name,
                 const Conv2dOptions& options = {}) {
  return relu(conv(x, params, name, options));
}

std::vector<Tensor> reference_branch(const Tensor& x, const ParameterSet& params,
                                     const std::string& prefix, const ModelConfig& config) {
  std::vector<Tensor> levels;
  Tensor current = x;
  for (std::size_t l = 1; l <= config.extractor_levels; ++l) {
    current = conv_relu(current, params, prefix + ".ref" + std::to_string(l));
    levels.push_back(current);
  }
  return levels;
}

void require_input(const Tensor& x, const char* what) {
  if (x.dim() != 3 || x.size(0) != kInputChannels) {
    throw ContractViolation(std::string(what) + " must be 6 x H x W, got " +
                            shape_string(x.shape()));
  }
}

}  // namespace

void ParameterSet::add(std::string name, Tensor value) {
  if (index_.count(name)) throw ContractViolation("duplicate parameter '" + name + "'");
  value.set_name(name);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(value));
}

const Tensor& ParameterSet::at(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw ContractViolation("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

Tensor& ParameterSet::at(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) throw ContractViolation("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

std::size_t ParameterSet::element_count() const {
  std::size_t total = 0;
  for (const auto& [name, tensor] : entries_) total += tensor.numel();
  return total;
}

void ParameterSet::zero_grad() {
  for (auto& [name, tensor] : entries_) tensor.zero_grad();
}

ParameterSet ParameterSet::clone() const {
  ParameterSet copy;
  for (const auto& [name, tensor] : entries_) {
    Tensor t = tensor.clone();
    t.set_requires_grad(tensor.requires_grad());
    copy.add(name, t);
  }
  return copy;
}

std::vector<ParameterSpec> parameter_specs(const ModelConfig& config) {
  if (config.width == 0 || config.extractor_levels == 0) {
    throw ContractViolation("model width and extractor levels must be positive");
  }
  const std::size_t c = config.width;
  std::vector<ParameterSpec> specs;
  for (const std::string& prefix : kBanPrefixes) {
    for (std::size_t l = 1; l <= config.extractor_levels; ++l) {
      add_conv(specs, prefix + ".ref" + std::to_string(l), c, l == 1 ? kInputChannels : c);
    }
    for (std::size_t l = 1; l <= config.extractor_levels; ++l) {
      add_conv(specs, prefix + ".sup" + std::to_string(l), c, l == 1 ? kInputChannels : 2 * c);
    }
    add_conv(specs, prefix + ".kernel1", c, 2 * c);
    add_conv(specs, prefix + ".kernel2", kTapCount, c);
    add_conv(specs, prefix + ".offset1", c, 2 * c);
    add_conv(specs, prefix + ".offset2", 2 * kTapCount, c);
  }
  add_conv(specs, "mahn.merge", 2 * c, 3 * c, 1);
  for (std::size_t i = 1; i <= config.residual_blocks; ++i) {
    add_conv(specs, "mahn.res" + std::to_string(i) + "a", 2 * c, 2 * c);
    add_conv(specs, "mahn.res" + std::to_string(i) + "b", 2 * c, 2 * c);
  }
  add_conv(specs, "mahn.coarse_out", 3, 2 * c);
  add_conv(specs, "mahn.mask", 1, 2 * c);
  add_conv(specs, "mahn.refine1", c, 2 * c + 1);
  add_conv(specs, "mahn.refine2", c, c);
  add_conv(specs, "mahn.refine3", c, c);
  add_conv(specs, "mahn.hall_down", c, 2 * c + 1);
  add_conv(specs, "mahn.hall_up", c, c);
  add_conv(specs, "mahn.fuse", c, 2 * c);
  add_conv(specs, "mahn.fine_out", 3, c);
  return specs;
}

std::size_t parameter_count(const ModelConfig& config) {
  std::size_t total = 0;
  for (const ParameterSpec& spec : parameter_specs(config)) total += shape_numel(spec.shape);
  return total;
}

ParameterSet init_parameters(const ModelConfig& config, std::uint64_t seed) {
  ParameterSet params;
  Rng rng(seed);
  for (const ParameterSpec& spec : parameter_specs(config)) {
    Tensor t = Tensor::zeros(spec.shape);
    const bool zero_init = spec.name.find(".offset2.") != std::string::npos;
    if (spec.shape.size() == 4 && !zero_init) {
      const double fan_in = static_cast<double>(spec.shape[1] * spec.shape[2] * spec.shape[3]);
      const double stddev = std::sqrt(2.0 / fan_in);
      for (double& v : t.mutable_data()) v = stddev * rng.normal();
    }
    t.set_requires_grad(true);
    params.add(spec.name, t);
  }
  return params;
}

BanFeatures ban_feature_extract(const Tensor& x_ref, const Tensor& x_sup,
                                const ParameterSet& params, const std::string& prefix,
                                const ModelConfig& config) {
  require_input(x_ref, "reference input");
  require_input(x_sup, "supporting input");
  if (x_ref.shape() != x_sup.shape()) {
    throw ContractViolation("reference and supporting inputs differ in size");
  }
  BanFeatures features;
  features.reference = reference_branch(x_ref, params, prefix, config);
  Tensor current = x_sup;
  for (std::size_t l = 1; l <= config.extractor_levels; ++l) {
    if (l > 1) current = concat({current, features.reference[l - 2]});
    current = conv_relu(current, params, prefix + ".sup" + std::to_string(l));
    features.supporting.push_back(current);
  }
  features.fused = concat({features.supporting.back(), features.reference.back()});
  return features;
}

BanOutput ban_forward(const Tensor& x_ref, const Tensor& x_sup, const ParameterSet& params,
                      const std::string& prefix, const ModelConfig& config) {
  const BanFeatures features = ban_feature_extract(x_ref, x_sup, params, prefix, config);
  BanOutput out;
  out.field.kernels =
      conv(conv_relu(features.fused, params, prefix + ".kernel1"), params, prefix + ".kernel2");
  out.field.offsets =
      conv(conv_relu(features.fused, params, prefix + ".offset1"), params, prefix + ".offset2");
  const Tensor source = config.mode == AdjustmentMode::kBrightness
                            ? features.reference.back()
                            : reference_branch(x_sup, params, prefix, config).back();
  out.adjusted = pixel_adaptive_deformable_conv(source, out.field);
  return out;
}

BanOutput motion_compensation_forward(const Tensor& x_ref, const Tensor& x_sup,
                                      const ParameterSet& params, const std::string& prefix,
                                      ModelConfig config) {
  config.mode = AdjustmentMode::kMotionCompensation;
  return ban_forward(x_ref, x_sup, params, prefix, config);
}

PipelineOutputs mahn_forward(const std::array<Tensor, 3>& adjusted, const ParameterSet& params,
                             const ModelConfig& config) {
  for (const Tensor& f : adjusted) {
    if (f.shape() != adjusted[0].shape() || f.dim() != 3 || f.size(0) != config.width) {
      throw ContractViolation("merge network expects three c x H x W features");
    }
  }
  const std::size_t height = adjusted[0].size(1);
  const std::size_t width = adjusted[0].size(2);
  PipelineOutputs out;
  out.adjusted = adjusted;

  // Coarse merge.
  Tensor x = relu(conv(concat({adjusted[0], adjusted[1], adjusted[2]}), params, "mahn.merge"));
  for (std::size_t i = 1; i <= config.residual_blocks; ++i) {
    const std::string a = "mahn.res" + std::to_string(i) + "a";
    const std::string b = "mahn.res" + std::to_string(i) + "b";
    x = residual_block(x, params.at(a + ".weight"), params.at(a + ".bias"),
                       params.at(b + ".weight"), params.at(b + ".bias"));
  }
  out.coarse = relu(conv(x, params, "mahn.coarse_out"));

  if (config.mask_mode == MaskMode::kSoft) {
    out.mask_logits = conv(x, params, "mahn.mask");
    out.mask = sigmoid(out.mask_logits, config.mask_softness);
  } else {
    out.mask = hard_saturation_mask(out.coarse, config.hard_mask_threshold);
  }

  // Fine network: local refinement plus hallucination by contextual attention
  // at half resolution.
  const Tensor fine_in = concat({x, out.mask});
  Tensor refined = conv_relu(fine_in, params, "mahn.refine1", {.dilation = 1, .padding = {}});
  refined = conv_relu(refined, params, "mahn.refine2", {.dilation = 2, .padding = {}});
  refined = conv_relu(refined, params, "mahn.refine3", {.dilation = 4, .padding = {}});

  const Tensor down = conv_relu(fine_in, params, "mahn.hall_down", {.stride = 2, .padding = 1});
  AttentionOptions attention;
  attention.temperature = config.attention_temperature;
  const Tensor attended =
      contextual_attention(down, avg_pool2(out.mask), attention, &out.diagnostics);
  const Tensor hallucinated =
      conv_relu(upsample_nearest(attended, 2, height, width), params, "mahn.hall_up");

  const Tensor fused = conv_relu(concat({refined, hallucinated}), params, "mahn.fuse");
  out.fine = relu(conv(fused, params, "mahn.fine_out"));
  out.final = complete(out.coarse, out.fine, out.mask);
  return out;
}

PipelineOutputs pipeline_forward(const Tensor& x_lo, const Tensor& x_mid, const Tensor& x_hi,
                                 const ParameterSet& params, const ModelConfig& config) {
  if (x_lo.shape() != x_mid.shape() || x_hi.shape() != x_mid.shape()) {
    throw ContractViolation("pipeline inputs must share one spatial size");
  }
  const std::array<const Tensor*, 3> supporting = {&x_lo, &x_mid, &x_hi};
  std::array<Tensor, 3> adjusted;
  for (std::size_t i = 0; i < 3; ++i) {
    adjusted[i] = ban_forward(x_mid, *supporting[i], params, kBanPrefixes[i], config).adjusted;
  }
  return mahn_forward(adjusted, params, config);
}

}  // namespace hdrf
