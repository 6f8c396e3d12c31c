#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hdrf/deform.hpp"
#include "hdrf/tensor.hpp"

namespace hdrf {

// Where the per-pixel deformable convolution is applied inside each BAN.
enum class AdjustmentMode {
  kBrightness,          // reference features; the supporting image only shapes K and offsets
  kMotionCompensation,  // supporting features are warped towards the reference
};

enum class MaskMode {
  kSoft,  // sigmoid(a * z) from a learned head
  kHard,  // 1[max_c H_coarse >= tau], no gradient
};

struct ModelConfig {
  std::size_t width = 32;            // base feature width c
  std::size_t extractor_levels = 3;  // conv blocks per extractor branch
  std::size_t residual_blocks = 3;   // in the coarse merge network
  double mask_softness = 3.0;        // a
  double attention_temperature = 10.0;
  AdjustmentMode mode = AdjustmentMode::kBrightness;
  MaskMode mask_mode = MaskMode::kSoft;
  double hard_mask_threshold = 0.9;  // tau

  bool operator==(const ModelConfig&) const = default;
};

// Named learnable tensors in a fixed, reproducible order.
class ParameterSet {
 public:
  void add(std::string name, Tensor value);

  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return entries_.size(); }
  std::size_t element_count() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grad();
  ParameterSet clone() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t> index_;
};

struct ParameterSpec {
  std::string name;
  Shape shape;
};

// Every parameter's name and shape; a pure function of the config.
std::vector<ParameterSpec> parameter_specs(const ModelConfig& config);
std::size_t parameter_count(const ModelConfig& config);

// He-normal conv weights, zero biases, zero-initialized offset head.
ParameterSet init_parameters(const ModelConfig& config, std::uint64_t seed);

// Prefixes of the three brightness adjustment networks, by exposure index -1, 0, +1.
inline const std::array<std::string, 3> kBanPrefixes = {"ban_lo", "ban_mid", "ban_hi"};

struct BanFeatures {
  std::vector<Tensor> reference;   // per level, c x H x W
  std::vector<Tensor> supporting;  // per level, c x H x W (reference fused in)
  Tensor fused;                    // 2c x H x W, input of the kernel and offset heads
};

BanFeatures ban_feature_extract(const Tensor& x_ref, const Tensor& x_sup,
                                const ParameterSet& params, const std::string& prefix,
                                const ModelConfig& config);

struct BanOutput {
  Tensor adjusted;  // c x H x W
  DeformableKernelField field;
};

// Adjusts the reference's features to the supporting exposure. In
// motion-compensation mode the same machinery warps the supporting image's
// features (computed with the reference branch weights) instead.
BanOutput ban_forward(const Tensor& x_ref, const Tensor& x_sup, const ParameterSet& params,
                      const std::string& prefix, const ModelConfig& config);

// ban_forward with the mode forced to motion compensation.
BanOutput motion_compensation_forward(const Tensor& x_ref, const Tensor& x_sup,
                                      const ParameterSet& params, const std::string& prefix,
                                      ModelConfig config);

struct PipelineOutputs {
  Tensor coarse;       // 3 x H x W, >= 0
  Tensor fine;         // 3 x H x W, >= 0
  Tensor final;        // 3 x H x W
  Tensor mask;         // 1 x H x W
  Tensor mask_logits;  // 1 x H x W pre-activation z (soft mode only)
  std::array<Tensor, 3> adjusted;
  std::vector<std::string> diagnostics;
};

PipelineOutputs mahn_forward(const std::array<Tensor, 3>& adjusted, const ParameterSet& params,
                             const ModelConfig& config);

// H_final = f(X_-1, X_0, X_1) for 6 x H x W inputs; X_0 is the reference.
PipelineOutputs pipeline_forward(const Tensor& x_lo, const Tensor& x_mid, const Tensor& x_hi,
                                 const ParameterSet& params, const ModelConfig& config);

}  // namespace hdrf
