#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "hdrf/checkpoint.hpp"
#include "hdrf/config.hpp"
#include "hdrf/dataset.hpp"
#include "hdrf/losses.hpp"
#include "hdrf/metrics.hpp"
#include "hdrf/networks.hpp"

namespace hdrf {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamOptions adam_options(const TrainConfig& config);

// First and second moments per parameter, in ParameterSet order.
struct OptimizerState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t step = 0;
};

OptimizerState make_optimizer_state(const ParameterSet& params);

// One bias-corrected Adam update from the gradients stored on `params`.
// A parameter without a gradient is treated as having a zero gradient.
// Throws NumericalError naming the parameter on a non-finite gradient.
void adam_step(ParameterSet& params, OptimizerState& state, const AdamOptions& options);

// Scales all gradients so that their global l2 norm is at most max_norm.
// Returns the norm before scaling.
double clip_grad_norm(ParameterSet& params, double max_norm);

// Seed of the fixed perceptual feature extractor used during training.
inline constexpr std::uint64_t kPerceptualSeed = 0x70e7c3a1ULL;

struct TrainData {
  std::vector<Scene> dynamic_scenes;
  std::vector<Scene> static_scenes;  // ground truth used to render static samples
};

struct LossRow {
  std::size_t iteration = 0;
  double total = 0.0;
  double coarse = 0.0;
  double fine = 0.0;
  double final = 0.0;
};

struct TrainOptions {
  // When set, loss.csv and checkpoint.hdrf are written here.
  std::filesystem::path out_dir;
  // Called after every iteration.
  std::function<void(const LossRow&)> on_iteration;
  LossWeights weights;
};

struct TrainResult {
  ParameterSet params;
  std::vector<LossRow> curve;
};

inline constexpr const char* kCheckpointFile = "checkpoint.hdrf";
inline constexpr const char* kLossCurveFile = "loss.csv";

// Model parameters plus the model and training configuration texts.
Checkpoint make_training_checkpoint(const ParameterSet& params, const TrainConfig& config);

// make_batch -> pipeline_forward -> total_loss -> backward -> adam_step,
// config.iterations times. The batch loss is the mean over its samples.
// A non-finite loss throws NumericalError with the iteration index; the last
// periodic checkpoint stays on disk.
TrainResult train(const TrainConfig& config, const TrainData& data,
                  const TrainOptions& options = {});

// Forward pass without gradient recording.
PipelineOutputs infer(const SampleTensors& inputs, const ParameterSet& params,
                      const ModelConfig& config);

HdrMetrics evaluate_scene(const Scene& scene, const ParameterSet& params,
                          const ModelConfig& config, const GammaConfig& radiometry = {});

}  // namespace hdrf
