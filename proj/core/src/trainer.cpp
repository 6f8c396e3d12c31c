#include "hdrf/trainer.hpp"

#include <cmath>
#include <fstream>

#include "hdrf/checkpoint.hpp"
#include "hdrf/error.hpp"
#include "hdrf/linalg.hpp"
#include "hdrf/ops.hpp"
#include "hdrf/rng.hpp"

namespace hdrf {
namespace {

std::string csv_row(const LossRow& row) {
  return std::to_string(row.iteration) + "," + format_double(row.total) + "," +
         format_double(row.coarse) + "," + format_double(row.fine) + "," +
         format_double(row.final) + "\n";
}

}  // namespace

AdamOptions adam_options(const TrainConfig& config) {
  return {config.learning_rate, config.beta1, config.beta2, config.adam_epsilon};
}

OptimizerState make_optimizer_state(const ParameterSet& params) {
  OptimizerState state;
  for (const auto& [name, tensor] : params) {
    state.m.emplace_back(tensor.numel(), 0.0);
    state.v.emplace_back(tensor.numel(), 0.0);
  }
  return state;
}

void adam_step(ParameterSet& params, OptimizerState& state, const AdamOptions& options) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ContractViolation("optimizer state does not match the parameter set");
  }
  std::size_t k = 0;
  for (auto& [name, tensor] : params) {
    if (state.m[k].size() != tensor.numel() || state.v[k].size() != tensor.numel()) {
      throw ContractViolation("optimizer moments for '" + name + "' have the wrong size");
    }
    if (tensor.has_grad()) {
      for (double g : tensor.grad()) {
        if (!std::isfinite(g)) throw NumericalError("non-finite gradient for parameter '" + name + "'");
      }
    }
    ++k;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(options.beta1, t);
  const double c2 = 1.0 - std::pow(options.beta2, t);
  k = 0;
  for (auto& [name, tensor] : params) {
    auto p = tensor.mutable_data();
    const bool has = tensor.has_grad();
    const auto g = tensor.grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = has ? g[i] : 0.0;
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * gi;
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * gi * gi;
      p[i] -= options.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + options.epsilon);
    }
    ++k;
  }
}

double clip_grad_norm(ParameterSet& params, double max_norm) {
  double total = 0.0;
  for (const auto& [name, tensor] : params) {
    if (!tensor.has_grad()) continue;
    for (double g : tensor.grad()) total += g * g;
  }
  const double norm = std::sqrt(total);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, tensor] : params) {
      if (!tensor.has_grad()) continue;
      for (double& g : tensor.impl()->grad) g *= scale;
    }
  }
  return norm;
}

Checkpoint make_training_checkpoint(const ParameterSet& params, const TrainConfig& config) {
  Checkpoint checkpoint = make_model_checkpoint(params, config.model);
  checkpoint.add_bytes("meta.train_config", to_config_text(config));
  return checkpoint;
}

TrainResult train(const TrainConfig& config, const TrainData& data, const TrainOptions& options) {
  validate(config);
  if (data.dynamic_scenes.empty() || data.static_scenes.empty()) {
    throw ContractViolation("training needs at least one dynamic and one static scene");
  }
  const Precision previous_precision = compute_precision();
  set_compute_precision(config.precision);
  struct RestorePrecision {
    Precision p;
    ~RestorePrecision() { set_compute_precision(p); }
  } restore{previous_precision};

  TrainResult result;
  result.params = init_parameters(config.model, config.seed);
  OptimizerState state = make_optimizer_state(result.params);
  const AdamOptions adam = adam_options(config);
  const PerceptualExtractor extractor = PerceptualExtractor::random(kPerceptualSeed);
  const TermEvaluator evaluate = default_term_evaluator(extractor, config.radiometry.mu);
  const double gamma = config.radiometry.gamma;

  const bool write = !options.out_dir.empty();
  std::ofstream curve;
  if (write) {
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) throw IoError("cannot create '" + options.out_dir.string() + "': " + ec.message());
    curve.open(options.out_dir / kLossCurveFile, std::ios::trunc);
    if (!curve) throw IoError("cannot write " + (options.out_dir / kLossCurveFile).string());
    curve << "iter,loss_total,loss_coarse,loss_fine,loss_final\n";
  }
  auto save = [&] {
    if (write) {
      save_checkpoint(make_training_checkpoint(result.params, config),
                      options.out_dir / kCheckpointFile);
    }
  };
  save();

  const double inv_batch = 1.0 / static_cast<double>(config.batch_size);
  for (std::size_t iter = 1; iter <= config.iterations; ++iter) {
    const Batch batch = make_batch(data.dynamic_scenes, data.static_scenes, config.batch_size,
                                   config.patch_size, derive_seed(config.seed, iter), gamma);
    result.params.zero_grad();
    LossRow row;
    row.iteration = iter;
    for (const Sample& sample : batch.samples) {
      const SampleTensors tensors = to_tensors(sample, gamma);
      const PipelineOutputs out = pipeline_forward(tensors.inputs[0], tensors.inputs[1],
                                                   tensors.inputs[2], result.params, config.model);
      const LossReport report = pipeline_loss(out, tensors.gt, options.weights, evaluate);
      if (!std::isfinite(report.total)) {
        throw NumericalError("non-finite loss at iteration " + std::to_string(iter));
      }
      backward(affine(report.total_tensor, inv_batch));
      row.total += report.total * inv_batch;
      row.coarse += report.per_output[0] * inv_batch;
      row.fine += report.per_output[1] * inv_batch;
      row.final += report.per_output[2] * inv_batch;
    }
    if (config.grad_clip > 0.0) clip_grad_norm(result.params, config.grad_clip);
    adam_step(result.params, state, adam);
    result.curve.push_back(row);
    if (write) curve << csv_row(row) << std::flush;
    if (options.on_iteration) options.on_iteration(row);
    if (config.checkpoint_every > 0 && iter % config.checkpoint_every == 0) save();
  }
  save();
  result.params.zero_grad();
  return result;
}

PipelineOutputs infer(const SampleTensors& inputs, const ParameterSet& params,
                      const ModelConfig& config) {
  NoGradGuard no_grad;
  return pipeline_forward(inputs.inputs[0], inputs.inputs[1], inputs.inputs[2], params, config);
}

HdrMetrics evaluate_scene(const Scene& scene, const ParameterSet& params,
                          const ModelConfig& config, const GammaConfig& radiometry) {
  const SampleTensors tensors = to_tensors(scene, radiometry.gamma);
  const PipelineOutputs out = infer(tensors, params, config);
  return evaluate_hdr(out.final, tensors.gt, radiometry.mu);
}

}  // namespace hdrf
