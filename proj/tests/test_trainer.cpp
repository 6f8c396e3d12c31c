#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "hdrf/checkpoint.hpp"
#include "hdrf/error.hpp"
#include "hdrf/image_io.hpp"
#include "hdrf/ops.hpp"
#include "hdrf/trainer.hpp"
#include "test_support.hpp"

using namespace hdrf;
using hdrf::testing::random_normal;
using hdrf::testing::scratch_dir;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

TrainConfig tiny_config(std::size_t iterations) {
  TrainConfig config;
  config.model.width = 4;
  config.model.extractor_levels = 2;
  config.model.residual_blocks = 1;
  config.batch_size = 4;
  config.patch_size = 8;
  config.iterations = iterations;
  config.learning_rate = 1e-3;
  config.seed = 11;
  config.checkpoint_every = 2;
  return config;
}

TrainData tiny_data() {
  TrainData data;
  data.dynamic_scenes = {synth_dynamic_scene(1, 12, 2), synth_dynamic_scene(2, 12, 2)};
  data.static_scenes = data.dynamic_scenes;
  return data;
}

// Sets every parameter's gradient to `grads[name]` via a linear loss.
void set_gradients(ParameterSet& params, const std::vector<Tensor>& grads) {
  params.zero_grad();
  std::size_t i = 0;
  Tensor loss = Tensor::scalar(0.0);
  for (auto& [name, tensor] : params) {
    tensor.set_requires_grad();
    loss = add(loss, sum(mul(tensor, grads[i++])));
  }
  backward(loss);
}

TrainOptions writing_to(const std::filesystem::path& dir) {
  TrainOptions options;
  options.out_dir = dir;
  return options;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Adam, FirstStepMovesByLearningRate) {
  ParameterSet params;
  params.add("w", Tensor::full({5}, 0.3));
  set_gradients(params, {Tensor::full({5}, 1.0)});
  OptimizerState state = make_optimizer_state(params);
  const AdamOptions options;
  adam_step(params, state, options);
  for (double v : params.at("w").data()) EXPECT_NEAR(0.3 - v, options.learning_rate / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParameterSet params;
  params.add("w", Tensor::from_data({3}, {1.0, -2.0, 0.5}));
  params.add("b", Tensor::from_data({1}, {4.0}));
  set_gradients(params, {Tensor::zeros({3}), Tensor::zeros({1})});
  OptimizerState state = make_optimizer_state(params);
  adam_step(params, state, {});
  EXPECT_EQ(values(params.at("w")), (std::vector<double>{1.0, -2.0, 0.5}));
  params.zero_grad();
  adam_step(params, state, {});
  EXPECT_EQ(values(params.at("b")), (std::vector<double>{4.0}));
}

TEST(Adam, TenStepsMatchScalarReference) {
  Rng rng(3);
  ParameterSet params;
  params.add("a", random_normal(rng, {4}));
  params.add("b", random_normal(rng, {2, 3}));
  const AdamOptions options{.learning_rate = 0.01, .beta1 = 0.8, .beta2 = 0.99, .epsilon = 1e-6};
  std::vector<double> ref_params;
  for (const auto& [name, t] : params) ref_params.insert(ref_params.end(), t.data().begin(), t.data().end());
  std::vector<oracle::ScalarAdam> ref(ref_params.size(),
                                      oracle::ScalarAdam{options.learning_rate, options.beta1,
                                                         options.beta2, options.epsilon});
  OptimizerState state = make_optimizer_state(params);
  for (int step = 0; step < 10; ++step) {
    const std::vector<Tensor> grads = {random_normal(rng, {4}), random_normal(rng, {2, 3})};
    set_gradients(params, grads);
    adam_step(params, state, options);
    std::size_t k = 0;
    for (const Tensor& g : grads)
      for (double gv : g.data()) {
        ref_params[k] = ref[k].step(ref_params[k], gv);
        ++k;
      }
  }
  std::vector<double> got;
  for (const auto& [name, t] : params) got.insert(got.end(), t.data().begin(), t.data().end());
  EXPECT_LT(hdrf::testing::max_abs_diff(got, ref_params), 1e-10);
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  ParameterSet params;
  params.add("fine.weight", Tensor::zeros({2}));
  set_gradients(params, {Tensor::from_data({2}, {1.0, std::nan("")})});
  OptimizerState state = make_optimizer_state(params);
  try {
    adam_step(params, state, {});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("fine.weight"), std::string::npos);
  }
  EXPECT_EQ(values(params.at("fine.weight")), (std::vector<double>{0.0, 0.0}));
}

TEST(ClipGradNorm, ScalesToMaximum) {
  ParameterSet params;
  params.add("w", Tensor::zeros({2}));
  set_gradients(params, {Tensor::from_data({2}, {3.0, 4.0})});
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 1.0), 5.0);
  EXPECT_NEAR(params.at("w").grad()[0], 0.6, 1e-15);
  EXPECT_NEAR(params.at("w").grad()[1], 0.8, 1e-15);
}

TEST(Train, ZeroIterationsKeepsInitialization) {
  const auto dir = scratch_dir("train_zero");
  const TrainConfig config = tiny_config(0);
  const TrainResult result = train(config, tiny_data(), writing_to(dir));
  const ParameterSet init = init_parameters(config.model, config.seed);
  for (const auto& [name, tensor] : init) EXPECT_EQ(values(tensor), values(result.params.at(name)));
  const LoadedModel loaded = load_model(load_checkpoint(dir / kCheckpointFile));
  for (const auto& [name, tensor] : init) EXPECT_EQ(values(tensor), values(loaded.params.at(name)));
  EXPECT_TRUE(result.curve.empty());
}

TEST(Train, SameSeedGivesBitIdenticalCheckpoints) {
  const auto a = scratch_dir("train_det_a");
  const auto b = scratch_dir("train_det_b");
  const TrainConfig config = tiny_config(3);
  const TrainData data = tiny_data();
  train(config, data, writing_to(a));
  train(config, data, writing_to(b));
  EXPECT_EQ(read_file_bytes(a / kCheckpointFile), read_file_bytes(b / kCheckpointFile));
  EXPECT_EQ(read_text(a / kLossCurveFile), read_text(b / kLossCurveFile));
}

TEST(Train, LossCurveCsv) {
  const auto dir = scratch_dir("train_csv");
  std::vector<LossRow> seen;
  TrainOptions options = writing_to(dir);
  options.on_iteration = [&](const LossRow& r) { seen.push_back(r); };
  const TrainResult result = train(tiny_config(3), tiny_data(), options);
  ASSERT_EQ(result.curve.size(), 3u);
  ASSERT_EQ(seen.size(), 3u);
  std::istringstream csv(read_text(dir / kLossCurveFile));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "iter,loss_total,loss_coarse,loss_fine,loss_final");
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 3u);
  for (const LossRow& row : result.curve) {
    EXPECT_TRUE(std::isfinite(row.total));
    EXPECT_NEAR(row.total, row.coarse + row.fine + row.final, 1e-12);
  }
}

TEST(Train, CheckpointCarriesConfiguration) {
  const auto dir = scratch_dir("train_meta");
  const TrainConfig config = tiny_config(1);
  train(config, tiny_data(), writing_to(dir));
  const Checkpoint ckpt = load_checkpoint(dir / kCheckpointFile);
  ASSERT_NE(ckpt.find("meta.train_config"), nullptr);
  EXPECT_EQ(parse_train_config(ckpt.find("meta.train_config")->bytes), config);
  EXPECT_EQ(load_model(ckpt).config, config.model);
}

TEST(Train, NonFiniteLossAbortsWithIteration) {
  const auto dir = scratch_dir("train_nan");
  TrainData data = tiny_data();
  for (Scene& s : data.dynamic_scenes) s.gt.values[0] = std::nan("");
  data.static_scenes = data.dynamic_scenes;
  TrainConfig config = tiny_config(3);
  config.patch_size = 12;
  try {
    train(config, data, writing_to(dir));
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration 1"), std::string::npos) << e.what();
  }
  EXPECT_TRUE(std::filesystem::exists(dir / kCheckpointFile));
}

TEST(Train, InvalidConfigIsRejected) {
  TrainConfig config = tiny_config(1);
  config.batch_size = 6;
  EXPECT_THROW(train(config, tiny_data()), ConfigError);
}

TEST(Train, FinalOutputZeroWeightsDoNotChangeTraining) {
  const TrainData data = tiny_data();
  const TrainConfig config = tiny_config(2);
  TrainOptions plain;
  TrainOptions toggled;
  toggled.weights.at(Output::kFinal, Term::kColor) = 0.0;
  toggled.weights.at(Output::kFinal, Term::kPerceptual) = 0.0;
  toggled.weights.at(Output::kFinal, Term::kTv) = 0.0;
  const auto a = train(config, data, plain);
  const auto b = train(config, data, toggled);
  for (const auto& [name, tensor] : a.params) EXPECT_EQ(values(tensor), values(b.params.at(name)));
}

TEST(Infer, RecordsNoGraph) {
  const TrainConfig config = tiny_config(0);
  ParameterSet params = init_parameters(config.model, 1);
  for (auto& [name, tensor] : params) tensor.set_requires_grad();
  const PipelineOutputs out = infer(to_tensors(synth_dynamic_scene(3, 8, 1)), params, config.model);
  EXPECT_FALSE(out.final.requires_grad());
  EXPECT_EQ(out.final.node(), nullptr);
}
