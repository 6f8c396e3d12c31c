#include <benchmark/benchmark.h>

#include "hdrf/attention.hpp"
#include "hdrf/conv.hpp"
#include "hdrf/dataset.hpp"
#include "hdrf/deform.hpp"
#include "hdrf/networks.hpp"
#include "hdrf/ops.hpp"
#include "hdrf/rng.hpp"

using namespace hdrf;

namespace {

Tensor random_tensor(Rng& rng, Shape shape) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) v = rng.normal();
  return t;
}

}  // namespace

static void BM_Conv2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto s = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const Tensor x = random_tensor(rng, {c, s, s});
  const Tensor w = random_tensor(rng, {c, c, 3, 3});
  const Tensor b = random_tensor(rng, {c});
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b, {.padding = 1}));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(c * c * s * s * 9));
}
BENCHMARK(BM_Conv2d)->Args({16, 32})->Args({32, 64});

static void BM_DeformConv(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor x = random_tensor(rng, {3, s, s});
  const Tensor k = random_tensor(rng, {9, s, s});
  const Tensor o = random_tensor(rng, {18, s, s});
  for (auto _ : state) benchmark::DoNotOptimize(pixel_adaptive_deformable_conv(x, {k, o}));
}
BENCHMARK(BM_DeformConv)->Arg(64)->Arg(128);

static void BM_ContextualAttention(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const Tensor f = random_tensor(rng, {16, s, s});
  Tensor mask = Tensor::zeros({1, s, s});
  for (double& v : mask.mutable_data()) v = rng.uniform(0.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(contextual_attention(f, mask, {}));
}
BENCHMARK(BM_ContextualAttention)->Arg(16)->Arg(32);

static void BM_PipelineForward(benchmark::State& state) {
  ModelConfig model;
  model.width = static_cast<std::size_t>(state.range(0));
  const ParameterSet params = init_parameters(model, 4);
  const SampleTensors x = to_tensors(synth_dynamic_scene(5, 32, 2));
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(pipeline_forward(x.inputs[0], x.inputs[1], x.inputs[2], params, model));
}
BENCHMARK(BM_PipelineForward)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_PipelineBackward(benchmark::State& state) {
  ModelConfig model;
  model.width = 8;
  ParameterSet params = init_parameters(model, 6);
  for (auto& [name, tensor] : params) tensor.set_requires_grad();
  const SampleTensors x = to_tensors(synth_dynamic_scene(7, 32, 2));
  for (auto _ : state) {
    const PipelineOutputs out = pipeline_forward(x.inputs[0], x.inputs[1], x.inputs[2], params, model);
    benchmark::DoNotOptimize(backward(sum(out.final)));
  }
}
BENCHMARK(BM_PipelineBackward)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
