#include "hdrf/losses.hpp"

#include <cmath>

#include "hdrf/checkpoint.hpp"
#include "hdrf/conv.hpp"
#include "hdrf/error.hpp"
#include "hdrf/ops.hpp"
#include "hdrf/radiometry.hpp"
#include "hdrf/rng.hpp"

namespace hdrf {
namespace {

void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ContractViolation(std::string(what) + ": shapes " + shape_string(a.shape()) + " and " +
                            shape_string(b.shape()) + " differ");
  }
}

void require_image(const Tensor& a, const char* what) {
  if (a.dim() != 3) throw ContractViolation(std::string(what) + " expects C x H x W");
}

Tensor cosine_loss(const Tensor& a, const Tensor& b, double epsilon) {
  const std::size_t channels = a.size(0);
  const std::size_t plane = a.size(1) * a.size(2);
  const auto x = a.data();
  const auto y = b.data();
  double total = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    double dot = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      dot += x[c * plane + i] * y[c * plane + i];
      xx += x[c * plane + i] * x[c * plane + i];
      yy += y[c * plane + i] * y[c * plane + i];
    }
    total += dot / (std::sqrt(xx) * std::sqrt(yy) + epsilon);
  }
  const double value = 1.0 - total / static_cast<double>(plane);
  return make_result(
      {}, {value}, "color_loss", {a, b}, [channels, plane, epsilon](const BackwardArgs& args) {
        const auto x = args.inputs[0].data();
        const auto y = args.inputs[1].data();
        auto gx = grad_sink(args.inputs[0]);
        auto gy = grad_sink(args.inputs[1]);
        const double g = -args.grad_out[0] / static_cast<double>(plane);
        for (std::size_t i = 0; i < plane; ++i) {
          double dot = 0.0, xx = 0.0, yy = 0.0;
          for (std::size_t c = 0; c < channels; ++c) {
            dot += x[c * plane + i] * y[c * plane + i];
            xx += x[c * plane + i] * x[c * plane + i];
            yy += y[c * plane + i] * y[c * plane + i];
          }
          const double nx = std::sqrt(xx);
          const double ny = std::sqrt(yy);
          const double d = nx * ny + epsilon;
          const double k = dot / (d * d);
          for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t j = c * plane + i;
            if (!gx.empty()) {
              const double radial = nx > 0.0 ? k * ny * x[j] / nx : 0.0;
              gx[j] += g * (y[j] / d - radial);
            }
            if (!gy.empty()) {
              const double radial = ny > 0.0 ? k * nx * y[j] / ny : 0.0;
              gy[j] += g * (x[j] / d - radial);
            }
          }
        }
      });
}

Tensor total_variation(const Tensor& t) {
  const std::size_t channels = t.size(0);
  const std::size_t height = t.size(1);
  const std::size_t width = t.size(2);
  const double count =
      static_cast<double>(channels * (height * (width - 1) + (height - 1) * width));
  if (count == 0.0) return Tensor::scalar(0.0);
  const auto v = t.data();
  double total = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* p = v.data() + c * height * width;
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x + 1 < width; ++x) total += std::fabs(p[y * width + x + 1] - p[y * width + x]);
    }
    for (std::size_t y = 0; y + 1 < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) total += std::fabs(p[(y + 1) * width + x] - p[y * width + x]);
    }
  }
  return make_result({}, {total / count}, "tv_loss", {t},
                     [channels, height, width, count](const BackwardArgs& args) {
                       auto g = grad_sink(args.inputs[0]);
                       const double scale = args.grad_out[0] / count;
                       const auto v = args.inputs[0].data();
                       auto spread = [&](std::size_t a, std::size_t b) {
                         const double d = v[b] - v[a];
                         const double s = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
                         g[b] += s;
                         g[a] -= s;
                       };
                       for (std::size_t c = 0; c < channels; ++c) {
                         const std::size_t base = c * height * width;
                         for (std::size_t y = 0; y < height; ++y) {
                           for (std::size_t x = 0; x + 1 < width; ++x) {
                             spread(base + y * width + x, base + y * width + x + 1);
                           }
                         }
                         for (std::size_t y = 0; y + 1 < height; ++y) {
                           for (std::size_t x = 0; x < width; ++x) {
                             spread(base + y * width + x, base + (y + 1) * width + x);
                           }
                         }
                       }
                     });
}

std::string block_name(std::size_t b, const char* field) {
  return "block" + std::to_string(b + 1) + "." + field;
}

}  // namespace

Tensor recon_loss(const Tensor& pred, const Tensor& target, double mu) {
  require_same(pred, target, "recon_loss");
  return l1_distance(mu_law(pred, mu), mu_law(target, mu));
}

Tensor color_loss(const Tensor& pred, const Tensor& target, double mu, double epsilon) {
  require_same(pred, target, "color_loss");
  require_image(pred, "color_loss");
  return cosine_loss(mu_law(pred, mu), mu_law(target, mu), epsilon);
}

Tensor tv_loss(const Tensor& pred, double mu) {
  require_image(pred, "tv_loss");
  return total_variation(mu_law(pred, mu));
}

PerceptualExtractor PerceptualExtractor::random(std::uint64_t seed) {
  PerceptualExtractor extractor;
  Rng rng(seed);
  for (std::size_t b = 0; b < 3; ++b) {
    const std::size_t in = kChannels[b];
    const std::size_t out = kChannels[b + 1];
    Tensor w = Tensor::zeros({out, in, 3, 3});
    const double stddev = std::sqrt(2.0 / static_cast<double>(in * 9));
    for (double& v : w.mutable_data()) v = stddev * rng.normal();
    extractor.weights_.add(block_name(b, "weight"), w);
    extractor.weights_.add(block_name(b, "bias"), Tensor::zeros({out}));
  }
  return extractor;
}

PerceptualExtractor PerceptualExtractor::load(const std::filesystem::path& path) {
  PerceptualExtractor extractor = random(0);
  restore_parameters(load_checkpoint(path), extractor.weights_);
  return extractor;
}

void PerceptualExtractor::save(const std::filesystem::path& path) const {
  Checkpoint checkpoint;
  for (const auto& [name, tensor] : weights_) checkpoint.add_tensor(name, tensor);
  save_checkpoint(checkpoint, path);
}

std::array<Tensor, 3> PerceptualExtractor::features(const Tensor& image) const {
  if (image.dim() != 3 || image.size(0) != kChannels[0]) {
    throw ContractViolation("perceptual extractor expects 3 x H x W, got " +
                            shape_string(image.shape()));
  }
  std::array<Tensor, 3> out;
  Tensor x = image;
  for (std::size_t b = 0; b < 3; ++b) {
    if (b > 0) x = avg_pool2(x);
    x = relu(conv2d(x, weights_.at(block_name(b, "weight")), weights_.at(block_name(b, "bias"))));
    out[b] = x;
  }
  return out;
}

Tensor perceptual_loss(const Tensor& pred, const Tensor& target,
                       const PerceptualExtractor& extractor, double mu) {
  require_same(pred, target, "perceptual_loss");
  const auto fp = extractor.features(mu_law(pred, mu));
  const auto ft = extractor.features(mu_law(target, mu));
  Tensor total = l1_distance(fp[0], ft[0]);
  for (std::size_t b = 1; b < 3; ++b) total = add(total, l1_distance(fp[b], ft[b]));
  return total;
}

TermEvaluator default_term_evaluator(const PerceptualExtractor& extractor, double mu) {
  return [&extractor, mu](Output, Term term, const Tensor& pred, const Tensor& target) {
    switch (term) {
      case Term::kRecon:
        return recon_loss(pred, target, mu);
      case Term::kColor:
        return color_loss(pred, target, mu);
      case Term::kPerceptual:
        return perceptual_loss(pred, target, extractor, mu);
      case Term::kTv:
        return tv_loss(pred, mu);
    }
    throw ContractViolation("unknown loss term");
  };
}

LossReport total_loss(const std::array<Tensor, 3>& outputs, const Tensor& target,
                      const LossWeights& weights, const TermEvaluator& evaluate) {
  LossReport report;
  Tensor total;
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t t = 0; t < 4; ++t) {
      const double w = weights.weights[o][t];
      const auto output = static_cast<Output>(o);
      const auto term = static_cast<Term>(t);
      Tensor value;
      if (w == 0.0) {
        NoGradGuard no_grad;
        value = evaluate(output, term, outputs[o], target);
      } else {
        value = evaluate(output, term, outputs[o], target);
      }
      if (value.numel() != 1) throw ContractViolation("loss terms must be scalars");
      report.terms[o][t] = value.item();
      if (w == 0.0) continue;
      report.per_output[o] += w * value.item();
      const Tensor weighted = affine(value, w);
      total = total.defined() ? add(total, weighted) : weighted;
    }
  }
  report.total_tensor = total.defined() ? total : Tensor::scalar(0.0);
  report.total = report.total_tensor.item();
  return report;
}

LossReport pipeline_loss(const PipelineOutputs& outputs, const Tensor& target,
                         const LossWeights& weights, const TermEvaluator& evaluate) {
  return total_loss({outputs.coarse, outputs.fine, outputs.final}, target, weights, evaluate);
}

}  // namespace hdrf
