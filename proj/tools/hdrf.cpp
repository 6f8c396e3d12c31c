#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "hdrf/checkpoint.hpp"
#include "hdrf/config.hpp"
#include "hdrf/dataset.hpp"
#include "hdrf/error.hpp"
#include "hdrf/gradcheck.hpp"
#include "hdrf/image_io.hpp"
#include "hdrf/metrics.hpp"
#include "hdrf/radiometry.hpp"
#include "hdrf/trainer.hpp"

namespace fs = std::filesystem;
using namespace hdrf;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kNumerical = 3 };

class Manifest {
 public:
  Manifest(int argc, char** argv) : start_(std::chrono::steady_clock::now()) {
    for (int i = 0; i < argc; ++i) {
      if (i > 0) command_ += ' ';
      command_ += argv[i];
    }
    const std::time_t now = std::time(nullptr);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    started_ = buffer;
  }

  void add(const std::string& key, const std::string& value) {
    fields_ += key + " = " + value + "\n";
  }
  void set_config(std::string text) { config_ = std::move(text); }

  void write(const fs::path& dir) const {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::string text = "command = " + command_ + "\n" + "version = " + HDRF_VERSION + "\n" +
                       "started = " + started_ + "\n" +
                       "wall_clock_seconds = " + format_double(seconds) + "\n" + fields_;
    if (!config_.empty()) text += "\n[config]\n" + config_;
    write_file_bytes(dir / "manifest.txt", std::vector<unsigned char>(text.begin(), text.end()));
  }

 private:
  std::chrono::steady_clock::time_point start_;
  std::string command_;
  std::string started_;
  std::string fields_;
  std::string config_;
};

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory '" + dir.string() + "'");
  }
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

std::vector<Scene> load_scenes(const fs::path& data, ExposureFormat format) {
  if (fs::exists(data / "exposures.txt")) return {load_scene(data, format)};
  if (!fs::is_directory(data)) throw IoError("data directory '" + data.string() + "' not found");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(data)) {
    if (entry.is_directory() && fs::exists(entry.path() / "exposures.txt")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw IoError("no scene directories under '" + data.string() + "'");
  std::vector<Scene> scenes;
  for (const fs::path& dir : dirs) scenes.push_back(load_scene(dir, format));
  return scenes;
}

HdrImage mask_image(const Tensor& mask) {
  const std::size_t h = mask.size(1);
  const std::size_t w = mask.size(2);
  HdrImage image = HdrImage::blank(h, w);
  for (std::size_t i = 0; i < h * w; ++i) {
    for (std::size_t c = 0; c < 3; ++c) image.values[i * 3 + c] = mask.data()[i];
  }
  return image;
}

int run_synth(const fs::path& out, std::size_t scenes, std::size_t size, std::size_t motion,
              std::uint64_t seed, Manifest& manifest) {
  make_dir(out);
  for (std::size_t i = 0; i < scenes; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%03zu", i);
    save_scene(synth_dynamic_scene(derive_seed(seed, i), size, motion), out / name);
  }
  manifest.add("seed", std::to_string(seed));
  manifest.add("scenes", std::to_string(scenes));
  manifest.add("size", std::to_string(size));
  manifest.add("motion", std::to_string(motion));
  manifest.write(out);
  return kOk;
}

int run_train(const fs::path& data, const fs::path& config_path, const fs::path& out,
              std::size_t log_every, Manifest& manifest) {
  const TrainConfig config = parse_train_config(read_text(config_path));
  const std::vector<Scene> scenes = load_scenes(data, config.exposure_format);
  for (const Scene& s : scenes) {
    if (s.gt.height < config.patch_size || s.gt.width < config.patch_size) {
      throw ConfigError("patch_size " + std::to_string(config.patch_size) +
                        " exceeds a scene of size " + std::to_string(s.gt.width) + "x" +
                        std::to_string(s.gt.height));
    }
  }
  make_dir(out);
  manifest.add("seed", std::to_string(config.seed));
  manifest.add("data", data.string());
  manifest.add("scenes", std::to_string(scenes.size()));
  manifest.add("schedule", "constant learning rate, no decay");
  manifest.set_config(to_config_text(config));

  TrainOptions options;
  options.out_dir = out;
  if (log_every > 0) {
    options.on_iteration = [log_every](const LossRow& row) {
      if (row.iteration % log_every == 0) {
        std::cerr << "iter " << row.iteration << " loss " << format_double(row.total) << "\n";
      }
    };
  }
  const TrainResult result = train(config, {scenes, scenes}, options);
  if (!result.curve.empty()) {
    manifest.add("final_loss", format_double(result.curve.back().total));
  }
  manifest.write(out);
  return kOk;
}

int run_infer(const fs::path& ckpt, const fs::path& scene_dir, const fs::path& out,
              Manifest& manifest) {
  const Checkpoint checkpoint = load_checkpoint(ckpt);
  const LoadedModel model = load_model(checkpoint);
  TrainConfig train_config;
  if (const CheckpointEntry* meta = checkpoint.find("meta.train_config")) {
    train_config = parse_train_config(meta->bytes);
  }
  const Scene scene = load_scene(scene_dir, train_config.exposure_format);
  const SampleTensors tensors = to_tensors(scene, train_config.radiometry.gamma);
  const PipelineOutputs outputs = infer(tensors, model.params, model.config);
  for (const auto& message : outputs.diagnostics) std::cerr << "warning: " << message << "\n";
  make_dir(out);
  write_pfm(tensor_to_hdr(outputs.final), out / "hdr.pfm");
  write_pfm(mask_image(outputs.mask), out / "mask.pfm");
  write_pfm(tensor_to_hdr(outputs.coarse), out / "coarse.pfm");
  write_preview_ppm(tensor_to_hdr(outputs.final), out / "preview.ppm",
                    train_config.radiometry.mu);
  manifest.add("checkpoint", ckpt.string());
  manifest.add("scene", scene_dir.string());
  manifest.set_config(to_config_text(model.config));
  manifest.write(out);
  return kOk;
}

int run_eval(const fs::path& pred, const fs::path& gt, double mu) {
  const HdrImage p = read_pfm(pred);
  const HdrImage g = read_pfm(gt);
  if (p.height != g.height || p.width != g.width) {
    throw IoError("prediction is " + std::to_string(p.width) + "x" + std::to_string(p.height) +
                  " but ground truth is " + std::to_string(g.width) + "x" +
                  std::to_string(g.height));
  }
  const HdrMetrics m = evaluate_hdr(image_to_tensor(p), image_to_tensor(g), mu);
  std::cout << format_metric(m.psnr_t) << " " << format_metric(m.ssim_t) << " "
            << format_metric(m.psnr_l) << " " << format_metric(m.ssim_l) << "\n";
  return kOk;
}

int run_gradcheck(const std::string& only, std::size_t instances, std::uint64_t seed) {
  std::vector<const RegisteredOp*> ops;
  if (only.empty()) {
    for (const RegisteredOp& op : op_registry()) ops.push_back(&op);
  } else {
    const RegisteredOp* op = find_registered_op(only);
    if (op == nullptr) {
      std::cerr << "unknown op '" << only << "'; available:";
      for (const RegisteredOp& r : op_registry()) std::cerr << " " << r.name;
      std::cerr << "\n";
      return kUsage;
    }
    ops.push_back(op);
  }
  bool all_passed = true;
  std::printf("%-24s %9s %14s  %s\n", "op", "instances", "max_rel_error", "result");
  for (const RegisteredOp* op : ops) {
    double worst = 0.0;
    bool passed = true;
    std::string detail;
    for (std::size_t i = 0; i < instances; ++i) {
      Rng rng(derive_seed(seed, i));
      const GradCheckReport report = grad_check(op->apply, op->make_inputs(rng));
      worst = std::max(worst, report.max_rel_error);
      if (!report.passed) {
        passed = false;
        if (detail.empty()) detail = report.failure.empty() ? report.worst : report.failure;
      }
    }
    std::printf("%-24s %9zu %14.3e  %s\n", op->name.c_str(), instances, worst,
                passed ? "PASS" : "FAIL");
    if (!passed) std::printf("    %s\n", detail.c_str());
    all_passed = all_passed && passed;
  }
  return all_passed ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ghost-free HDR fusion from bracketed LDR exposures"};
  app.require_subcommand(1);
  Manifest manifest(argc, argv);

  fs::path synth_out;
  std::size_t synth_scenes = 1, synth_size = 128, synth_motion = 8;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Write procedural dynamic scenes");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--scenes", synth_scenes, "Number of scenes")->check(CLI::PositiveNumber);
  synth->add_option("--size", synth_size, "Scene side length in pixels")->check(CLI::Range(4, 8192));
  synth->add_option("--motion", synth_motion, "Sprite displacement between frames in pixels");
  synth->add_option("--seed", synth_seed, "Generator seed");

  fs::path train_data, train_config, train_out;
  std::size_t log_every = 0;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--data", train_data, "Scene directory or directory of scenes")->required();
  train_cmd->add_option("--config", train_config, "key = value configuration file")->required();
  train_cmd->add_option("--out", train_out, "Output directory")->required();
  train_cmd->add_option("--log-every", log_every, "Print the loss every N iterations");

  fs::path infer_ckpt, infer_scene, infer_out;
  auto* infer_cmd = app.add_subcommand("infer", "Fuse one scene with a trained model");
  infer_cmd->add_option("--ckpt", infer_ckpt, "Checkpoint file")->required();
  infer_cmd->add_option("--scene", infer_scene, "Scene directory")->required();
  infer_cmd->add_option("--out", infer_out, "Output directory")->required();

  fs::path eval_pred, eval_gt;
  double eval_mu = 5000.0;
  auto* eval_cmd = app.add_subcommand("eval", "Print PSNR_T SSIM_T PSNR_L SSIM_L");
  eval_cmd->add_option("--pred", eval_pred, "Predicted PFM")->required();
  eval_cmd->add_option("--gt", eval_gt, "Ground-truth PFM")->required();
  eval_cmd->add_option("--mu", eval_mu, "Tonemapping constant")->check(CLI::PositiveNumber);

  std::string gc_op;
  std::size_t gc_instances = 3;
  std::uint64_t gc_seed = 0;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Check analytic gradients of every operator");
  gc_cmd->add_option("--op", gc_op, "Only check this operator");
  gc_cmd->add_option("--instances", gc_instances, "Random instances per operator")
      ->check(CLI::PositiveNumber);
  gc_cmd->add_option("--seed", gc_seed, "Seed of the random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) {
      return run_synth(synth_out, synth_scenes, synth_size, synth_motion, synth_seed, manifest);
    }
    if (*train_cmd) return run_train(train_data, train_config, train_out, log_every, manifest);
    if (*infer_cmd) return run_infer(infer_ckpt, infer_scene, infer_out, manifest);
    if (*eval_cmd) return run_eval(eval_pred, eval_gt, eval_mu);
    if (*gc_cmd) return run_gradcheck(gc_op, gc_instances, gc_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kIo;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}
