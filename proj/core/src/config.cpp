#include "hdrf/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "hdrf/error.hpp"

namespace hdrf {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const ConfigEntry& e, const std::string& expected) {
  throw ConfigError("line " + std::to_string(e.line) + ": '" + e.key + "' expects " + expected +
                    ", got '" + e.value + "'");
}

double to_double(const ConfigEntry& e) {
  double v = 0.0;
  const char* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) bad_value(e, "a finite number");
  return v;
}

std::uint64_t to_unsigned(const ConfigEntry& e) {
  std::uint64_t v = 0;
  const char* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || ptr != end) bad_value(e, "a non-negative integer");
  return v;
}

using Setter = std::function<void(const ConfigEntry&)>;

std::map<std::string, Setter> model_setters(ModelConfig& m) {
  return {
      {"width", [&m](const ConfigEntry& e) { m.width = to_unsigned(e); }},
      {"extractor_levels", [&m](const ConfigEntry& e) { m.extractor_levels = to_unsigned(e); }},
      {"residual_blocks", [&m](const ConfigEntry& e) { m.residual_blocks = to_unsigned(e); }},
      {"mask_softness", [&m](const ConfigEntry& e) { m.mask_softness = to_double(e); }},
      {"attention_temperature",
       [&m](const ConfigEntry& e) { m.attention_temperature = to_double(e); }},
      {"hard_mask_threshold", [&m](const ConfigEntry& e) { m.hard_mask_threshold = to_double(e); }},
      {"mode",
       [&m](const ConfigEntry& e) {
         if (e.value == "brightness") {
           m.mode = AdjustmentMode::kBrightness;
         } else if (e.value == "motion") {
           m.mode = AdjustmentMode::kMotionCompensation;
         } else {
           bad_value(e, "'brightness' or 'motion'");
         }
       }},
      {"mask",
       [&m](const ConfigEntry& e) {
         if (e.value == "soft") {
           m.mask_mode = MaskMode::kSoft;
         } else if (e.value == "hard") {
           m.mask_mode = MaskMode::kHard;
         } else {
           bad_value(e, "'soft' or 'hard'");
         }
       }},
  };
}

void apply_entries(const std::vector<ConfigEntry>& entries, std::map<std::string, Setter>& setters) {
  std::set<std::string> seen;
  for (const ConfigEntry& e : entries) {
    const auto it = setters.find(e.key);
    if (it == setters.end()) {
      throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
    if (!seen.insert(e.key).second) {
      throw ConfigError("line " + std::to_string(e.line) + ": duplicate key '" + e.key + "'");
    }
    it->second(e);
  }
}

const char* mode_name(AdjustmentMode mode) {
  return mode == AdjustmentMode::kBrightness ? "brightness" : "motion";
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

std::vector<ConfigEntry> parse_config_entries(std::string_view text) {
  std::vector<ConfigEntry> entries;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t stop = std::min(text.find('\n', start), text.size());
    std::string_view line = text.substr(start, stop - start);
    ++line_no;
    start = stop + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    ConfigEntry entry{trim(std::string_view(content).substr(0, eq)),
                      trim(std::string_view(content).substr(eq + 1)), line_no};
    if (entry.key.empty() || entry.value.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

ModelConfig parse_model_config(std::string_view text) {
  ModelConfig config;
  auto setters = model_setters(config);
  apply_entries(parse_config_entries(text), setters);
  return config;
}

TrainConfig parse_train_config(std::string_view text) {
  TrainConfig c;
  auto setters = model_setters(c.model);
  setters.insert({
      {"learning_rate", [&c](const ConfigEntry& e) { c.learning_rate = to_double(e); }},
      {"batch_size", [&c](const ConfigEntry& e) { c.batch_size = to_unsigned(e); }},
      {"beta1", [&c](const ConfigEntry& e) { c.beta1 = to_double(e); }},
      {"beta2", [&c](const ConfigEntry& e) { c.beta2 = to_double(e); }},
      {"adam_epsilon", [&c](const ConfigEntry& e) { c.adam_epsilon = to_double(e); }},
      {"iterations", [&c](const ConfigEntry& e) { c.iterations = to_unsigned(e); }},
      {"seed", [&c](const ConfigEntry& e) { c.seed = to_unsigned(e); }},
      {"patch_size", [&c](const ConfigEntry& e) { c.patch_size = to_unsigned(e); }},
      {"checkpoint_every", [&c](const ConfigEntry& e) { c.checkpoint_every = to_unsigned(e); }},
      {"grad_clip", [&c](const ConfigEntry& e) { c.grad_clip = to_double(e); }},
      {"gamma", [&c](const ConfigEntry& e) { c.radiometry.gamma = to_double(e); }},
      {"mu", [&c](const ConfigEntry& e) { c.radiometry.mu = to_double(e); }},
      {"precision",
       [&c](const ConfigEntry& e) {
         if (e.value == "float64") {
           c.precision = Precision::kFloat64;
         } else if (e.value == "float32") {
           c.precision = Precision::kFloat32;
         } else {
           bad_value(e, "'float64' or 'float32'");
         }
       }},
      {"exposure_format",
       [&c](const ConfigEntry& e) {
         if (e.value == "times") {
           c.exposure_format = ExposureFormat::kTimes;
         } else if (e.value == "bias") {
           c.exposure_format = ExposureFormat::kBias;
         } else {
           bad_value(e, "'times' or 'bias'");
         }
       }},
  });
  apply_entries(parse_config_entries(text), setters);
  validate(c);
  return c;
}

void validate(const TrainConfig& c) {
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (c.batch_size == 0 || c.batch_size % 4 != 0) {
    throw ConfigError("batch_size must be a positive multiple of 4");
  }
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(c.adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
  if (c.patch_size < 2) throw ConfigError("patch_size must be at least 2");
  if (c.model.width == 0 || c.model.extractor_levels == 0) {
    throw ConfigError("width and extractor_levels must be positive");
  }
  if (!(c.model.mask_softness > 0.0)) throw ConfigError("mask_softness must be positive");
  if (!(c.radiometry.gamma > 0.0) || !(c.radiometry.mu > 0.0)) {
    throw ConfigError("gamma and mu must be positive");
  }
  if (c.grad_clip < 0.0) throw ConfigError("grad_clip must be non-negative");
}

std::string to_config_text(const ModelConfig& m) {
  std::ostringstream os;
  os << "width = " << m.width << '\n'
     << "extractor_levels = " << m.extractor_levels << '\n'
     << "residual_blocks = " << m.residual_blocks << '\n'
     << "mask_softness = " << format_double(m.mask_softness) << '\n'
     << "attention_temperature = " << format_double(m.attention_temperature) << '\n'
     << "mode = " << mode_name(m.mode) << '\n'
     << "mask = " << (m.mask_mode == MaskMode::kSoft ? "soft" : "hard") << '\n'
     << "hard_mask_threshold = " << format_double(m.hard_mask_threshold) << '\n';
  return os.str();
}

std::string to_config_text(const TrainConfig& c) {
  std::ostringstream os;
  os << to_config_text(c.model)
     << "learning_rate = " << format_double(c.learning_rate) << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "beta1 = " << format_double(c.beta1) << '\n'
     << "beta2 = " << format_double(c.beta2) << '\n'
     << "adam_epsilon = " << format_double(c.adam_epsilon) << '\n'
     << "iterations = " << c.iterations << '\n'
     << "seed = " << c.seed << '\n'
     << "precision = " << (c.precision == Precision::kFloat64 ? "float64" : "float32") << '\n'
     << "patch_size = " << c.patch_size << '\n'
     << "checkpoint_every = " << c.checkpoint_every << '\n'
     << "grad_clip = " << format_double(c.grad_clip) << '\n'
     << "gamma = " << format_double(c.radiometry.gamma) << '\n'
     << "mu = " << format_double(c.radiometry.mu) << '\n'
     << "exposure_format = " << (c.exposure_format == ExposureFormat::kTimes ? "times" : "bias")
     << '\n';
  return os.str();
}

}  // namespace hdrf
