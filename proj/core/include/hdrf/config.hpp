#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hdrf/dataset.hpp"
#include "hdrf/linalg.hpp"
#include "hdrf/networks.hpp"
#include "hdrf/radiometry.hpp"

namespace hdrf {

struct TrainConfig {
  ModelConfig model;
  GammaConfig radiometry;
  double learning_rate = 1e-4;
  std::size_t batch_size = 16;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t iterations = 2000;
  std::uint64_t seed = 0;
  Precision precision = Precision::kFloat64;
  std::size_t patch_size = 128;
  std::size_t checkpoint_every = 500;  // 0 = only at the end
  double grad_clip = 0.0;              // global-norm clip, 0 = off
  ExposureFormat exposure_format = ExposureFormat::kTimes;

  bool operator==(const TrainConfig&) const = default;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// One `key = value` per line; '#' starts a comment; blank lines ignored.
std::vector<ConfigEntry> parse_config_entries(std::string_view text);

// Unknown keys and malformed values raise ConfigError naming the line.
TrainConfig parse_train_config(std::string_view text);
ModelConfig parse_model_config(std::string_view text);

// Round-trippable text forms (doubles printed in shortest exact form).
std::string to_config_text(const TrainConfig& config);
std::string to_config_text(const ModelConfig& config);

// Throws ConfigError when a value is out of its valid range.
void validate(const TrainConfig& config);

std::string format_double(double value);

}  // namespace hdrf
