#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hdrf/networks.hpp"

// Binary layout, all integers little-endian:
//   "HDRF" | u32 version | u32 entry count |
//   per entry: u32 name length | name | u8 dtype | u32 rank | u64 dims[rank] | payload
// dtype 0 = float64, 1 = float32, 2 = raw bytes (rank 1).
namespace hdrf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class CheckpointDType : std::uint8_t { kFloat64 = 0, kFloat32 = 1, kBytes = 2 };

struct CheckpointEntry {
  std::string name;
  CheckpointDType dtype = CheckpointDType::kFloat64;
  Shape shape;
  std::vector<double> values;  // float dtypes
  std::string bytes;           // kBytes

  bool operator==(const CheckpointEntry&) const = default;
};

struct Checkpoint {
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry* find(const std::string& name) const;
  void add_tensor(const std::string& name, const Tensor& tensor,
                  CheckpointDType dtype = CheckpointDType::kFloat64);
  void add_bytes(const std::string& name, std::string bytes);

  bool operator==(const Checkpoint&) const = default;
};

std::vector<unsigned char> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Model parameters plus the model configuration text under "meta.config".
Checkpoint make_model_checkpoint(const ParameterSet& params, const ModelConfig& config);

// Copies values into `params`; every expected name must be present with the
// same shape, otherwise a FormatError names the offender.
void restore_parameters(const Checkpoint& checkpoint, ParameterSet& params);

struct LoadedModel {
  ModelConfig config;
  ParameterSet params;
};

// Rebuilds the model described by "meta.config" and fills its parameters.
LoadedModel load_model(const Checkpoint& checkpoint);

}  // namespace hdrf
