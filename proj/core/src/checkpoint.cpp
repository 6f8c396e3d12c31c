#include "hdrf/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "hdrf/config.hpp"
#include "hdrf/error.hpp"
#include "hdrf/image_io.hpp"

namespace hdrf {
namespace {

constexpr char kMagic[4] = {'H', 'D', 'R', 'F'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { little(v, 4); }
  void u64(std::uint64_t v) { little(v, 8); }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<unsigned char> take() { return std::move(bytes_); }

 private:
  void little(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated checkpoint while reading ") + what, pos_);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(little(4, what)); }
  std::uint64_t u64(const char* what) { return little(8, what); }
  std::string string(std::size_t n, const char* what) {
    need(n, what);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }

 private:
  std::uint64_t little(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
  for (const CheckpointEntry& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

void Checkpoint::add_tensor(const std::string& name, const Tensor& tensor,
                            CheckpointDType dtype) {
  if (dtype == CheckpointDType::kBytes) {
    throw ContractViolation("add_tensor needs a floating-point dtype");
  }
  CheckpointEntry entry{name, dtype, tensor.shape(),
                        std::vector<double>(tensor.data().begin(), tensor.data().end()), {}};
  if (dtype == CheckpointDType::kFloat32) {
    for (double& v : entry.values) v = static_cast<float>(v);
  }
  entries.push_back(std::move(entry));
}

void Checkpoint::add_bytes(const std::string& name, std::string bytes) {
  entries.push_back({name, CheckpointDType::kBytes, {bytes.size()}, {}, std::move(bytes)});
}

std::vector<unsigned char> encode_checkpoint(const Checkpoint& checkpoint) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(checkpoint.entries.size()));
  for (const CheckpointEntry& e : checkpoint.entries) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.raw(e.name.data(), e.name.size());
    w.u8(static_cast<std::uint8_t>(e.dtype));
    w.u32(static_cast<std::uint32_t>(e.shape.size()));
    for (std::size_t d : e.shape) w.u64(d);
    switch (e.dtype) {
      case CheckpointDType::kFloat64:
        for (double v : e.values) w.u64(std::bit_cast<std::uint64_t>(v));
        break;
      case CheckpointDType::kFloat32:
        for (double v : e.values) w.u32(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        break;
      case CheckpointDType::kBytes:
        w.raw(e.bytes.data(), e.bytes.size());
        break;
    }
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  Reader r(bytes);
  if (r.string(4, "magic") != std::string(kMagic, 4)) throw FormatError("bad checkpoint magic", 0);
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  }
  const std::uint32_t count = r.u32("entry count");
  Checkpoint checkpoint;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    e.name = r.string(r.u32("name length"), "name");
    const std::size_t dtype_at = r.offset();
    const std::uint8_t dtype = r.u8("dtype");
    if (dtype > 2) throw FormatError("unknown dtype " + std::to_string(dtype), dtype_at);
    e.dtype = static_cast<CheckpointDType>(dtype);
    const std::uint32_t rank = r.u32("rank");
    std::uint64_t count_elems = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const std::uint64_t extent = r.u64("dimension");
      if (extent != 0 && count_elems > (std::uint64_t{1} << 40) / extent) {
        throw FormatError("implausible tensor size for '" + e.name + "'", r.offset());
      }
      count_elems *= extent;
      e.shape.push_back(static_cast<std::size_t>(extent));
    }
    switch (e.dtype) {
      case CheckpointDType::kFloat64:
        r.need(count_elems * 8, "float64 payload");
        e.values.resize(count_elems);
        for (double& v : e.values) v = std::bit_cast<double>(r.u64("payload"));
        break;
      case CheckpointDType::kFloat32:
        r.need(count_elems * 4, "float32 payload");
        e.values.resize(count_elems);
        for (double& v : e.values) v = std::bit_cast<float>(r.u32("payload"));
        break;
      case CheckpointDType::kBytes:
        if (rank != 1) throw FormatError("byte entry '" + e.name + "' must be rank 1", r.offset());
        e.bytes = r.string(count_elems, "byte payload");
        break;
    }
    checkpoint.entries.push_back(std::move(e));
  }
  if (r.offset() != bytes.size()) throw FormatError("trailing bytes after checkpoint", r.offset());
  return checkpoint;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  // Write-then-rename so an interrupted save never clobbers the previous file.
  const std::filesystem::path tmp = path.string() + ".tmp";
  write_file_bytes(tmp, encode_checkpoint(checkpoint));
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path));
}

Checkpoint make_model_checkpoint(const ParameterSet& params, const ModelConfig& config) {
  Checkpoint checkpoint;
  checkpoint.add_bytes("meta.config", to_config_text(config));
  for (const auto& [name, tensor] : params) checkpoint.add_tensor(name, tensor);
  return checkpoint;
}

void restore_parameters(const Checkpoint& checkpoint, ParameterSet& params) {
  for (auto& [name, tensor] : params) {
    const CheckpointEntry* entry = checkpoint.find(name);
    if (entry == nullptr) throw FormatError("checkpoint lacks parameter '" + name + "'", 0);
    if (entry->dtype == CheckpointDType::kBytes || entry->shape != tensor.shape()) {
      throw FormatError("parameter '" + name + "' has shape " + shape_string(entry->shape) +
                            ", expected " + shape_string(tensor.shape()),
                        0);
    }
    std::copy(entry->values.begin(), entry->values.end(), tensor.mutable_data().begin());
  }
}

LoadedModel load_model(const Checkpoint& checkpoint) {
  const CheckpointEntry* meta = checkpoint.find("meta.config");
  if (meta == nullptr || meta->dtype != CheckpointDType::kBytes) {
    throw FormatError("checkpoint has no model configuration", 0);
  }
  LoadedModel model;
  try {
    model.config = parse_model_config(meta->bytes);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint model configuration: ") + e.what(), 0);
  }
  model.params = init_parameters(model.config, 0);
  restore_parameters(checkpoint, model.params);
  return model;
}

}  // namespace hdrf
