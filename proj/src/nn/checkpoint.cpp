#include "rffr/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace rffr::nn {

const TensorRecord& Checkpoint::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw InvalidInput("checkpoint has no tensor '" + name + "'");
}

namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

std::string tensor_file(const std::string& name) { return name + ".f32"; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const fs::path& dir) {
  fs::create_directories(dir);
  json meta;
  meta["format_version"] = kCheckpointFormatVersion;
  meta["role"] = checkpoint.role;
  meta["config"] = checkpoint.config;
  meta["schedule"] = checkpoint.schedule;
  meta["step"] = checkpoint.step;
  json tensors = json::array();
  for (const TensorRecord& t : checkpoint.tensors) {
    if (static_cast<std::size_t>(t.rows) * static_cast<std::size_t>(t.cols) != t.values.size()) {
      throw InvalidInput("tensor '" + t.name + "' shape does not match its value count");
    }
    tensors.push_back({{"name", t.name}, {"shape", {t.rows, t.cols}}, {"file", tensor_file(t.name)}});
    std::vector<std::uint32_t> words(t.values.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
      words[i] = to_little_endian(std::bit_cast<std::uint32_t>(t.values[i]));
    }
    std::ofstream out(dir / tensor_file(t.name), std::ios::binary);
    out.write(reinterpret_cast<const char*>(words.data()),
              static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
    if (!out) throw IoError("cannot write tensor file for '" + t.name + "' in " + dir.string());
  }
  meta["tensors"] = std::move(tensors);
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  if (!fs::exists(meta_path)) throw MissingPrerequisite("checkpoint not found: " + meta_path.string());
  std::ifstream in(meta_path);
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed " + meta_path.string() + ": " + e.what());
  }
  if (meta.value("format_version", 0) != kCheckpointFormatVersion) {
    throw InvalidInput("unsupported checkpoint format version in " + meta_path.string());
  }
  Checkpoint ckpt;
  ckpt.role = meta.at("role").get<std::string>();
  ckpt.config = meta.at("config");
  ckpt.schedule = meta.at("schedule");
  ckpt.step = meta.at("step").get<long>();
  for (const json& t : meta.at("tensors")) {
    TensorRecord rec;
    rec.name = t.at("name").get<std::string>();
    rec.rows = t.at("shape").at(0).get<int>();
    rec.cols = t.at("shape").at(1).get<int>();
    const fs::path file = dir / t.at("file").get<std::string>();
    const auto count = static_cast<std::size_t>(rec.rows) * static_cast<std::size_t>(rec.cols);
    if (!fs::exists(file) || fs::file_size(file) != count * sizeof(float)) {
      throw IoError("tensor file missing or truncated: " + file.string());
    }
    std::vector<std::uint32_t> words(count);
    std::ifstream tin(file, std::ios::binary);
    tin.read(reinterpret_cast<char*>(words.data()),
             static_cast<std::streamsize>(count * sizeof(std::uint32_t)));
    if (!tin) throw IoError("cannot read " + file.string());
    rec.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      rec.values[i] = std::bit_cast<float>(to_little_endian(words[i]));
    }
    ckpt.tensors.push_back(std::move(rec));
  }
  return ckpt;
}

}  // namespace rffr::nn
