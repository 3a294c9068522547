#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rffr/common/error.hpp"
#include "rffr/nn/tensor.hpp"

namespace rffr::nn {

inline constexpr int kCheckpointFormatVersion = 1;

struct TensorRecord {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<float> values;
};

/// Directory container: meta.json plus one little-endian float32 file per tensor.
struct Checkpoint {
  std::string role;
  nlohmann::json config;
  nlohmann::json schedule;
  long step = 0;
  std::vector<TensorRecord> tensors;

  const TensorRecord& tensor(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

template <class T>
std::vector<TensorRecord> to_records(const ParameterList<T>& params) {
  std::vector<TensorRecord> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    const Matrix<T>& v = p.param->value;
    TensorRecord r{p.name, static_cast<int>(v.rows()), static_cast<int>(v.cols()), {}};
    r.values.resize(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) r.values[static_cast<std::size_t>(i)] = static_cast<float>(v.data()[i]);
    out.push_back(std::move(r));
  }
  return out;
}

/// Copies record values into same-named parameters; shapes must match and
/// every parameter must be present.
template <class T>
void from_records(const std::vector<TensorRecord>& records, const ParameterList<T>& params) {
  if (records.size() != params.size()) {
    throw InvalidInput("checkpoint holds " + std::to_string(records.size()) +
                       " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const TensorRecord* rec = nullptr;
    if (records[i].name == params[i].name) {
      rec = &records[i];
    } else {
      for (const auto& r : records)
        if (r.name == params[i].name) rec = &r;
    }
    if (!rec) throw InvalidInput("checkpoint is missing tensor '" + params[i].name + "'");
    Matrix<T>& v = params[i].param->value;
    if (rec->rows != v.rows() || rec->cols != v.cols()) {
      throw InvalidInput("tensor '" + rec->name + "' has shape " + std::to_string(rec->rows) + "x" +
                         std::to_string(rec->cols) + ", model expects " + std::to_string(v.rows()) +
                         "x" + std::to_string(v.cols()));
    }
    for (Eigen::Index j = 0; j < v.size(); ++j) v.data()[j] = static_cast<T>(rec->values[static_cast<std::size_t>(j)]);
  }
}

}  // namespace rffr::nn
