#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace rffr {

inline constexpr int kReportSchemaVersion = 1;

enum class SelectionMode { kOracleValidated, kValidationFree };

NLOHMANN_JSON_SERIALIZE_ENUM(SelectionMode, {{SelectionMode::kOracleValidated, "oracle_validated"},
                                             {SelectionMode::kValidationFree, "validation_free"}})

/// One (train, test) entry. Either `auc_percent` is set or `error` explains
/// why the cell could not be scored.
struct MatrixCell {
  std::string train_domain;
  std::string test_domain;
  std::optional<double> auc_percent;
  bool intra_domain = false;
  std::string error;

  bool operator==(const MatrixCell&) const = default;
};

struct CurvePoint {
  long iteration = 0;
  double auc = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

using Curves = std::map<std::string, std::vector<CurvePoint>>;

/// Oracle-validated and validation-free results for one target domain.
struct SelectionRecord {
  std::string train_domain;
  std::string test_domain;
  std::string validation_domain;
  long oracle_step = 0;
  double oracle_auc_percent = 0.0;
  long final_step = 0;
  double final_auc_percent = 0.0;
  double gap = 0.0;  // final - oracle, in AUC points

  bool operator==(const SelectionRecord&) const = default;
};

struct EvalReport {
  int schema_version = kReportSchemaVersion;
  SelectionMode selection_mode = SelectionMode::kValidationFree;
  std::vector<MatrixCell> matrix;
  std::map<std::string, Curves> curves;  // keyed by train domain
  std::vector<SelectionRecord> selections;
  nlohmann::json extra = nlohmann::json::object();

  const MatrixCell* cell(const std::string& train, const std::string& test) const;
  bool operator==(const EvalReport&) const = default;
};

void to_json(nlohmann::json& j, const MatrixCell& c);
void from_json(const nlohmann::json& j, MatrixCell& c);
void to_json(nlohmann::json& j, const CurvePoint& p);
void from_json(const nlohmann::json& j, CurvePoint& p);
void to_json(nlohmann::json& j, const SelectionRecord& r);
void from_json(const nlohmann::json& j, SelectionRecord& r);
void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

/// Serialized form used on disk: pretty-printed JSON with a trailing newline.
std::string report_text(const EvalReport& report);
void save_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport load_report(const std::filesystem::path& path);

}  // namespace rffr
