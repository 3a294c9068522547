#include "rffr/eval/report.hpp"

#include <fstream>
#include <sstream>

#include "rffr/common/error.hpp"

namespace rffr {

using nlohmann::json;

const MatrixCell* EvalReport::cell(const std::string& train, const std::string& test) const {
  for (const MatrixCell& c : matrix) {
    if (c.train_domain == train && c.test_domain == test) return &c;
  }
  return nullptr;
}

void to_json(json& j, const MatrixCell& c) {
  j = json{{"train_domain", c.train_domain}, {"test_domain", c.test_domain}, {"intra_domain", c.intra_domain}};
  j["auc_percent"] = c.auc_percent ? json(*c.auc_percent) : json(nullptr);
  if (!c.error.empty()) j["error"] = c.error;
}

void from_json(const json& j, MatrixCell& c) {
  j.at("train_domain").get_to(c.train_domain);
  j.at("test_domain").get_to(c.test_domain);
  j.at("intra_domain").get_to(c.intra_domain);
  const json& a = j.at("auc_percent");
  c.auc_percent = a.is_null() ? std::nullopt : std::optional<double>(a.get<double>());
  c.error = j.value("error", std::string());
}

void to_json(json& j, const CurvePoint& p) { j = json::array({p.iteration, p.auc}); }

void from_json(const json& j, CurvePoint& p) {
  p.iteration = j.at(0).get<long>();
  p.auc = j.at(1).get<double>();
}

void to_json(json& j, const SelectionRecord& r) {
  j = json{{"train_domain", r.train_domain},
           {"test_domain", r.test_domain},
           {"validation_domain", r.validation_domain},
           {"oracle_step", r.oracle_step},
           {"oracle_auc_percent", r.oracle_auc_percent},
           {"final_step", r.final_step},
           {"final_auc_percent", r.final_auc_percent},
           {"gap", r.gap}};
}

void from_json(const json& j, SelectionRecord& r) {
  j.at("train_domain").get_to(r.train_domain);
  j.at("test_domain").get_to(r.test_domain);
  j.at("validation_domain").get_to(r.validation_domain);
  j.at("oracle_step").get_to(r.oracle_step);
  j.at("oracle_auc_percent").get_to(r.oracle_auc_percent);
  j.at("final_step").get_to(r.final_step);
  j.at("final_auc_percent").get_to(r.final_auc_percent);
  j.at("gap").get_to(r.gap);
}

void to_json(json& j, const EvalReport& r) {
  j = json{{"schema_version", r.schema_version},
           {"selection_mode", r.selection_mode},
           {"matrix", r.matrix},
           {"curves", r.curves},
           {"selections", r.selections},
           {"extra", r.extra}};
}

void from_json(const json& j, EvalReport& r) {
  j.at("schema_version").get_to(r.schema_version);
  if (r.schema_version != kReportSchemaVersion) {
    throw InvalidInput("unsupported report schema version " + std::to_string(r.schema_version));
  }
  j.at("selection_mode").get_to(r.selection_mode);
  j.at("matrix").get_to(r.matrix);
  j.at("curves").get_to(r.curves);
  j.at("selections").get_to(r.selections);
  r.extra = j.value("extra", json::object());
}

std::string report_text(const EvalReport& report) { return json(report).dump(2) + "\n"; }

void save_report(const EvalReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report " + path.string());
  out << report_text(report);
  if (!out) throw IoError("failed writing report " + path.string());
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingPrerequisite("report not found: " + path.string());
  try {
    return json::parse(in).get<EvalReport>();
  } catch (const json::exception& e) {
    throw IoError("malformed report " + path.string() + ": " + e.what());
  }
}

}  // namespace rffr
