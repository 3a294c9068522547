#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rffr/data/synthetic.hpp"
#include "rffr/detector/detector.hpp"
#include "rffr/eval/report.hpp"
#include "rffr/inpainter/inpainter.hpp"
#include "rffr/residual/autoencoder.hpp"
#include "rffr/residual/residual.hpp"

namespace rffr::cli {

inline constexpr int kConfigVersion = 1;

struct GridSettings {
  int k = 4;
  int image_side = 224;

  bool operator==(const GridSettings&) const = default;
};

struct ResidualSettings {
  GeneratorKind generator = GeneratorKind::kMim;
  double p = 0.25;
  AmplificationConfig amplification;

  bool operator==(const ResidualSettings&) const = default;
};

/// A synthetic domain is generated by `synth-data`; an external one points at
/// a manifest of pre-cropped images.
struct DomainSpec {
  std::string name;
  std::optional<std::string> manifest;
  ArtifactKind artifact_kind = ArtifactKind::kBlendSeam;
  int pairs = 100;
  double artifact_region_fraction = 0.12;
  TextureParams texture;

  bool synthetic() const { return !manifest.has_value(); }
  bool operator==(const DomainSpec& o) const;
};

struct DataSettings {
  std::vector<DomainSpec> domains;
  std::vector<std::string> train_domains;
  std::vector<std::string> test_domains;
  /// Fraction of the available REAL training images given to the inpainter.
  double real_fraction = 1.0;

  bool operator==(const DataSettings&) const = default;
};

struct EvalSettings {
  int cadence = 50;
  SelectionMode selection_mode = SelectionMode::kValidationFree;
  /// Domain whose VAL split drives oracle selection; empty means each test
  /// domain validates itself.
  std::string validation_domain;
  int eval_limit = 0;  // cap on scored test images per domain, 0 = all

  bool operator==(const EvalSettings&) const = default;
};

struct AblationSettings {
  std::vector<int> block_sizes{2, 4, 6};
  std::vector<double> data_scales{0.25, 0.5, 1.0};

  bool operator==(const AblationSettings&) const = default;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  GridSettings grid;
  InpainterConfig inpainter;
  nn::TrainSchedule inpainter_schedule{7.5e-5, 0, 1, 128, 0.05};
  AutoencoderConfig autoencoder;
  nn::TrainSchedule autoencoder_schedule{7.5e-5, 0, 1, 128, 0.05};
  DetectorConfig detector;
  nn::TrainSchedule detector_schedule{2e-5, 0, 15000, 128, 0.05};
  /// Detector snapshots are written every this many steps (0: final only).
  int checkpoint_every = 0;
  ResidualSettings residual;
  DataSettings data;
  EvalSettings eval;
  AblationSettings ablation;

  bool operator==(const ExperimentConfig&) const = default;
};

void to_json(nlohmann::json& j, const GridSettings& v);
void from_json(const nlohmann::json& j, GridSettings& v);
void to_json(nlohmann::json& j, const ResidualSettings& v);
void from_json(const nlohmann::json& j, ResidualSettings& v);
void to_json(nlohmann::json& j, const DomainSpec& v);
void from_json(const nlohmann::json& j, DomainSpec& v);
void to_json(nlohmann::json& j, const DataSettings& v);
void from_json(const nlohmann::json& j, DataSettings& v);
void to_json(nlohmann::json& j, const EvalSettings& v);
void from_json(const nlohmann::json& j, EvalSettings& v);
void to_json(nlohmann::json& j, const AblationSettings& v);
void from_json(const nlohmann::json& j, AblationSettings& v);
void to_json(nlohmann::json& j, const ExperimentConfig& v);
void from_json(const nlohmann::json& j, ExperimentConfig& v);

/// Parses a config file; missing keys take their defaults. Throws ConfigError.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const nlohmann::json& j);

/// Pushes the image side and seed into every component config. Component
/// seeds are derived from the global seed.
ExperimentConfig resolve(ExperimentConfig config);

/// Checks geometry and cross-references; throws ConfigError naming the problem.
void validate(const ExperimentConfig& config, const std::filesystem::path& base_dir = {});

const DomainSpec& find_domain(const ExperimentConfig& config, const std::string& name);

}  // namespace rffr::cli
