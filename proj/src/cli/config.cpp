#include "rffr/cli/config.hpp"

#include <fstream>
#include <set>

#include "rffr/common/error.hpp"

namespace rffr {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TextureParams, smoothness_scale, palette_seed, grain_amplitude)

}  // namespace rffr

namespace rffr::cli {

using nlohmann::json;

namespace {

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

// Flags keys of `given` that a defaults-filled round trip does not produce.
void reject_unknown_keys(const json& given, const json& known, const std::string& where) {
  if (!given.is_object() || !known.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!known.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    if (value.is_object()) reject_unknown_keys(value, known.at(key), path);
    if (value.is_array() && known.at(key).is_array()) {
      for (std::size_t i = 0; i < value.size() && i < known.at(key).size(); ++i) {
        reject_unknown_keys(value[i], known.at(key)[i], path + "[" + std::to_string(i) + "]");
      }
    }
  }
}

}  // namespace

bool DomainSpec::operator==(const DomainSpec& o) const {
  return name == o.name && manifest == o.manifest && artifact_kind == o.artifact_kind && pairs == o.pairs &&
         artifact_region_fraction == o.artifact_region_fraction &&
         texture.smoothness_scale == o.texture.smoothness_scale && texture.palette_seed == o.texture.palette_seed &&
         texture.grain_amplitude == o.texture.grain_amplitude;
}

void to_json(json& j, const GridSettings& v) { j = json{{"k", v.k}, {"image_side", v.image_side}}; }
void from_json(const json& j, GridSettings& v) {
  read(j, "k", v.k);
  read(j, "image_side", v.image_side);
}

void to_json(json& j, const ResidualSettings& v) {
  j = json{{"generator", to_string(v.generator)}, {"p", v.p}, {"amplification", v.amplification}};
}
void from_json(const json& j, ResidualSettings& v) {
  if (j.contains("generator")) v.generator = parse_generator_kind(j.at("generator").get<std::string>());
  read(j, "p", v.p);
  read(j, "amplification", v.amplification);
}

void to_json(json& j, const DomainSpec& v) {
  j = json{{"name", v.name}};
  if (v.manifest) {
    j["manifest"] = *v.manifest;
    return;
  }
  j["artifact_kind"] = to_string(v.artifact_kind);
  j["pairs"] = v.pairs;
  j["artifact_region_fraction"] = v.artifact_region_fraction;
  j["texture"] = v.texture;
}
void from_json(const json& j, DomainSpec& v) {
  read(j, "name", v.name);
  if (j.contains("manifest")) v.manifest = j.at("manifest").get<std::string>();
  if (j.contains("artifact_kind")) v.artifact_kind = parse_artifact_kind(j.at("artifact_kind").get<std::string>());
  read(j, "pairs", v.pairs);
  read(j, "artifact_region_fraction", v.artifact_region_fraction);
  read(j, "texture", v.texture);
}

void to_json(json& j, const DataSettings& v) {
  j = json{{"domains", v.domains},
           {"train_domains", v.train_domains},
           {"test_domains", v.test_domains},
           {"real_fraction", v.real_fraction}};
}
void from_json(const json& j, DataSettings& v) {
  read(j, "domains", v.domains);
  read(j, "train_domains", v.train_domains);
  read(j, "test_domains", v.test_domains);
  read(j, "real_fraction", v.real_fraction);
}

void to_json(json& j, const EvalSettings& v) {
  j = json{{"cadence", v.cadence},
           {"selection_mode", v.selection_mode},
           {"validation_domain", v.validation_domain},
           {"eval_limit", v.eval_limit}};
}
void from_json(const json& j, EvalSettings& v) {
  read(j, "cadence", v.cadence);
  read(j, "selection_mode", v.selection_mode);
  read(j, "validation_domain", v.validation_domain);
  read(j, "eval_limit", v.eval_limit);
}

void to_json(json& j, const AblationSettings& v) {
  j = json{{"block_sizes", v.block_sizes}, {"data_scales", v.data_scales}};
}
void from_json(const json& j, AblationSettings& v) {
  read(j, "block_sizes", v.block_sizes);
  read(j, "data_scales", v.data_scales);
}

void to_json(json& j, const ExperimentConfig& v) {
  j = json{{"version", v.version},
           {"seed", v.seed},
           {"output_dir", v.output_dir},
           {"grid", v.grid},
           {"inpainter", v.inpainter},
           {"inpainter_schedule", v.inpainter_schedule},
           {"autoencoder", v.autoencoder},
           {"autoencoder_schedule", v.autoencoder_schedule},
           {"detector", v.detector},
           {"detector_schedule", v.detector_schedule},
           {"checkpoint_every", v.checkpoint_every},
           {"residual", v.residual},
           {"data", v.data},
           {"eval", v.eval},
           {"ablation", v.ablation}};
}
void from_json(const json& j, ExperimentConfig& v) {
  read(j, "version", v.version);
  read(j, "seed", v.seed);
  read(j, "output_dir", v.output_dir);
  read(j, "grid", v.grid);
  read(j, "inpainter", v.inpainter);
  read(j, "inpainter_schedule", v.inpainter_schedule);
  read(j, "autoencoder", v.autoencoder);
  read(j, "autoencoder_schedule", v.autoencoder_schedule);
  read(j, "detector", v.detector);
  read(j, "detector_schedule", v.detector_schedule);
  read(j, "checkpoint_every", v.checkpoint_every);
  read(j, "residual", v.residual);
  read(j, "data", v.data);
  read(j, "eval", v.eval);
  read(j, "ablation", v.ablation);
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (!j.contains("version")) throw ConfigError("config has no 'version' field");
  ExperimentConfig config;
  try {
    config = j.get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (config.version != kConfigVersion) {
    throw ConfigError("unsupported config version " + std::to_string(config.version));
  }
  reject_unknown_keys(j, json(config), "");
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

ExperimentConfig resolve(ExperimentConfig config) {
  const int side = config.grid.image_side;
  config.inpainter.image_side = side;
  config.autoencoder.image_side = side;
  config.detector.image_side = side;
  config.inpainter.rng_seed = derive_seed(config.seed, "inpainter");
  config.autoencoder.rng_seed = derive_seed(config.seed, "autoencoder");
  config.detector.rng_seed = derive_seed(config.seed, "detector");
  return config;
}

const DomainSpec& find_domain(const ExperimentConfig& config, const std::string& name) {
  for (const DomainSpec& d : config.data.domains) {
    if (d.name == name) return d;
  }
  throw ConfigError("unknown domain '" + name + "'");
}

void validate(const ExperimentConfig& config, const std::filesystem::path& base_dir) {
  try {
    const BlockGrid grid(config.grid.k, config.grid.image_side);
    config.inpainter.validate();
    config.inpainter.check_grid(grid);
    config.autoencoder.validate();
    config.detector.validate();
    config.detector.check_grid(grid);
    config.inpainter_schedule.validate();
    config.autoencoder_schedule.validate();
    config.detector_schedule.validate();
    config.residual.amplification.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  if (!(config.residual.p > 0.0 && config.residual.p <= 1.0)) throw ConfigError("residual.p must lie in (0, 1]");
  if (config.checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
  if (config.eval.cadence < 0) throw ConfigError("eval.cadence must be non-negative");
  if (config.checkpoint_every > 0 && config.eval.cadence > 0 && config.checkpoint_every % config.eval.cadence != 0) {
    throw ConfigError("checkpoint_every must be a multiple of eval.cadence");
  }
  if (!(config.data.real_fraction > 0.0 && config.data.real_fraction <= 1.0)) {
    throw ConfigError("data.real_fraction must lie in (0, 1]");
  }

  std::set<std::string> names;
  for (const DomainSpec& d : config.data.domains) {
    if (d.name.empty()) throw ConfigError("a domain has an empty name");
    if (!names.insert(d.name).second) throw ConfigError("duplicate domain '" + d.name + "'");
    if (d.synthetic()) {
      if (d.pairs < 1) throw ConfigError("domain '" + d.name + "': pairs must be at least 1");
      SyntheticConfig probe;
      probe.artifact_region_fraction = d.artifact_region_fraction;
      probe.texture = d.texture;
      try {
        probe.validate();
      } catch (const InvalidInput& e) {
        throw ConfigError("domain '" + d.name + "': " + e.what());
      }
    } else {
      const std::filesystem::path path = base_dir / *d.manifest;
      if (!std::filesystem::exists(path)) {
        throw ConfigError("domain '" + d.name + "': manifest not found: " + path.string());
      }
    }
  }
  for (const auto* list : {&config.data.train_domains, &config.data.test_domains}) {
    for (const std::string& n : *list) {
      if (!names.count(n)) throw ConfigError("unknown domain '" + n + "' in data settings");
    }
  }
  if (!config.eval.validation_domain.empty() && !names.count(config.eval.validation_domain)) {
    throw ConfigError("unknown validation domain '" + config.eval.validation_domain + "'");
  }
}

}  // namespace rffr::cli
