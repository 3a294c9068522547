#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rffr/cli/config.hpp"
#include "rffr/eval/harness.hpp"

namespace rffr::cli {

enum class Study { kResidualKind, kBlockSize, kInputVariant, kDataScale };

std::string_view to_string(Study study);
/// Accepts "residual_kind", "block_size", "input_variant", "data_scale" in any case.
Study parse_study(std::string_view text);

struct RunContext {
  ExperimentConfig config;  // resolved
  std::filesystem::path out;
  bool overwrite = false;
  std::ostream* log = nullptr;
  // Directories claimed so far; a failed command removes them again.
  std::shared_ptr<std::vector<std::filesystem::path>> claimed =
      std::make_shared<std::vector<std::filesystem::path>>();
};

/// Removes every directory the command claimed.
void release_claims(const RunContext& ctx);

/// Builds a context from a resolved, validated config.
RunContext make_context(const ExperimentConfig& config, bool overwrite, std::ostream* log = nullptr);

/// Each command writes `<command>.config.json` (the resolved config) and
/// `<command>.outputs.json` (every produced file with its size and hash) into
/// the output directory, and refuses to replace earlier outputs unless
/// `overwrite` is set. The returned paths are relative to the output directory.
std::vector<std::string> cmd_synth_data(const RunContext& ctx);
std::vector<std::string> cmd_train_rffr(const RunContext& ctx);
std::vector<std::string> cmd_train_detector(const RunContext& ctx);
std::vector<std::string> cmd_eval(const RunContext& ctx);
std::vector<std::string> cmd_visualize(const RunContext& ctx, const std::vector<std::filesystem::path>& images);
std::vector<std::string> cmd_ablate(const RunContext& ctx, Study study);

/// Where commands put things, relative to the output directory.
namespace layout {
std::filesystem::path domain_manifest(const std::string& domain);
std::filesystem::path inpainter();
std::filesystem::path autoencoder();
std::filesystem::path detector(const std::string& train_domain);
std::filesystem::path report();
}  // namespace layout

}  // namespace rffr::cli
