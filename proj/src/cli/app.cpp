#include "rffr/cli/app.hpp"

#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "rffr/cli/commands.hpp"
#include "rffr/common/error.hpp"

namespace rffr::cli {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Real-face reconstruction residuals for deepfake detection", "rffr"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool overwrite = false;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--seed", seed, "global seed, overrides the config");
  app.add_option("--out", out_dir, "output directory, overrides the config");
  app.add_flag("--overwrite", overwrite, "replace earlier outputs of the command");

  auto* synth = app.add_subcommand("synth-data", "generate synthetic real/fake domains");
  auto* train_rffr = app.add_subcommand("train-rffr", "train the real-only reconstruction model");
  auto* train_det = app.add_subcommand("train-detector", "train one detector per training domain");
  auto* eval = app.add_subcommand("eval", "cross-domain AUC matrix, curves and model selection");
  auto* visualize = app.add_subcommand("visualize", "original / reconstruction / residual sheets");
  std::vector<std::string> images;
  visualize->add_option("--image", images, "image files (default: test-split samples)");
  auto* ablate = app.add_subcommand("ablate", "run one ablation study");
  std::string study_name;
  ablate->add_option("study", study_name, "residual_kind | block_size | input_variant | data_scale")->required();
  for (auto* sub : {synth, train_rffr, train_det, eval, visualize, ablate}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) config.seed = *seed;
    if (out_dir) config.output_dir = *out_dir;
    config = resolve(config);
    validate(config);
    const RunContext ctx = make_context(config, overwrite, &err);

    std::vector<std::string> files;
    try {
      if (*synth) files = cmd_synth_data(ctx);
      else if (*train_rffr) files = cmd_train_rffr(ctx);
      else if (*train_det) files = cmd_train_detector(ctx);
      else if (*eval) files = cmd_eval(ctx);
      else if (*visualize) {
        std::vector<std::filesystem::path> paths(images.begin(), images.end());
        files = cmd_visualize(ctx, paths);
      } else files = cmd_ablate(ctx, parse_study(study_name));
    } catch (...) {
      release_claims(ctx);
      throw;
    }
    for (const std::string& f : files) out << f << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const MissingPrerequisite& e) {
    err << "missing prerequisite: " << e.what() << '\n';
    return kExitMissing;
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace rffr::cli
