#include "rffr/cli/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

#include "rffr/common/error.hpp"
#include "rffr/eval/plot.hpp"

namespace rffr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Study study) {
  switch (study) {
    case Study::kResidualKind: return "residual_kind";
    case Study::kBlockSize: return "block_size";
    case Study::kInputVariant: return "input_variant";
    case Study::kDataScale: return "data_scale";
  }
  return "?";
}

Study parse_study(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  std::replace(lower.begin(), lower.end(), '-', '_');
  for (Study s : {Study::kResidualKind, Study::kBlockSize, Study::kInputVariant, Study::kDataScale}) {
    if (lower == to_string(s)) return s;
  }
  throw ConfigError("unknown study '" + std::string(text) +
                    "' (expected residual_kind|block_size|input_variant|data_scale)");
}

namespace layout {
fs::path domain_manifest(const std::string& domain) { return fs::path("data") / domain / "manifest.csv"; }
fs::path inpainter() { return "inpainter"; }
fs::path autoencoder() { return "autoencoder"; }
fs::path detector(const std::string& train_domain) { return fs::path("detector") / train_domain; }
fs::path report() { return fs::path("eval") / "report.json"; }
}  // namespace layout

RunContext make_context(const ExperimentConfig& config, bool overwrite, std::ostream* log) {
  return RunContext{config, fs::path(config.output_dir), overwrite, log};
}

void release_claims(const RunContext& ctx) {
  std::error_code ec;
  for (const fs::path& dir : *ctx.claimed) fs::remove_all(dir, ec);
  ctx.claimed->clear();
}

namespace {

void say(const RunContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << '\n' << std::flush;
}

// Claims a command-owned directory, clearing it when overwriting is allowed.
void claim(const RunContext& ctx, const fs::path& rel) {
  const fs::path dir = ctx.out / rel;
  if (fs::exists(dir)) {
    if (!ctx.overwrite) throw ConfigError(dir.string() + " already exists; pass --overwrite to replace it");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
  ctx.claimed->push_back(dir);
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Lists every regular file below the given directories, sorted.
std::vector<std::string> files_under(const RunContext& ctx, const std::vector<fs::path>& dirs) {
  std::vector<std::string> out;
  for (const fs::path& rel : dirs) {
    const fs::path dir = ctx.out / rel;
    if (!fs::exists(dir)) continue;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file()) out.push_back(fs::relative(e.path(), ctx.out).generic_string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> finish(const RunContext& ctx, const std::string& command, std::vector<std::string> files) {
  write_json(ctx.out / (command + ".config.json"), json(ctx.config));
  json listing = json::array();
  for (const std::string& f : files) {
    listing.push_back({{"path", f}, {"bytes", fs::file_size(ctx.out / f)}, {"fnv1a64", file_digest(ctx.out / f)}});
  }
  write_json(ctx.out / (command + ".outputs.json"), json{{"command", command}, {"files", listing}});
  files.push_back(command + ".config.json");
  files.push_back(command + ".outputs.json");
  say(ctx, command + ": wrote " + std::to_string(files.size()) + " files under " + ctx.out.string());
  return files;
}

BlockGrid grid_of(const ExperimentConfig& c) { return BlockGrid(c.grid.k, c.grid.image_side); }

fs::path manifest_path(const RunContext& ctx, const DomainSpec& d) {
  return d.synthetic() ? ctx.out / layout::domain_manifest(d.name) : fs::path(*d.manifest);
}

std::vector<ImageSample> domain_samples(const RunContext& ctx, const std::string& name, Split split) {
  const fs::path path = manifest_path(ctx, find_domain(ctx.config, name));
  if (!fs::exists(path)) {
    throw MissingPrerequisite("manifest for domain '" + name + "' not found: " + path.string() +
                              " (run synth-data first)");
  }
  return load_samples(load_manifest(path), split, ctx.config.grid.image_side);
}

std::vector<ImageSample> limited(std::vector<ImageSample> samples, int limit) {
  if (limit > 0 && samples.size() > static_cast<std::size_t>(limit)) samples.resize(static_cast<std::size_t>(limit));
  return samples;
}

TestSets test_sets(const RunContext& ctx, Split split = Split::kTest) {
  TestSets out;
  for (const std::string& name : ctx.config.data.test_domains) {
    out[name] = limited(domain_samples(ctx, name, split), ctx.config.eval.eval_limit);
  }
  return out;
}

std::vector<ImageSample> real_training_images(const RunContext& ctx, double fraction) {
  std::vector<ImageSample> reals;
  for (const std::string& name : ctx.config.data.train_domains) {
    for (ImageSample& s : domain_samples(ctx, name, Split::kTrain)) {
      if (s.label == Label::kReal) reals.push_back(std::move(s));
    }
  }
  if (reals.empty()) throw ConfigError("no REAL training images in the train domains");
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(reals.size())));
  reals.resize(std::max<std::size_t>(1, std::min(keep, reals.size())));
  return reals;
}

TrainProgress progress_logger(const RunContext& ctx, const std::string& what, int total) {
  if (!ctx.log) return {};
  const int every = std::max(1, total / 10);
  return [&ctx, what, every, total](int step, double loss) {
    if ((step + 1) % every == 0 || step + 1 == total) {
      say(ctx, what + " step " + std::to_string(step + 1) + "/" + std::to_string(total) + " loss " +
                   std::to_string(loss));
    }
  };
}

Inpainter fit_inpainter(const RunContext& ctx, const InpainterConfig& config, const BlockGrid& grid,
                        std::vector<ImageSample> reals) {
  const nn::TrainSchedule& s = ctx.config.inpainter_schedule;
  BatchIterator stream(std::move(reals), static_cast<std::size_t>(s.batch_size),
                       derive_seed(ctx.config.seed, "inpainter-batches"));
  return train_inpainter(config, s, stream, grid, progress_logger(ctx, "inpainter", s.total_steps)).model;
}

Autoencoder fit_autoencoder(const RunContext& ctx, std::vector<ImageSample> reals) {
  const nn::TrainSchedule& s = ctx.config.autoencoder_schedule;
  BatchIterator stream(std::move(reals), static_cast<std::size_t>(s.batch_size),
                       derive_seed(ctx.config.seed, "autoencoder-batches"));
  return train_autoencoder(ctx.config.autoencoder, s, stream, progress_logger(ctx, "autoencoder", s.total_steps))
      .model;
}

ResidualGenerator load_generator(const RunContext& ctx, GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kMim:
      return ResidualGenerator::mim(std::make_shared<const Inpainter>(
          inpainter_from_checkpoint(nn::load_checkpoint(ctx.out / layout::inpainter()))));
    case GeneratorKind::kAutoencoder:
      return ResidualGenerator::autoencoder(std::make_shared<const Autoencoder>(
          autoencoder_from_checkpoint(nn::load_checkpoint(ctx.out / layout::autoencoder()))));
    case GeneratorKind::kHighpass: return ResidualGenerator::highpass();
    case GeneratorKind::kNone: return ResidualGenerator::none();
  }
  throw ConfigError("unknown generator kind");
}

DetectorConfig detector_config_for(const ExperimentConfig& c, GeneratorKind kind) {
  DetectorConfig d = c.detector;
  if (kind == GeneratorKind::kNone && d.uses_residual()) {
    throw ConfigError("generator 'none' needs detector.branches = original_only");
  }
  return d;
}

std::string snapshot_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%07d", step);
  return buf;
}

// Trains one detector per training domain and returns them keyed by domain.
std::map<std::string, TrainedDetector> train_detectors(const RunContext& ctx, const ResidualGenerator& generator,
                                                       const DetectorConfig& config, const BlockGrid& grid,
                                                       double p) {
  std::map<std::string, TrainedDetector> out;
  const nn::TrainSchedule& s = ctx.config.detector_schedule;
  for (const std::string& domain : ctx.config.data.train_domains) {
    BatchIterator stream(domain_samples(ctx, domain, Split::kTrain), static_cast<std::size_t>(s.batch_size),
                         derive_seed(ctx.config.seed, "detector-batches/" + domain));
    ResidualCache residuals(generator, grid, ctx.config.residual.amplification);
    DetectorTrainOptions options;
    options.p = p;
    options.progress = progress_logger(ctx, "detector[" + domain + "]", s.total_steps);
    auto run = train_detector(config, s, stream, residuals, options);
    out[domain] = {std::make_shared<const Detector>(std::move(run.model)), generator};
  }
  return out;
}

std::vector<std::string> snapshot_steps(const fs::path& dir) {
  std::vector<std::string> names;
  if (!fs::exists(dir)) return names;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string n = e.path().filename().string();
    if (e.is_directory() && n.rfind("step_", 0) == 0) names.push_back(n);
  }
  std::sort(names.begin(), names.end());
  return names;
}

double percent_auc(const Detector& model, ResidualCache& cache, const std::vector<ImageSample>& samples) {
  return 100.0 * auc(score_samples(model, cache, samples));
}

json matrix_json(const EvalReport& r) {
  json rows = json::array();
  for (const MatrixCell& c : r.matrix) rows.push_back(c);
  return rows;
}

double mean_cross_domain(const EvalReport& r) {
  double sum = 0.0;
  int n = 0;
  for (const MatrixCell& c : r.matrix) {
    if (!c.intra_domain && c.auc_percent) {
      sum += *c.auc_percent;
      ++n;
    }
  }
  return n ? sum / n : std::nan("");
}

void write_table(const fs::path& path, const std::string& study, const json& rows) {
  std::ofstream out(path);
  out << "study: " << study << "\n";
  for (const json& row : rows) {
    out << row.at("label").get<std::string>();
    for (const json& c : row.at("matrix")) {
      out << "  " << c.at("train_domain").get<std::string>() << "->" << c.at("test_domain").get<std::string>()
          << " ";
      if (c.at("auc_percent").is_null()) out << "error";
      else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", c.at("auc_percent").get<double>());
        out << buf;
      }
    }
    if (row.contains("inpainter_passes")) out << "  cost " << row.at("inpainter_passes").get<int>() << "x";
    out << "\n";
  }
}

}  // namespace

std::vector<std::string> cmd_synth_data(const RunContext& ctx) {
  std::vector<fs::path> dirs;
  for (const DomainSpec& d : ctx.config.data.domains) {
    if (!d.synthetic()) continue;
    const fs::path rel = fs::path("data") / d.name;
    claim(ctx, rel);
    dirs.push_back(rel);
    DatasetManifest manifest;
    for (int i = 0; i < d.pairs; ++i) {
      SyntheticConfig sc;
      sc.rng_seed = derive_seed(ctx.config.seed, "synth/" + d.name + "/" + std::to_string(i));
      sc.artifact_kind = d.artifact_kind;
      sc.artifact_region_fraction = d.artifact_region_fraction;
      sc.texture = d.texture;
      sc.image_side = ctx.config.grid.image_side;
      SyntheticPair pair = generate_synthetic_pair(sc);
      // Pairs are split 3:1:1 by index so a REAL and its FAKE never straddle splits.
      const int slot = i % 5;
      const Split split = slot < 3 ? Split::kTrain : (slot == 3 ? Split::kVal : Split::kTest);
      const std::string stem = d.name + "_" + std::to_string(i);
      for (ImageSample* s : {&pair.real, &pair.fake}) {
        const std::string file = "images/" + stem + (s->label == Label::kReal ? "_real" : "_fake") + ".png";
        write_png(s->pixels, ctx.out / rel / file);
        manifest.entries.push_back({file, s->label, d.name, split});
      }
    }
    save_manifest(manifest, ctx.out / rel / "manifest.csv");
    load_manifest(ctx.out / rel / "manifest.csv");
    say(ctx, "synth-data: domain " + d.name + " with " + std::to_string(d.pairs) + " pairs");
  }
  return finish(ctx, "synth-data", files_under(ctx, dirs));
}

std::vector<std::string> cmd_train_rffr(const RunContext& ctx) {
  const GeneratorKind kind = ctx.config.residual.generator;
  const BlockGrid grid = grid_of(ctx.config);
  if (kind == GeneratorKind::kMim) {
    claim(ctx, layout::inpainter());
    const Inpainter model =
        fit_inpainter(ctx, ctx.config.inpainter, grid, real_training_images(ctx, ctx.config.data.real_fraction));
    nn::save_checkpoint(make_checkpoint(model, ctx.config.inpainter_schedule, ctx.config.inpainter_schedule.total_steps,
                                        grid.k()),
                        ctx.out / layout::inpainter());
    return finish(ctx, "train-rffr", files_under(ctx, {layout::inpainter()}));
  }
  if (kind == GeneratorKind::kAutoencoder) {
    claim(ctx, layout::autoencoder());
    const Autoencoder model = fit_autoencoder(ctx, real_training_images(ctx, ctx.config.data.real_fraction));
    nn::save_checkpoint(make_checkpoint(model, ctx.config.autoencoder_schedule,
                                        ctx.config.autoencoder_schedule.total_steps),
                        ctx.out / layout::autoencoder());
    return finish(ctx, "train-rffr", files_under(ctx, {layout::autoencoder()}));
  }
  say(ctx, "train-rffr: generator '" + std::string(to_string(kind)) + "' has no trainable model");
  return finish(ctx, "train-rffr", {});
}

std::vector<std::string> cmd_train_detector(const RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const BlockGrid grid = grid_of(c);
  const DetectorConfig config = detector_config_for(c, c.residual.generator);
  const ResidualGenerator generator = load_generator(ctx, c.residual.generator);
  if (c.data.train_domains.empty()) throw ConfigError("data.train_domains is empty");
  const TestSets tests = c.eval.cadence > 0 ? test_sets(ctx) : TestSets{};
  claim(ctx, "detector");

  const nn::TrainSchedule& s = c.detector_schedule;
  for (const std::string& domain : c.data.train_domains) {
    const fs::path dir = ctx.out / layout::detector(domain);
    const json extra{{"train_domain", domain}, {"generator", to_string(c.residual.generator)}, {"grid_k", c.grid.k}};
    BatchIterator stream(domain_samples(ctx, domain, Split::kTrain), static_cast<std::size_t>(s.batch_size),
                         derive_seed(c.seed, "detector-batches/" + domain));
    ResidualCache residuals(generator, grid, c.residual.amplification);
    const SnapshotHook snapshot = [&](int step, const Detector& model) {
      if (c.checkpoint_every > 0 && step % c.checkpoint_every == 0) {
        nn::save_checkpoint(make_checkpoint(model, s, step, extra), dir / snapshot_name(step));
      }
    };
    const int cadence = c.eval.cadence > 0 ? c.eval.cadence : 0;
    const auto train = [&]() -> CurveRun {
      if (cadence > 0 && !tests.empty()) {
        // Snapshots are taken from the curve hook, so the two cadences must agree.
        if (c.checkpoint_every > 0 && c.checkpoint_every % cadence != 0) {
          throw ConfigError("checkpoint_every must be a multiple of eval.cadence");
        }
        return validation_curve(config, s, stream, residuals, tests, cadence, c.residual.p, snapshot,
                                progress_logger(ctx, "detector[" + domain + "]", s.total_steps));
      }
      DetectorTrainOptions options;
      options.p = c.residual.p;
      options.hook_every = c.checkpoint_every;
      options.hook = snapshot;
      options.progress = progress_logger(ctx, "detector[" + domain + "]", s.total_steps);
      return {train_detector(config, s, stream, residuals, options), {}};
    };
    const CurveRun run = train();
    nn::save_checkpoint(make_checkpoint(run.training.model, s, s.total_steps, extra), dir / "final");
    write_json(dir / "curves.json", json{{"cadence", cadence}, {"curves", run.curves}, {"loss", run.training.loss_trace}});
    if (!run.curves.empty()) plot_curves(run.curves, "trained on " + domain, dir / "curves.png");
  }
  return finish(ctx, "train-detector", files_under(ctx, {"detector"}));
}

std::vector<std::string> cmd_eval(const RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const BlockGrid grid = grid_of(c);
  const ResidualGenerator generator = load_generator(ctx, c.residual.generator);
  std::map<std::string, std::shared_ptr<const Detector>> finals;
  for (const std::string& domain : c.data.train_domains) {
    finals[domain] = std::make_shared<const Detector>(
        detector_from_checkpoint(nn::load_checkpoint(ctx.out / layout::detector(domain) / "final")));
  }
  const TestSets tests = test_sets(ctx);
  claim(ctx, "eval");

  EvalReport report;
  report.selection_mode = c.eval.selection_mode;
  report.extra = {{"generator", to_string(c.residual.generator)}, {"grid_k", c.grid.k}, {"p", c.residual.p}};
  ResidualCache cache(generator, grid, c.residual.amplification);
  std::map<std::string, ResidualCache> val_caches;
  for (const auto& [train, final_model] : finals) {
    const fs::path dir = ctx.out / layout::detector(train);
    const auto snapshots = snapshot_steps(dir);
    std::ifstream curves_in(dir / "curves.json");
    if (curves_in) report.curves[train] = json::parse(curves_in).at("curves").get<Curves>();

    for (const auto& [test, samples] : tests) {
      MatrixCell cell{train, test, std::nullopt, train == test, {}};
      try {
        const double final_auc = percent_auc(*final_model, cache, samples);
        double chosen = final_auc;
        if (!snapshots.empty()) {
          // Oracle: best snapshot on the validation split, earliest on ties.
          const std::string val_domain = c.eval.validation_domain.empty() ? test : c.eval.validation_domain;
          const auto val = limited(domain_samples(ctx, val_domain, Split::kVal), c.eval.eval_limit);
          std::vector<CheckpointRef> refs;
          std::vector<double> val_aucs;
          for (const std::string& name : snapshots) {
            const nn::Checkpoint ck = nn::load_checkpoint(dir / name);
            const Detector m = detector_from_checkpoint(ck);
            refs.push_back({ck.step, name});
            val_aucs.push_back(percent_auc(m, cache, val));
          }
          refs.push_back({c.detector_schedule.total_steps, "final"});
          val_aucs.push_back(percent_auc(*final_model, cache, val));
          const CheckpointRef oracle =
              select_model(refs, SelectionMode::kOracleValidated, c.detector_schedule.total_steps, val_aucs);
          const double oracle_auc =
              oracle.path == "final"
                  ? final_auc
                  : percent_auc(detector_from_checkpoint(nn::load_checkpoint(dir / oracle.path)), cache, samples);
          report.selections.push_back({train, test, val_domain, oracle.step, oracle_auc,
                                       c.detector_schedule.total_steps, final_auc, final_auc - oracle_auc});
          if (c.eval.selection_mode == SelectionMode::kOracleValidated) chosen = oracle_auc;
        } else if (c.eval.selection_mode == SelectionMode::kOracleValidated) {
          throw MissingPrerequisite("oracle selection needs detector snapshots (set checkpoint_every)");
        }
        cell.auc_percent = chosen;
      } catch (const Error& e) {
        cell.error = e.what();
      }
      report.matrix.push_back(std::move(cell));
    }
  }
  save_report(report, ctx.out / layout::report());
  plot_matrix(report, ctx.out / "eval" / "matrix.png");
  for (const auto& [train, curves] : report.curves) {
    if (!curves.empty()) plot_curves(curves, "trained on " + train, ctx.out / "eval" / ("curves_" + train + ".png"));
  }
  for (const MatrixCell& cell : report.matrix) {
    say(ctx, "eval: " + cell.train_domain + " -> " + cell.test_domain + " " +
                 (cell.auc_percent ? std::to_string(*cell.auc_percent) : "error: " + cell.error));
  }
  return finish(ctx, "eval", files_under(ctx, {"eval"}));
}

std::vector<std::string> cmd_visualize(const RunContext& ctx, const std::vector<fs::path>& images) {
  const ExperimentConfig& c = ctx.config;
  if (c.residual.generator == GeneratorKind::kNone) throw ConfigError("visualize needs a residual generator");
  const BlockGrid grid = grid_of(c);
  const ResidualGenerator generator = load_generator(ctx, c.residual.generator);
  std::vector<Image> inputs;
  for (const fs::path& p : images) inputs.push_back(read_image(p, c.grid.image_side));
  if (inputs.empty()) {
    for (const std::string& domain : c.data.test_domains) {
      int reals = 0, fakes = 0;
      for (const ImageSample& s : domain_samples(ctx, domain, Split::kTest)) {
        int& n = s.label == Label::kReal ? reals : fakes;
        if (n < 2) {
          inputs.push_back(s.pixels);
          ++n;
        }
      }
    }
  }
  if (inputs.empty()) throw ConfigError("visualize: no images given and no test domain to draw from");
  claim(ctx, "visualize");

  // Columns are images; rows are original, reconstruction, residual mapped to [0,1].
  const int side = c.grid.image_side, gap = 2;
  const int cols = static_cast<int>(inputs.size());
  Image sheet(3 * side + 2 * gap, cols * side + (cols - 1) * gap, 3, 1.0f);
  const auto paste = [&](const Image& img, int row, int col) {
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        for (int ch = 0; ch < 3; ++ch) sheet.at(row * (side + gap) + y, col * (side + gap) + x, ch) = img.at(y, x, ch);
  };
  for (int i = 0; i < cols; ++i) {
    Image residual = generator.full_residual(inputs[static_cast<std::size_t>(i)], grid, c.residual.amplification);
    for (float& v : residual.data) v = std::clamp((v + 1.0f) * 0.5f, 0.0f, 1.0f);
    paste(inputs[static_cast<std::size_t>(i)], 0, i);
    paste(clamped(generator.reconstruction(inputs[static_cast<std::size_t>(i)], grid), 0.0f, 1.0f), 1, i);
    paste(residual, 2, i);
  }
  write_png(sheet, ctx.out / "visualize" / "residual_grid.png");
  return finish(ctx, "visualize", files_under(ctx, {"visualize"}));
}

std::vector<std::string> cmd_ablate(const RunContext& ctx, Study study) {
  const ExperimentConfig& c = ctx.config;
  const fs::path rel = fs::path("ablate") / std::string(to_string(study));
  const BlockGrid grid = grid_of(c);
  if (c.data.train_domains.empty() || c.data.test_domains.empty()) {
    throw ConfigError("ablation needs train and test domains");
  }
  if (study == Study::kBlockSize) {
    for (int k : c.ablation.block_sizes) {
      try {
        c.inpainter.check_grid(BlockGrid(k, c.grid.image_side));
        c.detector.check_grid(BlockGrid(k, c.grid.image_side));
      } catch (const InvalidInput& e) {
        throw ConfigError("block_size study, k=" + std::to_string(k) + ": " + e.what());
      }
    }
  }
  const TestSets tests = test_sets(ctx);
  claim(ctx, rel);

  json rows = json::array();
  const auto add_row = [&](const std::string& label, json settings, const EvalReport& r, int passes) {
    json row{{"label", label}, {"settings", std::move(settings)}, {"matrix", matrix_json(r)},
             {"mean_cross_domain_auc", mean_cross_domain(r)}};
    if (passes >= 0) row["inpainter_passes"] = passes;
    rows.push_back(std::move(row));
    say(ctx, "ablate[" + std::string(to_string(study)) + "] " + label + " mean cross-domain AUC " +
                 std::to_string(mean_cross_domain(r)));
  };
  const auto run = [&](const ResidualGenerator& gen, const DetectorConfig& dc, const BlockGrid& g, double p) {
    return cross_domain_eval(train_detectors(ctx, gen, dc, g, p), tests, g, c.residual.amplification);
  };

  switch (study) {
    case Study::kResidualKind: {
      const auto reals = real_training_images(ctx, c.data.real_fraction);
      for (GeneratorKind kind :
           {GeneratorKind::kMim, GeneratorKind::kAutoencoder, GeneratorKind::kHighpass, GeneratorKind::kNone}) {
        ResidualGenerator gen = ResidualGenerator::none();
        if (kind == GeneratorKind::kMim) gen = load_generator(ctx, kind);
        if (kind == GeneratorKind::kAutoencoder) {
          gen = ResidualGenerator::autoencoder(std::make_shared<const Autoencoder>(fit_autoencoder(ctx, reals)));
        }
        if (kind == GeneratorKind::kHighpass) gen = ResidualGenerator::highpass();
        DetectorConfig dc = c.detector;
        if (kind == GeneratorKind::kNone) dc.branches = BranchSet::kOriginalOnly;
        add_row(std::string(to_string(kind)), {{"generator", to_string(kind)}}, run(gen, dc, grid, c.residual.p),
                gen.forward_passes(grid));
      }
      break;
    }
    case Study::kBlockSize: {
      const auto reals = real_training_images(ctx, c.data.real_fraction);
      for (int k : c.ablation.block_sizes) {
        const BlockGrid g(k, c.grid.image_side);
        const auto model = std::make_shared<const Inpainter>(fit_inpainter(ctx, c.inpainter, g, reals));
        const ResidualGenerator gen = ResidualGenerator::mim(model);
        add_row("k=" + std::to_string(k), {{"k", k}}, run(gen, c.detector, g, c.residual.p), gen.forward_passes(g));
      }
      break;
    }
    case Study::kInputVariant: {
      const ResidualGenerator gen = load_generator(ctx, c.residual.generator == GeneratorKind::kNone
                                                            ? GeneratorKind::kMim
                                                            : c.residual.generator);
      struct Variant {
        const char* label;
        BranchSet branches;
        bool random;
      };
      const Variant variants[] = {{"original/full", BranchSet::kOriginalOnly, false},
                                  {"original/random", BranchSet::kOriginalOnly, true},
                                  {"residual/full", BranchSet::kResidualOnly, false},
                                  {"residual/random", BranchSet::kResidualOnly, true},
                                  {"original+residual/full", BranchSet::kDual, false},
                                  {"original+residual/random", BranchSet::kDual, true}};
      for (const Variant& v : variants) {
        DetectorConfig dc = c.detector;
        dc.branches = v.branches;
        const double p = v.random ? c.residual.p : 1.0;
        const ResidualGenerator& g = v.branches == BranchSet::kOriginalOnly ? ResidualGenerator::none() : gen;
        add_row(v.label, {{"branches", dc.branches}, {"p", p}}, run(g, dc, grid, p), -1);
      }
      break;
    }
    case Study::kDataScale: {
      const auto all = real_training_images(ctx, 1.0);
      for (double f : c.ablation.data_scales) {
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("data_scales entries must lie in (0, 1]");
        const auto model =
            std::make_shared<const Inpainter>(fit_inpainter(ctx, c.inpainter, grid, real_training_images(ctx, f)));
        const auto used = static_cast<int>(std::max<std::size_t>(
            1, std::min(all.size(), static_cast<std::size_t>(std::ceil(f * static_cast<double>(all.size()))))));
        char label[32];
        std::snprintf(label, sizeof label, "real x%.2f", f);
        add_row(label, {{"real_fraction", f}, {"real_images", used}},
                run(ResidualGenerator::mim(model), c.detector, grid, c.residual.p), -1);
      }
      break;
    }
  }
  write_json(ctx.out / rel / "report.json", json{{"study", to_string(study)}, {"rows", rows}});
  write_table(ctx.out / rel / "table.txt", std::string(to_string(study)), rows);
  return finish(ctx, "ablate-" + std::string(to_string(study)), files_under(ctx, {rel}));
}

}  // namespace rffr::cli
