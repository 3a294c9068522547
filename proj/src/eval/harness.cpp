#include "rffr/eval/harness.hpp"

#include <algorithm>

#include "rffr/common/error.hpp"

namespace rffr {

ScoreSet score_samples(const Detector& model, ResidualCache& residuals, const std::vector<ImageSample>& samples) {
  ScoreSet out;
  out.items.reserve(samples.size());
  for (const ImageSample& s : samples) out.add(predict(model, s, residuals), s.label, s.sample_id, s.domain_tag);
  return out;
}

EvalReport cross_domain_eval(const std::map<std::string, TrainedDetector>& models, const TestSets& testsets,
                             const BlockGrid& grid, const AmplificationConfig& amp) {
  EvalReport report;
  for (const auto& [train, trained] : models) {
    ResidualCache residuals(trained.generator, grid, amp);
    for (const auto& [test, samples] : testsets) {
      MatrixCell cell{train, test, std::nullopt, train == test, {}};
      try {
        if (!trained.model) throw MissingPrerequisite("no detector for training domain '" + train + "'");
        cell.auc_percent = 100.0 * auc(score_samples(*trained.model, residuals, samples));
      } catch (const Error& e) {
        cell.error = e.what();
      }
      report.matrix.push_back(std::move(cell));
    }
  }
  return report;
}

EvalReport cross_domain_eval(const std::map<std::string, std::shared_ptr<const Detector>>& models,
                             const std::map<std::string, DatasetManifest>& testsets,
                             const GeneratorFactory& generator_factory, const BlockGrid& grid,
                             const AmplificationConfig& amp) {
  std::map<std::string, TrainedDetector> trained;
  for (const auto& [train, model] : models) trained[train] = {model, generator_factory(train)};
  TestSets loaded;
  for (const auto& [test, manifest] : testsets) loaded[test] = load_samples(manifest, Split::kTest, grid.image_side());
  return cross_domain_eval(trained, loaded, grid, amp);
}

CurveRun validation_curve(const DetectorConfig& config, const nn::TrainSchedule& schedule,
                          SampleStream& train_stream, ResidualCache& train_residuals, const TestSets& testsets,
                          int every, double p, const SnapshotHook& snapshot, const TrainProgress& progress) {
  if (every < 1) throw InvalidInput("curve cadence must be at least 1");
  std::map<std::string, ResidualCache> test_residuals;
  for (const auto& [name, samples] : testsets) {
    test_residuals.emplace(name, ResidualCache(train_residuals.generator(), train_residuals.grid(),
                                               train_residuals.amplification()));
  }
  Curves curves;
  DetectorTrainOptions options;
  options.p = p;
  options.hook_every = every;
  options.progress = progress;
  options.hook = [&](int step, const Detector& model) {
    for (const auto& [name, samples] : testsets) {
      curves[name].push_back({step, auc(score_samples(model, test_residuals.at(name), samples))});
    }
    if (snapshot) snapshot(step, model);
  };
  DetectorTraining training = train_detector(config, schedule, train_stream, train_residuals, options);
  return {std::move(training), std::move(curves)};
}

CheckpointRef select_model(const std::vector<CheckpointRef>& checkpoints, SelectionMode mode, long total_steps,
                           const std::vector<double>& validation_aucs) {
  if (mode == SelectionMode::kValidationFree) {
    for (const CheckpointRef& c : checkpoints) {
      if (c.step == total_steps) return c;
    }
    throw MissingPrerequisite("no checkpoint at the final step " + std::to_string(total_steps));
  }
  if (checkpoints.empty()) throw MissingPrerequisite("no checkpoints to select from");
  if (validation_aucs.size() != checkpoints.size()) {
    throw InvalidInput("oracle selection needs one validation AUC per checkpoint");
  }
  std::vector<std::size_t> order(checkpoints.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return checkpoints[a].step < checkpoints[b].step; });
  std::size_t best = order.front();
  for (std::size_t i : order) {
    if (validation_aucs[i] > validation_aucs[best]) best = i;
  }
  return checkpoints[best];
}

SelectionRecord selection_record(const std::string& train_domain, const std::string& test_domain,
                                 const std::string& validation_domain, const std::vector<CurvePoint>& validation,
                                 const std::vector<CurvePoint>& test, long total_steps) {
  if (validation.size() != test.size()) throw InvalidInput("validation and test curves differ in length");
  std::vector<CheckpointRef> refs;
  std::vector<double> val;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    if (validation[i].iteration != test[i].iteration) throw InvalidInput("curves sampled at different steps");
    refs.push_back({validation[i].iteration, {}});
    val.push_back(validation[i].auc);
  }
  const CheckpointRef oracle = select_model(refs, SelectionMode::kOracleValidated, total_steps, val);
  const CheckpointRef last = select_model(refs, SelectionMode::kValidationFree, total_steps);
  const auto at = [&](long step) {
    return 100.0 * std::find_if(test.begin(), test.end(), [step](const CurvePoint& p) { return p.iteration == step; })->auc;
  };
  SelectionRecord r{train_domain, test_domain, validation_domain, oracle.step, at(oracle.step), last.step,
                    at(last.step), 0.0};
  r.gap = r.final_auc_percent - r.oracle_auc_percent;
  return r;
}

}  // namespace rffr
