#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rffr/detector/detector.hpp"
#include "rffr/eval/metrics.hpp"
#include "rffr/eval/report.hpp"

namespace rffr {

using TestSets = std::map<std::string, std::vector<ImageSample>>;

/// One score per image from the full block set.
ScoreSet score_samples(const Detector& model, ResidualCache& residuals, const std::vector<ImageSample>& samples);

/// A trained detector together with the residual source it was trained with.
struct TrainedDetector {
  std::shared_ptr<const Detector> model;
  ResidualGenerator generator;
};

/// Full train x test AUC matrix. A cell that fails to score records its error
/// instead of aborting the run.
EvalReport cross_domain_eval(const std::map<std::string, TrainedDetector>& models, const TestSets& testsets,
                             const BlockGrid& grid, const AmplificationConfig& amp);

using GeneratorFactory = std::function<ResidualGenerator(const std::string& train_domain)>;

/// Same, with test sets read from the TEST split of each manifest and the
/// residual source chosen per training domain.
EvalReport cross_domain_eval(const std::map<std::string, std::shared_ptr<const Detector>>& models,
                             const std::map<std::string, DatasetManifest>& testsets,
                             const GeneratorFactory& generator_factory, const BlockGrid& grid,
                             const AmplificationConfig& amp);

struct CurveRun {
  DetectorTraining training;
  Curves curves;
};

using SnapshotHook = std::function<void(int completed_steps, const Detector& model)>;

/// Trains a detector and scores every test set after each `every` completed
/// steps. Residual maps of the test sets are computed once and reused.
CurveRun validation_curve(const DetectorConfig& config, const nn::TrainSchedule& schedule,
                          SampleStream& train_stream, ResidualCache& train_residuals, const TestSets& testsets,
                          int every = 50, double p = 0.25, const SnapshotHook& snapshot = {},
                          const TrainProgress& progress = {});

struct CheckpointRef {
  long step = 0;
  std::string path;
};

/// VALIDATION_FREE returns the checkpoint taken at exactly `total_steps`;
/// ORACLE_VALIDATED returns the best validation AUC, earliest on ties.
CheckpointRef select_model(const std::vector<CheckpointRef>& checkpoints, SelectionMode mode, long total_steps,
                           const std::vector<double>& validation_aucs = {});

/// Oracle-vs-final comparison for one curve. The validation curve picks the
/// step; the test curve supplies both AUCs.
SelectionRecord selection_record(const std::string& train_domain, const std::string& test_domain,
                                 const std::string& validation_domain, const std::vector<CurvePoint>& validation,
                                 const std::vector<CurvePoint>& test, long total_steps);

}  // namespace rffr
