#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rffr/data/image.hpp"
#include "rffr/data/manifest.hpp"
#include "rffr/nn/checkpoint.hpp"
#include "rffr/nn/layers.hpp"
#include "rffr/nn/optim.hpp"
#include "rffr/residual/residual.hpp"

namespace rffr {

enum class MergeMode { kConcatLinear, kSum };
/// Which branches the classifier runs. Single-branch variants feed a zero
/// vector in place of the absent branch's class token.
enum class BranchSet { kDual, kOriginalOnly, kResidualOnly };

NLOHMANN_JSON_SERIALIZE_ENUM(MergeMode, {{MergeMode::kConcatLinear, "concat_linear"}, {MergeMode::kSum, "sum"}})
NLOHMANN_JSON_SERIALIZE_ENUM(BranchSet, {{BranchSet::kDual, "dual"},
                                         {BranchSet::kOriginalOnly, "original_only"},
                                         {BranchSet::kResidualOnly, "residual_only"}})

struct DetectorConfig {
  int image_side = 224;
  int patch_side = 8;
  int embed_dim = 64;
  int layers = 2;
  int heads = 4;
  int mlp_ratio = 4;
  MergeMode merge = MergeMode::kConcatLinear;
  BranchSet branches = BranchSet::kDual;
  double dropout = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
  void check_grid(const BlockGrid& grid) const;
  bool uses_original() const { return branches != BranchSet::kResidualOnly; }
  bool uses_residual() const { return branches != BranchSet::kOriginalOnly; }
  int patches_per_side() const { return image_side / patch_side; }

  bool operator==(const DetectorConfig&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DetectorConfig, image_side, patch_side, embed_dim, layers, heads,
                                                mlp_ratio, merge, branches, dropout, rng_seed)

/// (P_real, P_fake).
struct Prediction {
  std::array<double, 2> probs{0.5, 0.5};

  double p_real() const { return probs[0]; }
  double p_fake() const { return probs[1]; }
  Label predicted() const { return probs[1] > probs[0] ? Label::kFake : Label::kReal; }
};

inline constexpr double kClsLossEpsilon = 1e-12;

/// -log(probability of the true class), with the probability floored at 1e-12.
double cls_loss(const Prediction& pred, Label label);

/// One transformer branch: patch projection, class token, positional table
/// over every patch position of the full image, encoder stack.
template <class T>
class DetectorBranch {
 public:
  struct Cache {
    nn::Matrix<T> patches;
    std::vector<int> positions;
    nn::Matrix<T> keep;  // dropout multipliers, empty when dropout is off
    typename nn::TransformerStack<T>::Cache stack;
  };

  DetectorBranch() = default;
  DetectorBranch(const DetectorConfig& config, Rng& rng);

  /// Class-token feature (1 x embed_dim).
  nn::Matrix<T> forward(const std::vector<Image>& blocks, const std::vector<BlockPosition>& positions,
                        Cache* cache, Rng* dropout_rng) const;
  void backward(const Cache& cache, const nn::Matrix<T>& dfeature);

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    patch_embed.visit(prefix + "patch_embed.", f);
    f(prefix + "cls_token", cls_token);
    f(prefix + "pos_embed", pos_embed);
    stack.visit(prefix + "encoder.", f);
  }

  nn::Linear<T> patch_embed;
  nn::Parameter<T> cls_token;
  nn::Parameter<T> pos_embed;
  nn::TransformerStack<T> stack;

 private:
  int patch_side_ = 0;
  int patches_per_side_ = 0;
  int image_side_ = 0;
  double dropout_ = 0.0;
};

/// Dual-branch classifier over aligned original and residual blocks. The two
/// class tokens are merged (concatenation + linear, or sum + linear) into
/// two logits.
template <class T>
class BasicDetector {
 public:
  struct Cache {
    std::optional<typename DetectorBranch<T>::Cache> original;
    std::optional<typename DetectorBranch<T>::Cache> residual;
    nn::Matrix<T> feature;
    nn::Matrix<T> probs;
  };

  explicit BasicDetector(const DetectorConfig& config);

  template <class U>
  explicit BasicDetector(const BasicDetector<U>& other) : BasicDetector(other.config()) {
    const auto src = const_cast<BasicDetector<U>&>(other).parameters();
    const auto dst = parameters();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i].param->value = src[i].param->value.template cast<T>();
    }
  }

  const DetectorConfig& config() const { return config_; }

  Prediction forward(const BlockInput& input, Cache* cache = nullptr, Rng* dropout_rng = nullptr) const;
  /// Adds gradients of `scale * cls_loss`; returns the loss.
  double accumulate_gradients(const BlockInput& input, Label label, double scale, Rng* dropout_rng = nullptr);

  nn::ParameterList<T> parameters();

  std::optional<DetectorBranch<T>>& original_branch() { return original_; }
  std::optional<DetectorBranch<T>>& residual_branch() { return residual_; }
  nn::Linear<T>& head() { return head_; }

 private:
  void check_input(const BlockInput& input) const;

  DetectorConfig config_;
  std::optional<DetectorBranch<T>> original_;
  std::optional<DetectorBranch<T>> residual_;
  nn::Linear<T> head_;
};

extern template class DetectorBranch<float>;
extern template class DetectorBranch<double>;
extern template class BasicDetector<float>;
extern template class BasicDetector<double>;

using Detector = BasicDetector<float>;

using DetectorHook = std::function<void(int completed_steps, const Detector& model)>;

struct DetectorTrainOptions {
  double p = 0.25;
  /// Calls `hook` after every `hook_every` completed steps (0 disables).
  int hook_every = 0;
  DetectorHook hook;
  TrainProgress progress;
};

struct DetectorTraining {
  Detector model;
  std::vector<double> loss_trace;
};

/// Each step draws a batch, makes a fresh block selection per image, and
/// minimizes the mean cls_loss. Residual maps are memoized in `residuals`.
DetectorTraining train_detector(const DetectorConfig& config, const nn::TrainSchedule& schedule,
                                SampleStream& train_stream, ResidualCache& residuals,
                                const DetectorTrainOptions& options);

DetectorTraining train_detector(const DetectorConfig& config, const nn::TrainSchedule& schedule,
                                SampleStream& train_stream, const ResidualGenerator& generator,
                                const BlockGrid& grid, double p, const AmplificationConfig& amp);

/// P_fake from the full set of blocks.
double predict(const Detector& model, const Image& image, const ResidualGenerator& generator,
               const BlockGrid& grid, const AmplificationConfig& amp);
double predict(const Detector& model, const ImageSample& sample, ResidualCache& residuals);

nn::Checkpoint make_checkpoint(const Detector& model, const nn::TrainSchedule& schedule, long step,
                               const nlohmann::json& extra = nlohmann::json::object());
Detector detector_from_checkpoint(const nn::Checkpoint& checkpoint);
/// Copies same-named, same-shaped tensors from externally supplied weights;
/// returns how many were copied.
int apply_pretrained(Detector& model, const nn::Checkpoint& weights);

}  // namespace rffr
