#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "rffr/data/grid.hpp"
#include "rffr/data/image.hpp"
#include "rffr/data/manifest.hpp"
#include "rffr/nn/checkpoint.hpp"
#include "rffr/nn/layers.hpp"
#include "rffr/nn/optim.hpp"

namespace rffr {

struct InpainterConfig {
  int image_side = 224;
  int patch_side = 8;
  int encoder_dim = 128;
  int encoder_layers = 4;
  int encoder_heads = 4;
  int decoder_dim = 64;
  int decoder_layers = 2;
  int decoder_heads = 4;
  int mlp_ratio = 4;
  std::uint64_t rng_seed = 0;

  void validate() const;
  /// A masked block must be a whole number of patches.
  void check_grid(const BlockGrid& grid) const;
  int patches_per_side() const { return image_side / patch_side; }
  int patch_count() const { return patches_per_side() * patches_per_side(); }
  int patch_dim() const { return patch_side * patch_side * 3; }

  bool operator==(const InpainterConfig&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(InpainterConfig, image_side, patch_side, encoder_dim,
                                                encoder_layers, encoder_heads, decoder_dim,
                                                decoder_layers, decoder_heads, mlp_ratio, rng_seed)

/// Mean squared difference over all entries of two equally shaped blocks.
double rep_loss(const Image& reconstructed, const Image& original);

/// Masked-image-modeling inpainter. The patches of the masked block are never
/// read: the encoder sees only visible patches and the decoder fills the
/// masked positions with a shared learned mask token before predicting their
/// raw pixels.
template <class T>
class BasicInpainter {
 public:
  struct Cache {
    std::vector<int> visible;
    std::vector<int> masked;
    nn::Matrix<T> visible_patches;
    typename nn::TransformerStack<T>::Cache encoder;
    nn::Matrix<T> encoded;
    typename nn::TransformerStack<T>::Cache decoder;
    nn::Matrix<T> decoded_masked;
  };

  explicit BasicInpainter(const InpainterConfig& config);

  template <class U>
  explicit BasicInpainter(const BasicInpainter<U>& other) : BasicInpainter(other.config()) {
    const auto src = const_cast<BasicInpainter<U>&>(other).parameters();
    const auto dst = parameters();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i].param->value = src[i].param->value.template cast<T>();
    }
  }

  const InpainterConfig& config() const { return config_; }

  /// Reconstructed block j (block_side x block_side x 3).
  Image inpaint(const Image& image, const BlockGrid& grid, int j) const;
  /// Same, with the grid recovered from the mask geometry.
  Image inpaint(const Image& image, const BlockMask& mask) const;

  /// Raw prediction for the masked patches, one row per patch.
  nn::Matrix<T> predict(const Image& image, const BlockGrid& grid, int j, Cache* cache = nullptr) const;

  /// Forward + backward for one (image, j) pair. Gradients of
  /// `scale * rep_loss` are added to the parameters; returns rep_loss.
  double accumulate_gradients(const Image& image, const BlockGrid& grid, int j, double scale);

  nn::ParameterList<T> parameters();

 private:
  void backward(const Cache& cache, const nn::Matrix<T>& dpred);

  InpainterConfig config_;
  nn::Linear<T> patch_embed_;
  nn::Parameter<T> encoder_pos_;
  nn::TransformerStack<T> encoder_;
  nn::Linear<T> decoder_embed_;
  nn::Parameter<T> mask_token_;
  nn::Parameter<T> decoder_pos_;
  nn::TransformerStack<T> decoder_;
  nn::Linear<T> head_;
};

extern template class BasicInpainter<float>;
extern template class BasicInpainter<double>;

using Inpainter = BasicInpainter<float>;

/// Full reconstruction: inpaint every block in turn and assemble, clamped to [0,1].
Image reconstruct_full(const Inpainter& model, const Image& image, const BlockGrid& grid);

struct InpainterTraining {
  Inpainter model;
  std::vector<double> loss_trace;
};

using TrainProgress = std::function<void(int step, double loss)>;

/// Trains on REAL samples only; a FAKE sample in the stream raises
/// RealOnlyViolation before it contributes to any update. Each image in a
/// batch is masked at one uniformly drawn block.
InpainterTraining train_inpainter(const InpainterConfig& config, const nn::TrainSchedule& schedule,
                                  SampleStream& real_stream, const BlockGrid& grid,
                                  const TrainProgress& progress = {});

nn::Checkpoint make_checkpoint(const Inpainter& model, const nn::TrainSchedule& schedule, long step,
                               int grid_k);
Inpainter inpainter_from_checkpoint(const nn::Checkpoint& checkpoint);

}  // namespace rffr
