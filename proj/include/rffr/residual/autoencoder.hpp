#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "rffr/data/image.hpp"
#include "rffr/data/manifest.hpp"
#include "rffr/inpainter/inpainter.hpp"
#include "rffr/nn/checkpoint.hpp"
#include "rffr/nn/conv.hpp"
#include "rffr/nn/optim.hpp"

namespace rffr {

/// UNet-style reconstruction baseline: three resolution levels with widths
/// base, 2*base, 4*base, average-pool downsampling, nearest upsampling and
/// concatenated skip connections.
struct AutoencoderConfig {
  int image_side = 224;
  int base_width = 16;
  std::uint64_t rng_seed = 0;

  void validate() const;
  bool operator==(const AutoencoderConfig&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AutoencoderConfig, image_side, base_width, rng_seed)

template <class T>
class BasicAutoencoder {
 public:
  struct Cache {
    nn::Matrix<T> input_cols;
    nn::Matrix<T> e1_pre, e1;
    nn::Matrix<T> e2_cols, e2_pre, e2;
    nn::Matrix<T> e3_cols, e3_pre, e3;
    nn::Matrix<T> d2_cols, d2_pre, d2;
    nn::Matrix<T> d1_cols, d1_pre, d1;
  };

  explicit BasicAutoencoder(const AutoencoderConfig& config);

  template <class U>
  explicit BasicAutoencoder(const BasicAutoencoder<U>& other) : BasicAutoencoder(other.config()) {
    const auto src = const_cast<BasicAutoencoder<U>&>(other).parameters();
    const auto dst = parameters();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i].param->value = src[i].param->value.template cast<T>();
    }
  }

  const AutoencoderConfig& config() const { return config_; }

  /// Raw output map, (side*side) x 3.
  nn::Matrix<T> forward(const Image& image, Cache* cache = nullptr) const;
  /// Output as an image (not clamped).
  Image reconstruct(const Image& image) const;
  /// Adds gradients of `scale * mse(reconstruction, image)`; returns the mse.
  double accumulate_gradients(const Image& image, double scale);

  nn::ParameterList<T> parameters();

 private:
  AutoencoderConfig config_;
  nn::Conv3x3<T> enc1_, enc2_, enc3_, dec2_, dec1_;
  nn::Linear<T> out_;
};

extern template class BasicAutoencoder<float>;
extern template class BasicAutoencoder<double>;

using Autoencoder = BasicAutoencoder<float>;

struct AutoencoderTraining {
  Autoencoder model;
  std::vector<double> loss_trace;
};

/// Full-image mean-squared reconstruction training on REAL samples only.
AutoencoderTraining train_autoencoder(const AutoencoderConfig& config, const nn::TrainSchedule& schedule,
                                      SampleStream& real_stream, const TrainProgress& progress = {});

nn::Checkpoint make_checkpoint(const Autoencoder& model, const nn::TrainSchedule& schedule, long step);
Autoencoder autoencoder_from_checkpoint(const nn::Checkpoint& checkpoint);

}  // namespace rffr
