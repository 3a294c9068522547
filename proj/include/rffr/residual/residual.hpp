#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "rffr/common/rng.hpp"
#include "rffr/data/grid.hpp"
#include "rffr/data/image.hpp"
#include "rffr/inpainter/inpainter.hpp"
#include "rffr/residual/autoencoder.hpp"

namespace rffr {

/// Residual scale and clamp. Residuals stay in [clamp_low, clamp_high]; the
/// (r+1)/2 shift to [0,1] happens only when exporting images.
struct AmplificationConfig {
  double alpha = 4.0;
  double clamp_low = -1.0;
  double clamp_high = 1.0;

  void validate() const;
  bool operator==(const AmplificationConfig&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AmplificationConfig, alpha, clamp_low, clamp_high)

/// Blocks chosen for one presentation, 1-based, strictly increasing, never empty.
struct BlockSelection {
  double p = 1.0;
  std::vector<int> indices;
  int redraws = 0;  // empty draws that were rejected
};

/// Includes every block independently with probability p; empty draws are
/// redrawn until at least one block is selected.
BlockSelection select_blocks(const BlockGrid& grid, double p, Rng& rng);

/// All blocks, in order.
BlockSelection all_blocks(const BlockGrid& grid);

/// alpha * (reconstructed - original), clamped.
Image residual_block(const Image& reconstructed, const Image& original, const AmplificationConfig& amp);

enum class GeneratorKind { kMim, kAutoencoder, kHighpass, kNone };

std::string_view to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(std::string_view text);

using Kernel3x3 = std::array<float, 9>;

/// [[0,-1,0],[-1,4,-1],[0,-1,0]]
Kernel3x3 laplacian_kernel();

struct BlockPosition {
  int index = 0;  // 1-based block index
  int row_offset = 0;
  int col_offset = 0;

  bool operator==(const BlockPosition&) const = default;
};

BlockPosition block_position(const BlockGrid& grid, int j);

/// Classifier input for one image: aligned residual/original blocks.
struct BlockInput {
  std::vector<Image> residual_blocks;  // empty for GeneratorKind::kNone
  std::vector<Image> original_blocks;
  std::vector<BlockPosition> positions;
  BlockSelection selection;
};

/// Source of residual maps. Immutable after construction; safe to share.
class ResidualGenerator {
 public:
  static ResidualGenerator none();
  static ResidualGenerator mim(std::shared_ptr<const Inpainter> model);
  static ResidualGenerator autoencoder(std::shared_ptr<const Autoencoder> model);
  static ResidualGenerator highpass(Kernel3x3 kernel = laplacian_kernel());

  GeneratorKind kind() const { return kind_; }
  bool produces_residuals() const { return kind_ != GeneratorKind::kNone; }
  const Inpainter* inpainter() const { return inpainter_.get(); }
  const Autoencoder* autoencoder_model() const { return autoencoder_.get(); }
  const Kernel3x3& kernel() const { return kernel_; }

  /// Residual of block j only. For MIM this is one inpainter pass.
  Image block_residual(const Image& image, const BlockGrid& grid, int j, const AmplificationConfig& amp) const;
  /// Whole residual map, shape of the image.
  Image full_residual(const Image& image, const BlockGrid& grid, const AmplificationConfig& amp) const;
  /// Image the residual is measured against, if the kind has one.
  Image reconstruction(const Image& image, const BlockGrid& grid) const;
  /// Inpainter forward passes needed for one full residual map.
  int forward_passes(const BlockGrid& grid) const;

 private:
  GeneratorKind kind_ = GeneratorKind::kNone;
  std::shared_ptr<const Inpainter> inpainter_;
  std::shared_ptr<const Autoencoder> autoencoder_;
  Kernel3x3 kernel_{};
};

/// Convolves each channel with the kernel (same size, reflect-101 border),
/// scales by alpha and clamps.
Image highpass_map(const Image& image, const Kernel3x3& kernel, const AmplificationConfig& amp);
std::vector<Image> highpass_residual(const Image& image, const BlockGrid& grid,
                                     const AmplificationConfig& amp = {},
                                     const Kernel3x3& kernel = laplacian_kernel());
std::vector<Image> ae_residual(const Autoencoder& model, const Image& image, const BlockGrid& grid,
                               const AmplificationConfig& amp);

Image generate_full_residual(const ResidualGenerator& gen, const Image& image, const BlockGrid& grid,
                             const AmplificationConfig& amp);

/// Draws a block selection and produces the aligned residual/original blocks.
BlockInput generate_training_input(const ResidualGenerator& gen, const Image& image, const BlockGrid& grid,
                                   double p, const AmplificationConfig& amp, Rng& rng);

/// Every block, as used at test time.
BlockInput full_input(const ResidualGenerator& gen, const Image& image, const BlockGrid& grid,
                      const AmplificationConfig& amp);

/// Cuts a BlockInput for `selection` out of a precomputed residual map.
BlockInput input_from_map(const Image& image, const Image* residual_map, const BlockGrid& grid,
                          BlockSelection selection);

/// Memoizes full residual maps per image content. Generators are
/// deterministic, so blocks cut from a cached map equal fresh per-block
/// generator calls.
class ResidualCache {
 public:
  ResidualCache(ResidualGenerator generator, BlockGrid grid, AmplificationConfig amp);

  const ResidualGenerator& generator() const { return generator_; }
  const BlockGrid& grid() const { return grid_; }
  const AmplificationConfig& amplification() const { return amp_; }

  /// Null for GeneratorKind::kNone.
  const Image* residual_map(const ImageSample& sample);
  BlockInput training_input(const ImageSample& sample, double p, Rng& rng);
  BlockInput test_input(const ImageSample& sample);
  std::size_t size() const { return maps_.size(); }

 private:
  ResidualGenerator generator_;
  BlockGrid grid_;
  AmplificationConfig amp_;
  std::unordered_map<std::uint64_t, Image> maps_;
};

}  // namespace rffr
