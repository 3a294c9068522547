#pragma once

#include <cstdint>
#include <string_view>
#include <utility>

#include "rffr/data/image.hpp"

namespace rffr {

enum class ArtifactKind { kBlendSeam, kCheckerboard, kBlurPatch };

std::string_view to_string(ArtifactKind kind);
ArtifactKind parse_artifact_kind(std::string_view text);

struct TextureParams {
  /// Shortest wavelength of the smooth component, as a fraction of the side.
  double smoothness_scale = 0.5;
  std::uint64_t palette_seed = 0;
  /// Amplitude of the periodic fine-grain component (0 disables it).
  double grain_amplitude = 0.01;
};

struct SyntheticConfig {
  std::uint64_t rng_seed = 0;
  ArtifactKind artifact_kind = ArtifactKind::kBlendSeam;
  double artifact_region_fraction = 0.12;
  TextureParams texture;
  int image_side = 224;

  void validate() const;
};

/// Axis-aligned square where the artifact was injected.
struct Region {
  int y = 0;
  int x = 0;
  int side = 0;

  bool contains(int py, int px) const {
    return py >= y && py < y + side && px >= x && px < x + side;
  }
};

struct SyntheticPair {
  ImageSample real;
  ImageSample fake;
  Region region;
};

/// Smooth structured texture standing in for a real face crop.
Image render_real_texture(int side, std::uint64_t seed, const TextureParams& params);

/// REAL texture plus a FAKE copy with one localized artifact. Pixels are
/// quantized to 8-bit levels so a PNG round trip is lossless.
SyntheticPair generate_synthetic_pair(const SyntheticConfig& config);

}  // namespace rffr
