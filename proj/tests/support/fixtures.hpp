#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rffr/data/manifest.hpp"
#include "rffr/data/synthetic.hpp"
#include "rffr/detector/detector.hpp"
#include "rffr/inpainter/inpainter.hpp"

namespace rffr::testing {

inline InpainterConfig tiny_inpainter(int image_side = 16, int patch_side = 4) {
  InpainterConfig c;
  c.image_side = image_side;
  c.patch_side = patch_side;
  c.encoder_dim = 16;
  c.encoder_layers = 2;
  c.encoder_heads = 2;
  c.decoder_dim = 8;
  c.decoder_layers = 1;
  c.decoder_heads = 2;
  c.mlp_ratio = 2;
  c.rng_seed = 3;
  return c;
}

inline DetectorConfig tiny_detector(int image_side = 16, int patch_side = 4) {
  DetectorConfig c;
  c.image_side = image_side;
  c.patch_side = patch_side;
  c.embed_dim = 8;
  c.layers = 1;
  c.heads = 2;
  c.mlp_ratio = 2;
  c.rng_seed = 9;
  return c;
}

inline ImageSample texture_sample(int side, std::uint64_t seed, Label label = Label::kReal) {
  ImageSample s;
  s.pixels = render_real_texture(side, seed, TextureParams{});
  s.label = label;
  s.domain_tag = "texture";
  s.sample_id = "tex_" + std::to_string(seed);
  return s;
}

inline std::vector<SyntheticPair> make_pairs(int count, ArtifactKind kind, int side, std::uint64_t seed0) {
  std::vector<SyntheticPair> out;
  for (int i = 0; i < count; ++i) {
    SyntheticConfig c;
    c.rng_seed = seed0 + static_cast<std::uint64_t>(i);
    c.artifact_kind = kind;
    c.image_side = side;
    out.push_back(generate_synthetic_pair(c));
  }
  return out;
}

/// Cycles over a fixed list and records every label it hands out.
class RecordingStream : public SampleStream {
 public:
  RecordingStream(std::vector<ImageSample> samples, std::size_t batch) : samples_(std::move(samples)), batch_(batch) {}

  std::vector<ImageSample> next_batch() override {
    std::vector<ImageSample> out;
    for (std::size_t i = 0; i < batch_; ++i) {
      out.push_back(samples_[cursor_ % samples_.size()]);
      served_.push_back(out.back().label);
      ++cursor_;
    }
    return out;
  }

  const std::vector<Label>& served() const { return served_; }

 private:
  std::vector<ImageSample> samples_;
  std::size_t batch_;
  std::size_t cursor_ = 0;
  std::vector<Label> served_;
};

}  // namespace rffr::testing
