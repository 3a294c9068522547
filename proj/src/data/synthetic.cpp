#include "rffr/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "rffr/common/error.hpp"
#include "rffr/common/rng.hpp"

namespace rffr {

std::string_view to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::kBlendSeam: return "blend_seam";
    case ArtifactKind::kCheckerboard: return "checkerboard";
    case ArtifactKind::kBlurPatch: return "blur_patch";
  }
  return "unknown";
}

ArtifactKind parse_artifact_kind(std::string_view text) {
  if (text == "blend_seam") return ArtifactKind::kBlendSeam;
  if (text == "checkerboard") return ArtifactKind::kCheckerboard;
  if (text == "blur_patch") return ArtifactKind::kBlurPatch;
  throw InvalidInput("unknown artifact kind '" + std::string(text) + "'");
}

void SyntheticConfig::validate() const {
  if (!(artifact_region_fraction > 0.0 && artifact_region_fraction <= 0.5)) {
    throw InvalidInput("artifact_region_fraction must lie in (0, 0.5]");
  }
  if (image_side < 8) throw InvalidInput("synthetic image side must be at least 8");
  if (!(texture.smoothness_scale > 0.0)) throw InvalidInput("smoothness_scale must be positive");
  if (texture.grain_amplitude < 0.0) throw InvalidInput("grain_amplitude must be non-negative");
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kCheckerAmplitude = 0.05;
constexpr double kDonorShift = 0.10;
constexpr int kBlurRadius = 2;

float quantize(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<float>(std::round(c * 255.0) / 255.0);
}

struct Blob {
  double cu, cv, inv_two_sigma2;
  std::array<double, 3> amp;
};

struct Wave {
  double ku, kv, phase, amp;
};

}  // namespace

Image render_real_texture(int side, std::uint64_t seed, const TextureParams& params) {
  Rng palette(derive_seed(params.palette_seed, "palette"));
  Rng rng(seed);

  std::array<double, 3> base{};
  for (int c = 0; c < 3; ++c) base[c] = palette.uniform(0.35, 0.65) + rng.uniform(-0.08, 0.08);

  const double grad_theta = rng.uniform(0.0, kTwoPi);
  std::array<double, 3> grad_amp{};
  for (double& g : grad_amp) g = rng.uniform(0.05, 0.15);

  std::vector<Blob> blobs(4);
  for (Blob& b : blobs) {
    b.cu = rng.uniform(0.2, 0.8);
    b.cv = rng.uniform(0.2, 0.8);
    const double sigma = rng.uniform(0.12, 0.30);
    b.inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    for (double& a : b.amp) a = rng.uniform(-0.2, 0.2);
  }

  // Wavelengths in units of the image side.
  std::vector<Wave> smooth(3);
  for (Wave& w : smooth) {
    const double wavelength = rng.uniform(params.smoothness_scale, 2.0 * params.smoothness_scale);
    const double theta = rng.uniform(0.0, kTwoPi);
    w.ku = kTwoPi * std::cos(theta) / wavelength;
    w.kv = kTwoPi * std::sin(theta) / wavelength;
    w.phase = rng.uniform(0.0, kTwoPi);
    w.amp = 0.03;
  }

  // Fine grain: a single periodic component, wavelength in pixels.
  Wave grain{};
  {
    const double wavelength_px = rng.uniform(4.0, 7.0);
    const double theta = rng.uniform(0.0, kTwoPi);
    grain.ku = kTwoPi * std::cos(theta) * side / wavelength_px;
    grain.kv = kTwoPi * std::sin(theta) * side / wavelength_px;
    grain.phase = rng.uniform(0.0, kTwoPi);
    grain.amp = params.grain_amplitude;
  }

  Image image(side, side, 3);
  for (int y = 0; y < side; ++y) {
    const double v = (y + 0.5) / side;
    for (int x = 0; x < side; ++x) {
      const double u = (x + 0.5) / side;
      const double ramp = std::cos(grad_theta) * (u - 0.5) + std::sin(grad_theta) * (v - 0.5);
      double luminance = 0.0;
      for (const Wave& w : smooth) luminance += w.amp * std::sin(w.ku * u + w.kv * v + w.phase);
      luminance += grain.amp * std::sin(grain.ku * u + grain.kv * v + grain.phase);
      std::array<double, 3> value{};
      for (int c = 0; c < 3; ++c) value[c] = base[c] + grad_amp[c] * ramp + luminance;
      for (const Blob& b : blobs) {
        const double d2 = (u - b.cu) * (u - b.cu) + (v - b.cv) * (v - b.cv);
        const double g = std::exp(-d2 * b.inv_two_sigma2);
        for (int c = 0; c < 3; ++c) value[c] += b.amp[c] * g;
      }
      for (int c = 0; c < 3; ++c) image.at(y, x, c) = quantize(std::clamp(value[c], 0.02, 0.98));
    }
  }
  return image;
}

SyntheticPair generate_synthetic_pair(const SyntheticConfig& config) {
  config.validate();
  const int side = config.image_side;
  Rng rng(derive_seed(config.rng_seed, "pair"));

  SyntheticPair pair;
  pair.real.pixels = render_real_texture(side, derive_seed(config.rng_seed, "real"), config.texture);

  const int region_side = std::clamp(
      static_cast<int>(std::lround(std::sqrt(config.artifact_region_fraction) * side)), 2, side - 2);
  const int span = side - region_side - 2;  // keep a one-pixel margin on each side
  pair.region.side = region_side;
  pair.region.y = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(span) + 1));
  pair.region.x = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(span) + 1));

  const Image& real = pair.real.pixels;
  Image fake = real;
  const Region& r = pair.region;

  switch (config.artifact_kind) {
    case ArtifactKind::kBlendSeam: {
      const Image donor =
          render_real_texture(side, derive_seed(config.rng_seed, "donor"), config.texture);
      std::array<double, 3> shift{};
      for (double& s : shift) s = rng.bernoulli(0.5) ? kDonorShift : -kDonorShift;
      for (int y = r.y; y < r.y + r.side; ++y)
        for (int x = r.x; x < r.x + r.side; ++x)
          for (int c = 0; c < 3; ++c) fake.at(y, x, c) = quantize(donor.at(y, x, c) + shift[c]);
      break;
    }
    case ArtifactKind::kCheckerboard: {
      for (int y = r.y; y < r.y + r.side; ++y)
        for (int x = r.x; x < r.x + r.side; ++x) {
          const double sign = ((x + y) % 2 == 0) ? 1.0 : -1.0;
          for (int c = 0; c < 3; ++c)
            fake.at(y, x, c) = quantize(real.at(y, x, c) + sign * kCheckerAmplitude);
        }
      break;
    }
    case ArtifactKind::kBlurPatch: {
      for (int y = r.y; y < r.y + r.side; ++y)
        for (int x = r.x; x < r.x + r.side; ++x)
          for (int c = 0; c < 3; ++c) {
            double total = 0.0;
            int count = 0;
            for (int dy = -kBlurRadius; dy <= kBlurRadius; ++dy)
              for (int dx = -kBlurRadius; dx <= kBlurRadius; ++dx) {
                const int yy = y + dy;
                const int xx = x + dx;
                if (yy < 0 || yy >= side || xx < 0 || xx >= side) continue;
                total += real.at(yy, xx, c);
                ++count;
              }
            fake.at(y, x, c) = quantize(total / count);
          }
      break;
    }
  }

  const std::string tag(to_string(config.artifact_kind));
  const std::string stem = tag + "_" + std::to_string(config.rng_seed);
  pair.real.label = Label::kReal;
  pair.real.domain_tag = tag;
  pair.real.sample_id = stem + "_real";
  pair.fake.pixels = std::move(fake);
  pair.fake.label = Label::kFake;
  pair.fake.domain_tag = tag;
  pair.fake.sample_id = stem + "_fake";
  return pair;
}

}  // namespace rffr
