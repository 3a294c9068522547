#include "rffr/residual/residual.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "rffr/common/error.hpp"

namespace rffr {

void AmplificationConfig::validate() const {
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be positive");
  if (!(clamp_low < clamp_high)) throw InvalidInput("clamp_low must be below clamp_high");
}

BlockSelection select_blocks(const BlockGrid& grid, double p, Rng& rng) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidInput("selection probability must lie in (0, 1]");
  BlockSelection sel;
  sel.p = p;
  for (;;) {
    sel.indices.clear();
    for (int j = 1; j <= grid.block_count(); ++j)
      if (rng.bernoulli(p)) sel.indices.push_back(j);
    if (!sel.indices.empty()) return sel;
    ++sel.redraws;
  }
}

BlockSelection all_blocks(const BlockGrid& grid) {
  BlockSelection sel;
  sel.p = 1.0;
  for (int j = 1; j <= grid.block_count(); ++j) sel.indices.push_back(j);
  return sel;
}

Image residual_block(const Image& reconstructed, const Image& original, const AmplificationConfig& amp) {
  if (!reconstructed.same_shape(original)) throw InvalidInput("residual_block: block shapes differ");
  Image out(original.height, original.width, original.channels);
  const double lo = amp.clamp_low;
  const double hi = amp.clamp_high;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double r = amp.alpha * (static_cast<double>(reconstructed.data[i]) - original.data[i]);
    out.data[i] = static_cast<float>(std::clamp(r, lo, hi));
  }
  return out;
}

std::string_view to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kMim: return "mim";
    case GeneratorKind::kAutoencoder: return "autoencoder";
    case GeneratorKind::kHighpass: return "highpass";
    case GeneratorKind::kNone: return "none";
  }
  return "unknown";
}

GeneratorKind parse_generator_kind(std::string_view text) {
  if (text == "mim") return GeneratorKind::kMim;
  if (text == "autoencoder" || text == "ae") return GeneratorKind::kAutoencoder;
  if (text == "highpass") return GeneratorKind::kHighpass;
  if (text == "none") return GeneratorKind::kNone;
  throw InvalidInput("unknown residual generator '" + std::string(text) + "'");
}

Kernel3x3 laplacian_kernel() { return {0.f, -1.f, 0.f, -1.f, 4.f, -1.f, 0.f, -1.f, 0.f}; }

BlockPosition block_position(const BlockGrid& grid, int j) {
  return {j, grid.row_offset(j), grid.col_offset(j)};
}

ResidualGenerator ResidualGenerator::none() { return {}; }

ResidualGenerator ResidualGenerator::mim(std::shared_ptr<const Inpainter> model) {
  if (!model) throw InvalidInput("MIM residual generator requires an inpainter");
  ResidualGenerator g;
  g.kind_ = GeneratorKind::kMim;
  g.inpainter_ = std::move(model);
  return g;
}

ResidualGenerator ResidualGenerator::autoencoder(std::shared_ptr<const Autoencoder> model) {
  if (!model) throw InvalidInput("autoencoder residual generator requires a trained autoencoder");
  ResidualGenerator g;
  g.kind_ = GeneratorKind::kAutoencoder;
  g.autoencoder_ = std::move(model);
  return g;
}

ResidualGenerator ResidualGenerator::highpass(Kernel3x3 kernel) {
  ResidualGenerator g;
  g.kind_ = GeneratorKind::kHighpass;
  g.kernel_ = kernel;
  return g;
}

Image highpass_map(const Image& image, const Kernel3x3& kernel, const AmplificationConfig& amp) {
  amp.validate();
  if (image.channels != 3) throw InvalidInput("highpass_map expects an RGB image");
  cv::Mat src(image.height, image.width, CV_32FC3, const_cast<float*>(image.data.data()));
  cv::Mat k(3, 3, CV_32F, const_cast<float*>(kernel.data()));
  cv::Mat flipped;
  cv::flip(k, flipped, -1);  // filter2D correlates; flip for a true convolution
  Image out(image.height, image.width, 3);
  cv::Mat dst(out.height, out.width, CV_32FC3, out.data.data());
  cv::filter2D(src, dst, CV_32F, flipped, cv::Point(-1, -1), 0.0, cv::BORDER_REFLECT_101);
  for (float& v : out.data) {
    v = static_cast<float>(std::clamp(amp.alpha * v, amp.clamp_low, amp.clamp_high));
  }
  return out;
}

std::vector<Image> highpass_residual(const Image& image, const BlockGrid& grid, const AmplificationConfig& amp,
                                     const Kernel3x3& kernel) {
  return divide(highpass_map(image, kernel, amp), grid);
}

std::vector<Image> ae_residual(const Autoencoder& model, const Image& image, const BlockGrid& grid,
                               const AmplificationConfig& amp) {
  amp.validate();
  return divide(residual_block(model.reconstruct(image), image, amp), grid);
}

Image ResidualGenerator::block_residual(const Image& image, const BlockGrid& grid, int j,
                                        const AmplificationConfig& amp) const {
  amp.validate();
  switch (kind_) {
    case GeneratorKind::kMim:
      return residual_block(inpainter_->inpaint(image, grid, j), extract_block(image, grid, j), amp);
    case GeneratorKind::kAutoencoder:
    case GeneratorKind::kHighpass:
      return extract_block(full_residual(image, grid, amp), grid, j);
    case GeneratorKind::kNone:
      break;
  }
  throw InvalidInput("generator kind 'none' produces no residuals");
}

Image ResidualGenerator::full_residual(const Image& image, const BlockGrid& grid,
                                       const AmplificationConfig& amp) const {
  amp.validate();
  switch (kind_) {
    case GeneratorKind::kMim: {
      Image out(grid.image_side(), grid.image_side(), 3);
      for (int j = 1; j <= grid.block_count(); ++j) place_block(out, grid, j, block_residual(image, grid, j, amp));
      return out;
    }
    case GeneratorKind::kAutoencoder:
      return residual_block(autoencoder_->reconstruct(image), image, amp);
    case GeneratorKind::kHighpass:
      if (image.height != grid.image_side() || image.width != grid.image_side()) {
        throw InvalidInput("image does not match grid side");
      }
      return highpass_map(image, kernel_, amp);
    case GeneratorKind::kNone:
      break;
  }
  throw InvalidInput("generator kind 'none' produces no residuals");
}

Image ResidualGenerator::reconstruction(const Image& image, const BlockGrid& grid) const {
  switch (kind_) {
    case GeneratorKind::kMim: return reconstruct_full(*inpainter_, image, grid);
    case GeneratorKind::kAutoencoder: return clamped(autoencoder_->reconstruct(image), 0.0f, 1.0f);
    default: break;
  }
  throw InvalidInput("generator kind '" + std::string(to_string(kind_)) + "' has no reconstruction");
}

int ResidualGenerator::forward_passes(const BlockGrid& grid) const {
  switch (kind_) {
    case GeneratorKind::kMim: return grid.block_count();
    case GeneratorKind::kAutoencoder: return 1;
    default: return 0;
  }
}

Image generate_full_residual(const ResidualGenerator& gen, const Image& image, const BlockGrid& grid,
                             const AmplificationConfig& amp) {
  return gen.full_residual(image, grid, amp);
}

BlockInput input_from_map(const Image& image, const Image* residual_map, const BlockGrid& grid,
                          BlockSelection selection) {
  BlockInput in;
  for (const int j : selection.indices) {
    in.original_blocks.push_back(extract_block(image, grid, j));
    if (residual_map) in.residual_blocks.push_back(extract_block(*residual_map, grid, j));
    in.positions.push_back(block_position(grid, j));
  }
  in.selection = std::move(selection);
  return in;
}

BlockInput generate_training_input(const ResidualGenerator& gen, const Image& image, const BlockGrid& grid,
                                   double p, const AmplificationConfig& amp, Rng& rng) {
  amp.validate();
  BlockSelection selection = select_blocks(grid, p, rng);
  switch (gen.kind()) {
    case GeneratorKind::kNone:
      return input_from_map(image, nullptr, grid, std::move(selection));
    case GeneratorKind::kMim: {
      BlockInput in;
      for (const int j : selection.indices) {
        in.original_blocks.push_back(extract_block(image, grid, j));
        in.residual_blocks.push_back(gen.block_residual(image, grid, j, amp));
        in.positions.push_back(block_position(grid, j));
      }
      in.selection = std::move(selection);
      return in;
    }
    default: {
      const Image map = gen.full_residual(image, grid, amp);
      return input_from_map(image, &map, grid, std::move(selection));
    }
  }
}

BlockInput full_input(const ResidualGenerator& gen, const Image& image, const BlockGrid& grid,
                      const AmplificationConfig& amp) {
  if (!gen.produces_residuals()) return input_from_map(image, nullptr, grid, all_blocks(grid));
  const Image map = gen.full_residual(image, grid, amp);
  return input_from_map(image, &map, grid, all_blocks(grid));
}

ResidualCache::ResidualCache(ResidualGenerator generator, BlockGrid grid, AmplificationConfig amp)
    : generator_(std::move(generator)), grid_(grid), amp_(amp) {
  amp_.validate();
  if (const Inpainter* m = generator_.inpainter()) m->config().check_grid(grid_);
}

namespace {

std::uint64_t content_key(const ImageSample& sample) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  const int dims[3] = {sample.pixels.height, sample.pixels.width, sample.pixels.channels};
  mix(dims, sizeof dims);
  mix(sample.pixels.data.data(), sample.pixels.data.size() * sizeof(float));
  mix(sample.sample_id.data(), sample.sample_id.size());
  return h;
}

}  // namespace

const Image* ResidualCache::residual_map(const ImageSample& sample) {
  if (!generator_.produces_residuals()) return nullptr;
  const std::uint64_t key = content_key(sample);
  auto it = maps_.find(key);
  if (it == maps_.end()) {
    it = maps_.emplace(key, generator_.full_residual(sample.pixels, grid_, amp_)).first;
  }
  return &it->second;
}

BlockInput ResidualCache::training_input(const ImageSample& sample, double p, Rng& rng) {
  BlockSelection selection = select_blocks(grid_, p, rng);
  return input_from_map(sample.pixels, residual_map(sample), grid_, std::move(selection));
}

BlockInput ResidualCache::test_input(const ImageSample& sample) {
  return input_from_map(sample.pixels, residual_map(sample), grid_, all_blocks(grid_));
}

}  // namespace rffr
