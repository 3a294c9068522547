#include "rffr/inpainter/inpainter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rffr/common/error.hpp"

namespace rffr {

void InpainterConfig::validate() const {
  const auto positive = [](int v, const char* name) {
    if (v < 1) throw InvalidInput(std::string("inpainter ") + name + " must be >= 1");
  };
  positive(image_side, "image_side");
  positive(patch_side, "patch_side");
  positive(encoder_dim, "encoder_dim");
  positive(encoder_layers, "encoder_layers");
  positive(encoder_heads, "encoder_heads");
  positive(decoder_dim, "decoder_dim");
  positive(decoder_layers, "decoder_layers");
  positive(decoder_heads, "decoder_heads");
  positive(mlp_ratio, "mlp_ratio");
  if (image_side % patch_side != 0) throw InvalidInput("inpainter patch_side must divide image_side");
  if (encoder_dim % encoder_heads != 0) throw InvalidInput("encoder_dim must be divisible by encoder_heads");
  if (decoder_dim % decoder_heads != 0) throw InvalidInput("decoder_dim must be divisible by decoder_heads");
}

void InpainterConfig::check_grid(const BlockGrid& grid) const {
  if (grid.image_side() != image_side) {
    throw InvalidInput("grid side " + std::to_string(grid.image_side()) +
                       " does not match inpainter image_side " + std::to_string(image_side));
  }
  if (grid.block_side() % patch_side != 0) {
    throw InvalidInput("inpainter patch_side " + std::to_string(patch_side) +
                       " does not divide block side " + std::to_string(grid.block_side()));
  }
}

double rep_loss(const Image& reconstructed, const Image& original) {
  if (!reconstructed.same_shape(original)) throw InvalidInput("rep_loss: block shapes differ");
  if (original.data.empty()) throw InvalidInput("rep_loss: empty blocks");
  double total = 0.0;
  for (std::size_t i = 0; i < original.data.size(); ++i) {
    const double d = static_cast<double>(reconstructed.data[i]) - original.data[i];
    total += d * d;
  }
  return total / static_cast<double>(original.data.size());
}

namespace {

/// Patch indices covered by block j, ascending.
std::vector<int> block_patches(const BlockGrid& grid, int j, int patch_side, int patches_per_side) {
  const int per_block = grid.block_side() / patch_side;
  const int r0 = grid.row_offset(j) / patch_side;
  const int c0 = grid.col_offset(j) / patch_side;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(per_block * per_block));
  for (int r = r0; r < r0 + per_block; ++r)
    for (int c = c0; c < c0 + per_block; ++c) out.push_back(r * patches_per_side + c);
  return out;
}

template <class T>
void copy_patch(const Image& image, int patch_index, int patch_side, int patches_per_side,
                nn::Matrix<T>& dst, Eigen::Index row) {
  const int y0 = (patch_index / patches_per_side) * patch_side;
  const int x0 = (patch_index % patches_per_side) * patch_side;
  Eigen::Index col = 0;
  for (int y = 0; y < patch_side; ++y)
    for (int x = 0; x < patch_side; ++x)
      for (int c = 0; c < 3; ++c) dst(row, col++) = static_cast<T>(image.at(y0 + y, x0 + x, c));
}

void check_finite_or_throw(bool finite, const std::string& what) {
  if (!finite) throw NumericFailure(what);
}

}  // namespace

template <class T>
BasicInpainter<T>::BasicInpainter(const InpainterConfig& config)
    : config_(config),
      patch_embed_(config.patch_dim(), config.encoder_dim),
      encoder_pos_(config.patch_count(), config.encoder_dim),
      encoder_(config.encoder_dim, config.encoder_layers, config.encoder_heads, config.mlp_ratio),
      decoder_embed_(config.encoder_dim, config.decoder_dim),
      mask_token_(1, config.decoder_dim),
      decoder_pos_(config.patch_count(), config.decoder_dim),
      decoder_(config.decoder_dim, config.decoder_layers, config.decoder_heads, config.mlp_ratio),
      head_(config.decoder_dim, config.patch_dim()) {
  config.validate();
  Rng rng(derive_seed(config.rng_seed, "inpainter-init"));
  patch_embed_.init(nn::Init::kXavierUniform, rng);
  encoder_.init(nn::Init::kXavierUniform, rng);
  decoder_embed_.init(nn::Init::kXavierUniform, rng);
  decoder_.init(nn::Init::kXavierUniform, rng);
  head_.init(nn::Init::kXavierUniform, rng);
  nn::fill_truncated_normal(mask_token_.value, 0.02, rng);
  encoder_pos_.value = nn::sincos_table<T>(config.patches_per_side(), config.encoder_dim);
  decoder_pos_.value = nn::sincos_table<T>(config.patches_per_side(), config.decoder_dim);
}

template <class T>
nn::ParameterList<T> BasicInpainter<T>::parameters() {
  nn::ParameterList<T> out;
  const auto add = [&out](const std::string& name, nn::Parameter<T>& p) { out.push_back({name, &p}); };
  patch_embed_.visit("patch_embed.", add);
  add("encoder_pos", encoder_pos_);
  encoder_.visit("encoder.", add);
  decoder_embed_.visit("decoder_embed.", add);
  add("mask_token", mask_token_);
  add("decoder_pos", decoder_pos_);
  decoder_.visit("decoder.", add);
  head_.visit("head.", add);
  return out;
}

template <class T>
nn::Matrix<T> BasicInpainter<T>::predict(const Image& image, const BlockGrid& grid, int j,
                                         Cache* cache) const {
  config_.check_grid(grid);
  if (image.height != config_.image_side || image.width != config_.image_side || image.channels != 3) {
    throw InvalidInput("inpaint: image must be " + std::to_string(config_.image_side) + "x" +
                       std::to_string(config_.image_side) + "x3");
  }
  grid.check_index(j);
  const int pps = config_.patches_per_side();
  const int n = config_.patch_count();

  std::vector<int> masked = block_patches(grid, j, config_.patch_side, pps);
  std::vector<int> visible;
  visible.reserve(static_cast<std::size_t>(n) - masked.size());
  for (int p = 0, m = 0; p < n; ++p) {
    if (m < static_cast<int>(masked.size()) && masked[static_cast<std::size_t>(m)] == p) {
      ++m;
    } else {
      visible.push_back(p);
    }
  }

  // Only visible patches are read from the image.
  nn::Matrix<T> patches(static_cast<Eigen::Index>(visible.size()), config_.patch_dim());
  for (std::size_t i = 0; i < visible.size(); ++i) {
    copy_patch(image, visible[i], config_.patch_side, pps, patches, static_cast<Eigen::Index>(i));
  }

  nn::Matrix<T> tokens = patch_embed_.forward(patches);
  for (std::size_t i = 0; i < visible.size(); ++i) {
    tokens.row(static_cast<Eigen::Index>(i)) += encoder_pos_.value.row(visible[i]);
  }
  nn::Matrix<T> encoded = encoder_.forward(tokens, cache ? &cache->encoder : nullptr);
  nn::Matrix<T> projected = decoder_embed_.forward(encoded);

  nn::Matrix<T> sequence(n, config_.decoder_dim);
  for (std::size_t i = 0; i < visible.size(); ++i) {
    sequence.row(visible[i]) = projected.row(static_cast<Eigen::Index>(i));
  }
  for (const int m : masked) sequence.row(m) = mask_token_.value.row(0);
  sequence += decoder_pos_.value;

  nn::Matrix<T> decoded = decoder_.forward(sequence, cache ? &cache->decoder : nullptr);
  nn::Matrix<T> decoded_masked(static_cast<Eigen::Index>(masked.size()), config_.decoder_dim);
  for (std::size_t i = 0; i < masked.size(); ++i) {
    decoded_masked.row(static_cast<Eigen::Index>(i)) = decoded.row(masked[i]);
  }
  nn::Matrix<T> pred = head_.forward(decoded_masked);
  check_finite_or_throw(pred.allFinite(),
                        "non-finite inpainter activation while reconstructing block " + std::to_string(j));

  if (cache) {
    cache->visible = std::move(visible);
    cache->masked = std::move(masked);
    cache->visible_patches = std::move(patches);
    cache->encoded = std::move(encoded);
    cache->decoded_masked = std::move(decoded_masked);
  }
  return pred;
}

template <class T>
void BasicInpainter<T>::backward(const Cache& cache, const nn::Matrix<T>& dpred) {
  const int n = config_.patch_count();
  nn::Matrix<T> ddecoded_masked = head_.backward(cache.decoded_masked, dpred);
  nn::Matrix<T> ddecoded = nn::Matrix<T>::Zero(n, config_.decoder_dim);
  for (std::size_t i = 0; i < cache.masked.size(); ++i) {
    ddecoded.row(cache.masked[i]) = ddecoded_masked.row(static_cast<Eigen::Index>(i));
  }
  nn::Matrix<T> dsequence = decoder_.backward(cache.decoder, ddecoded);
  decoder_pos_.grad += dsequence;
  for (const int m : cache.masked) mask_token_.grad.row(0) += dsequence.row(m);

  nn::Matrix<T> dprojected(static_cast<Eigen::Index>(cache.visible.size()), config_.decoder_dim);
  for (std::size_t i = 0; i < cache.visible.size(); ++i) {
    dprojected.row(static_cast<Eigen::Index>(i)) = dsequence.row(cache.visible[i]);
  }
  nn::Matrix<T> dencoded = decoder_embed_.backward(cache.encoded, dprojected);
  nn::Matrix<T> dtokens = encoder_.backward(cache.encoder, dencoded);
  for (std::size_t i = 0; i < cache.visible.size(); ++i) {
    encoder_pos_.grad.row(cache.visible[i]) += dtokens.row(static_cast<Eigen::Index>(i));
  }
  patch_embed_.backward(cache.visible_patches, dtokens);
}

template <class T>
double BasicInpainter<T>::accumulate_gradients(const Image& image, const BlockGrid& grid, int j,
                                               double scale) {
  Cache cache;
  nn::Matrix<T> pred = predict(image, grid, j, &cache);
  nn::Matrix<T> target(pred.rows(), pred.cols());
  for (std::size_t i = 0; i < cache.masked.size(); ++i) {
    copy_patch(image, cache.masked[i], config_.patch_side, config_.patches_per_side(), target,
               static_cast<Eigen::Index>(i));
  }
  const nn::Matrix<T> diff = pred - target;
  const double count = static_cast<double>(diff.size());
  const double loss = static_cast<double>(diff.squaredNorm()) / count;
  backward(cache, diff * static_cast<T>(2.0 * scale / count));
  return loss;
}

template <class T>
Image BasicInpainter<T>::inpaint(const Image& image, const BlockGrid& grid, int j) const {
  const nn::Matrix<T> pred = predict(image, grid, j);
  const int side = grid.block_side();
  const int ps = config_.patch_side;
  const int per_block = side / ps;
  Image block(side, side, 3);
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    const int y0 = static_cast<int>(i / per_block) * ps;
    const int x0 = static_cast<int>(i % per_block) * ps;
    Eigen::Index col = 0;
    for (int y = 0; y < ps; ++y)
      for (int x = 0; x < ps; ++x)
        for (int c = 0; c < 3; ++c) block.at(y0 + y, x0 + x, c) = static_cast<float>(pred(i, col++));
  }
  return block;
}

template <class T>
Image BasicInpainter<T>::inpaint(const Image& image, const BlockMask& mask) const {
  const int zeros = mask.zero_count();
  const int block_side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(zeros))));
  if (zeros == 0 || block_side * block_side != zeros || mask.side % block_side != 0) {
    throw InvalidInput("mask does not cover a square block of a k x k grid");
  }
  const BlockGrid grid(mask.side / block_side, mask.side);
  if (make_mask(mask.j, grid).bitmap != mask.bitmap) {
    throw InvalidInput("mask zero region is not block " + std::to_string(mask.j) + " of its grid");
  }
  return inpaint(image, grid, mask.j);
}

template class BasicInpainter<float>;
template class BasicInpainter<double>;

Image reconstruct_full(const Inpainter& model, const Image& image, const BlockGrid& grid) {
  Image out(grid.image_side(), grid.image_side(), 3);
  for (int j = 1; j <= grid.block_count(); ++j) place_block(out, grid, j, model.inpaint(image, grid, j));
  return clamped(std::move(out), 0.0f, 1.0f);
}

InpainterTraining train_inpainter(const InpainterConfig& config, const nn::TrainSchedule& schedule,
                                  SampleStream& real_stream, const BlockGrid& grid,
                                  const TrainProgress& progress) {
  config.validate();
  config.check_grid(grid);
  schedule.validate();

  InpainterTraining run{Inpainter(config), {}};
  const nn::ParameterList<float> params = run.model.parameters();
  nn::AdamW<float> optimizer(schedule.weight_decay);
  Rng mask_rng(derive_seed(config.rng_seed, "inpainter-masks"));
  run.loss_trace.reserve(static_cast<std::size_t>(schedule.total_steps));

  for (int step = 0; step < schedule.total_steps; ++step) {
    const std::vector<ImageSample> batch = real_stream.next_batch();
    if (batch.empty()) throw InvalidInput("train_inpainter: empty batch at step " + std::to_string(step));
    for (const ImageSample& s : batch) {
      if (s.label != Label::kReal) {
        throw RealOnlyViolation("train_inpainter: FAKE sample '" + s.sample_id + "' at step " +
                                std::to_string(step) + "; the inpainter trains on REAL images only");
      }
    }
    nn::zero_grads(params);
    const double scale = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const ImageSample& s : batch) {
      const int j = 1 + static_cast<int>(mask_rng.uniform_int(static_cast<std::uint64_t>(grid.block_count())));
      loss += run.model.accumulate_gradients(s.pixels, grid, j, scale);
    }
    loss *= scale;
    if (!std::isfinite(loss)) {
      throw NumericFailure("train_inpainter: non-finite loss at step " + std::to_string(step));
    }
    optimizer.step(params, schedule.lr_at(step));
    if (!nn::parameters_finite(params)) {
      throw NumericFailure("train_inpainter: non-finite parameters after step " + std::to_string(step));
    }
    run.loss_trace.push_back(loss);
    if (progress) progress(step, loss);
  }
  return run;
}

nn::Checkpoint make_checkpoint(const Inpainter& model, const nn::TrainSchedule& schedule, long step,
                               int grid_k) {
  nn::Checkpoint ckpt;
  ckpt.role = "inpainter";
  ckpt.config = model.config();
  ckpt.config["grid_k"] = grid_k;
  ckpt.schedule = schedule;
  ckpt.step = step;
  ckpt.tensors = nn::to_records(const_cast<Inpainter&>(model).parameters());
  return ckpt;
}

Inpainter inpainter_from_checkpoint(const nn::Checkpoint& checkpoint) {
  if (checkpoint.role != "inpainter") {
    throw InvalidInput("checkpoint role is '" + checkpoint.role + "', expected 'inpainter'");
  }
  Inpainter model(checkpoint.config.get<InpainterConfig>());
  nn::from_records(checkpoint.tensors, model.parameters());
  return model;
}

}  // namespace rffr
