#include "rffr/detector/detector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rffr/common/error.hpp"

namespace rffr {

void DetectorConfig::validate() const {
  const auto positive = [](int v, const char* name) {
    if (v < 1) throw InvalidInput(std::string("detector ") + name + " must be >= 1");
  };
  positive(image_side, "image_side");
  positive(patch_side, "patch_side");
  positive(embed_dim, "embed_dim");
  positive(layers, "layers");
  positive(heads, "heads");
  positive(mlp_ratio, "mlp_ratio");
  if (image_side % patch_side != 0) throw InvalidInput("detector patch_side must divide image_side");
  if (embed_dim % heads != 0) throw InvalidInput("detector embed_dim must be divisible by heads");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidInput("detector dropout must lie in [0, 1)");
}

void DetectorConfig::check_grid(const BlockGrid& grid) const {
  if (grid.image_side() != image_side) {
    throw InvalidInput("grid side " + std::to_string(grid.image_side()) + " does not match detector image_side " +
                       std::to_string(image_side));
  }
  if (grid.block_side() % patch_side != 0) {
    throw InvalidInput("detector patch_side " + std::to_string(patch_side) + " does not divide block side " +
                       std::to_string(grid.block_side()));
  }
}

double cls_loss(const Prediction& pred, Label label) {
  const double p = pred.probs[label == Label::kFake ? 1 : 0];
  return -std::log(std::max(p, kClsLossEpsilon));
}

template <class T>
DetectorBranch<T>::DetectorBranch(const DetectorConfig& config, Rng& rng)
    : patch_embed(config.patch_side * config.patch_side * 3, config.embed_dim),
      cls_token(1, config.embed_dim),
      pos_embed(config.patches_per_side() * config.patches_per_side(), config.embed_dim),
      stack(config.embed_dim, config.layers, config.heads, config.mlp_ratio),
      patch_side_(config.patch_side),
      patches_per_side_(config.patches_per_side()),
      image_side_(config.image_side),
      dropout_(config.dropout) {
  patch_embed.init(nn::Init::kTruncatedNormal, rng);
  nn::fill_truncated_normal(cls_token.value, 0.02, rng);
  nn::fill_truncated_normal(pos_embed.value, 0.02, rng);
  stack.init(nn::Init::kTruncatedNormal, rng);
}

template <class T>
nn::Matrix<T> DetectorBranch<T>::forward(const std::vector<Image>& blocks, const std::vector<BlockPosition>& positions,
                                         Cache* cache, Rng* dropout_rng) const {
  const int ps = patch_side_;
  const int side = blocks.front().height;
  const int per_block = side / ps;
  const Eigen::Index tokens = static_cast<Eigen::Index>(blocks.size()) * per_block * per_block;
  const int pd = ps * ps * 3;

  nn::Matrix<T> patches(tokens, pd);
  std::vector<int> pos_index(static_cast<std::size_t>(tokens));
  Eigen::Index row = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Image& block = blocks[b];
    const int pr0 = positions[b].row_offset / ps;
    const int pc0 = positions[b].col_offset / ps;
    for (int pr = 0; pr < per_block; ++pr)
      for (int pc = 0; pc < per_block; ++pc, ++row) {
        pos_index[static_cast<std::size_t>(row)] = (pr0 + pr) * patches_per_side_ + (pc0 + pc);
        Eigen::Index col = 0;
        for (int y = 0; y < ps; ++y)
          for (int x = 0; x < ps; ++x)
            for (int c = 0; c < 3; ++c) patches(row, col++) = static_cast<T>(block.at(pr * ps + y, pc * ps + x, c));
      }
  }

  nn::Matrix<T> sequence(tokens + 1, cls_token.value.cols());
  sequence.row(0) = cls_token.value.row(0);
  sequence.bottomRows(tokens) = patch_embed.forward(patches);
  for (Eigen::Index t = 0; t < tokens; ++t) {
    sequence.row(t + 1) += pos_embed.value.row(pos_index[static_cast<std::size_t>(t)]);
  }

  nn::Matrix<T> keep;
  if (dropout_rng && dropout_ > 0.0) {
    keep.resize(tokens, sequence.cols());
    const T scale = static_cast<T>(1.0 / (1.0 - dropout_));
    for (Eigen::Index i = 0; i < keep.size(); ++i) {
      keep.data()[i] = dropout_rng->bernoulli(dropout_) ? static_cast<T>(0) : scale;
    }
    sequence.bottomRows(tokens) = sequence.bottomRows(tokens).cwiseProduct(keep);
  }

  nn::Matrix<T> out = stack.forward(sequence, cache ? &cache->stack : nullptr);
  if (cache) {
    cache->patches = std::move(patches);
    cache->positions = std::move(pos_index);
    cache->keep = std::move(keep);
  }
  return out.topRows(1);
}

template <class T>
void DetectorBranch<T>::backward(const Cache& cache, const nn::Matrix<T>& dfeature) {
  const Eigen::Index tokens = cache.patches.rows();
  nn::Matrix<T> dout = nn::Matrix<T>::Zero(tokens + 1, dfeature.cols());
  dout.row(0) = dfeature.row(0);
  nn::Matrix<T> dseq = stack.backward(cache.stack, dout);
  cls_token.grad.row(0) += dseq.row(0);
  nn::Matrix<T> dtokens = dseq.bottomRows(tokens);
  if (cache.keep.size() > 0) dtokens = dtokens.cwiseProduct(cache.keep);
  for (Eigen::Index t = 0; t < tokens; ++t) {
    pos_embed.grad.row(cache.positions[static_cast<std::size_t>(t)]) += dtokens.row(t);
  }
  patch_embed.backward(cache.patches, dtokens);
}

template <class T>
BasicDetector<T>::BasicDetector(const DetectorConfig& config) : config_(config) {
  config.validate();
  Rng rng(derive_seed(config.rng_seed, "detector-init"));
  // Both branches are always drawn so a branch's initial weights do not
  // depend on whether the other one exists.
  DetectorBranch<T> original(config, rng);
  DetectorBranch<T> residual(config, rng);
  if (config.uses_original()) original_ = std::move(original);
  if (config.uses_residual()) residual_ = std::move(residual);
  const int feature = config.merge == MergeMode::kConcatLinear ? 2 * config.embed_dim : config.embed_dim;
  head_ = nn::Linear<T>(feature, 2);
  head_.init(nn::Init::kTruncatedNormal, rng);
}

template <class T>
nn::ParameterList<T> BasicDetector<T>::parameters() {
  nn::ParameterList<T> out;
  const auto add = [&out](const std::string& name, nn::Parameter<T>& p) { out.push_back({name, &p}); };
  if (original_) original_->visit("branch_original.", add);
  if (residual_) residual_->visit("branch_residual.", add);
  head_.visit("head.", add);
  return out;
}

template <class T>
void BasicDetector<T>::check_input(const BlockInput& input) const {
  const auto check_blocks = [&](const std::vector<Image>& blocks, const char* what) {
    if (blocks.empty()) throw InvalidInput(std::string("detector: empty ") + what + " block list");
    if (blocks.size() != input.positions.size()) {
      throw InvalidInput(std::string("detector: ") + what + " blocks and positions are misaligned");
    }
    const int side = blocks.front().height;
    if (side < config_.patch_side || side % config_.patch_side != 0) {
      throw InvalidInput("detector: block side " + std::to_string(side) + " is not a multiple of patch_side");
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const Image& b = blocks[i];
      const BlockPosition& p = input.positions[i];
      if (b.height != side || b.width != side || b.channels != 3) {
        throw InvalidInput("detector: blocks must share one square RGB shape");
      }
      if (p.row_offset % config_.patch_side != 0 || p.col_offset % config_.patch_side != 0 || p.row_offset < 0 ||
          p.col_offset < 0 || p.row_offset + side > config_.image_side || p.col_offset + side > config_.image_side) {
        throw InvalidInput("detector: block position outside the image patch grid");
      }
    }
  };
  if (config_.uses_original()) check_blocks(input.original_blocks, "original");
  if (config_.uses_residual()) check_blocks(input.residual_blocks, "residual");
  if (config_.branches == BranchSet::kDual && input.original_blocks.size() != input.residual_blocks.size()) {
    throw InvalidInput("detector: residual and original lists are misaligned");
  }
}

template <class T>
Prediction BasicDetector<T>::forward(const BlockInput& input, Cache* cache, Rng* dropout_rng) const {
  check_input(input);
  const int d = config_.embed_dim;
  nn::Matrix<T> orig_feature = nn::Matrix<T>::Zero(1, d);
  nn::Matrix<T> res_feature = nn::Matrix<T>::Zero(1, d);
  if (original_) {
    typename DetectorBranch<T>::Cache* bc = nullptr;
    if (cache) bc = &cache->original.emplace();
    orig_feature = original_->forward(input.original_blocks, input.positions, bc, dropout_rng);
  }
  if (residual_) {
    typename DetectorBranch<T>::Cache* bc = nullptr;
    if (cache) bc = &cache->residual.emplace();
    res_feature = residual_->forward(input.residual_blocks, input.positions, bc, dropout_rng);
  }
  nn::Matrix<T> feature;
  if (config_.merge == MergeMode::kConcatLinear) {
    feature.resize(1, 2 * d);
    feature << orig_feature, res_feature;
  } else {
    feature = orig_feature + res_feature;
  }
  const nn::Matrix<T> probs = nn::softmax_rows<T>(head_.forward(feature));
  if (!probs.allFinite()) throw NumericFailure("non-finite detector activation");
  if (cache) {
    cache->feature = std::move(feature);
    cache->probs = probs;
  }
  Prediction pred;
  pred.probs = {static_cast<double>(probs(0, 0)), static_cast<double>(probs(0, 1))};
  return pred;
}

template <class T>
double BasicDetector<T>::accumulate_gradients(const BlockInput& input, Label label, double scale, Rng* dropout_rng) {
  Cache cache;
  const Prediction pred = forward(input, &cache, dropout_rng);
  const double loss = cls_loss(pred, label);
  nn::Matrix<T> dlogits = cache.probs;
  dlogits(0, label == Label::kFake ? 1 : 0) -= static_cast<T>(1);
  dlogits *= static_cast<T>(scale);
  const nn::Matrix<T> dfeature = head_.backward(cache.feature, dlogits);
  const int d = config_.embed_dim;
  if (config_.merge == MergeMode::kConcatLinear) {
    if (original_) original_->backward(*cache.original, dfeature.leftCols(d));
    if (residual_) residual_->backward(*cache.residual, dfeature.rightCols(d));
  } else {
    if (original_) original_->backward(*cache.original, dfeature);
    if (residual_) residual_->backward(*cache.residual, dfeature);
  }
  return loss;
}

template class DetectorBranch<float>;
template class DetectorBranch<double>;
template class BasicDetector<float>;
template class BasicDetector<double>;

DetectorTraining train_detector(const DetectorConfig& config, const nn::TrainSchedule& schedule,
                                SampleStream& train_stream, ResidualCache& residuals,
                                const DetectorTrainOptions& options) {
  config.validate();
  config.check_grid(residuals.grid());
  schedule.validate();
  if (config.uses_residual() && !residuals.generator().produces_residuals()) {
    throw InvalidInput("detector with a residual branch needs a residual-producing generator");
  }
  if (!(options.p > 0.0 && options.p <= 1.0)) throw InvalidInput("selection probability must lie in (0, 1]");

  DetectorTraining run{Detector(config), {}};
  const auto params = run.model.parameters();
  nn::AdamW<float> optimizer(schedule.weight_decay);
  Rng selection_rng(derive_seed(config.rng_seed, "detector-selection"));
  Rng dropout_rng(derive_seed(config.rng_seed, "detector-dropout"));

  for (int step = 0; step < schedule.total_steps; ++step) {
    const std::vector<ImageSample> batch = train_stream.next_batch();
    if (batch.empty()) throw InvalidInput("train_detector: empty batch at step " + std::to_string(step));
    nn::zero_grads(params);
    const double scale = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const ImageSample& s : batch) {
      const BlockInput input = residuals.training_input(s, options.p, selection_rng);
      loss += run.model.accumulate_gradients(input, s.label, scale, &dropout_rng);
    }
    loss *= scale;
    if (!std::isfinite(loss)) throw NumericFailure("train_detector: non-finite loss at step " + std::to_string(step));
    optimizer.step(params, schedule.lr_at(step));
    if (!nn::parameters_finite(params)) {
      throw NumericFailure("train_detector: non-finite parameters after step " + std::to_string(step));
    }
    run.loss_trace.push_back(loss);
    if (options.progress) options.progress(step, loss);
    if (options.hook && options.hook_every > 0 && (step + 1) % options.hook_every == 0) {
      options.hook(step + 1, run.model);
    }
  }
  return run;
}

DetectorTraining train_detector(const DetectorConfig& config, const nn::TrainSchedule& schedule,
                                SampleStream& train_stream, const ResidualGenerator& generator,
                                const BlockGrid& grid, double p, const AmplificationConfig& amp) {
  ResidualCache residuals(generator, grid, amp);
  DetectorTrainOptions options;
  options.p = p;
  return train_detector(config, schedule, train_stream, residuals, options);
}

double predict(const Detector& model, const Image& image, const ResidualGenerator& generator, const BlockGrid& grid,
               const AmplificationConfig& amp) {
  model.config().check_grid(grid);
  return model.forward(full_input(generator, image, grid, amp)).p_fake();
}

double predict(const Detector& model, const ImageSample& sample, ResidualCache& residuals) {
  model.config().check_grid(residuals.grid());
  return model.forward(residuals.test_input(sample)).p_fake();
}

nn::Checkpoint make_checkpoint(const Detector& model, const nn::TrainSchedule& schedule, long step,
                               const nlohmann::json& extra) {
  nn::Checkpoint ckpt;
  ckpt.role = "detector";
  ckpt.config = model.config();
  for (const auto& [key, value] : extra.items()) ckpt.config[key] = value;
  ckpt.schedule = schedule;
  ckpt.step = step;
  ckpt.tensors = nn::to_records(const_cast<Detector&>(model).parameters());
  return ckpt;
}

Detector detector_from_checkpoint(const nn::Checkpoint& checkpoint) {
  if (checkpoint.role != "detector") {
    throw InvalidInput("checkpoint role is '" + checkpoint.role + "', expected 'detector'");
  }
  Detector model(checkpoint.config.get<DetectorConfig>());
  nn::from_records(checkpoint.tensors, model.parameters());
  return model;
}

int apply_pretrained(Detector& model, const nn::Checkpoint& weights) {
  int copied = 0;
  for (const auto& p : model.parameters()) {
    for (const auto& t : weights.tensors) {
      if (t.name != p.name || t.rows != p.param->value.rows() || t.cols != p.param->value.cols()) continue;
      for (Eigen::Index i = 0; i < p.param->value.size(); ++i) {
        p.param->value.data()[i] = t.values[static_cast<std::size_t>(i)];
      }
      ++copied;
    }
  }
  return copied;
}

}  // namespace rffr
