#include "rffr/residual/autoencoder.hpp"

#include <cmath>
#include <string>

#include "rffr/common/error.hpp"

namespace rffr {

void AutoencoderConfig::validate() const {
  if (image_side < 4 || image_side % 4 != 0) {
    throw InvalidInput("autoencoder image_side must be a positive multiple of 4");
  }
  if (base_width < 1) throw InvalidInput("autoencoder base_width must be >= 1");
}

namespace {

template <class T>
nn::Matrix<T> image_to_map(const Image& image) {
  nn::Matrix<T> m(static_cast<Eigen::Index>(image.height) * image.width, 3);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) m(static_cast<Eigen::Index>(y) * image.width + x, c) = static_cast<T>(image.at(y, x, c));
  return m;
}

template <class T>
nn::Matrix<T> concat_channels(const nn::Matrix<T>& a, const nn::Matrix<T>& b) {
  nn::Matrix<T> out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace

template <class T>
BasicAutoencoder<T>::BasicAutoencoder(const AutoencoderConfig& config)
    : config_(config),
      enc1_(3, config.base_width),
      enc2_(config.base_width, 2 * config.base_width),
      enc3_(2 * config.base_width, 4 * config.base_width),
      dec2_(6 * config.base_width, 2 * config.base_width),
      dec1_(3 * config.base_width, config.base_width),
      out_(config.base_width, 3) {
  config.validate();
  Rng rng(derive_seed(config.rng_seed, "autoencoder-init"));
  enc1_.init(rng);
  enc2_.init(rng);
  enc3_.init(rng);
  dec2_.init(rng);
  dec1_.init(rng);
  out_.init(nn::Init::kXavierUniform, rng);
}

template <class T>
nn::ParameterList<T> BasicAutoencoder<T>::parameters() {
  nn::ParameterList<T> out;
  const auto add = [&out](const std::string& name, nn::Parameter<T>& p) { out.push_back({name, &p}); };
  enc1_.visit("enc1.", add);
  enc2_.visit("enc2.", add);
  enc3_.visit("enc3.", add);
  dec2_.visit("dec2.", add);
  dec1_.visit("dec1.", add);
  out_.visit("out.", add);
  return out;
}

template <class T>
nn::Matrix<T> BasicAutoencoder<T>::forward(const Image& image, Cache* cache) const {
  const int s = config_.image_side;
  if (image.height != s || image.width != s || image.channels != 3) {
    throw InvalidInput("autoencoder expects " + std::to_string(s) + "x" + std::to_string(s) + "x3 input");
  }
  const int h = s / 2;
  const int q = s / 4;
  Cache local;
  Cache& c = cache ? *cache : local;

  const nn::Matrix<T> x = image_to_map<T>(image);
  c.e1_pre = enc1_.forward(x, s, s, &c.input_cols);
  c.e1 = nn::relu<T>(c.e1_pre);
  c.e2_pre = enc2_.forward(nn::avg_pool2<T>(c.e1, s, s), h, h, &c.e2_cols);
  c.e2 = nn::relu<T>(c.e2_pre);
  c.e3_pre = enc3_.forward(nn::avg_pool2<T>(c.e2, h, h), q, q, &c.e3_cols);
  c.e3 = nn::relu<T>(c.e3_pre);
  c.d2_pre = dec2_.forward(concat_channels<T>(nn::upsample2<T>(c.e3, q, q), c.e2), h, h, &c.d2_cols);
  c.d2 = nn::relu<T>(c.d2_pre);
  c.d1_pre = dec1_.forward(concat_channels<T>(nn::upsample2<T>(c.d2, h, h), c.e1), s, s, &c.d1_cols);
  c.d1 = nn::relu<T>(c.d1_pre);
  nn::Matrix<T> y = out_.forward(c.d1);
  if (!y.allFinite()) throw NumericFailure("non-finite autoencoder activation");
  return y;
}

template <class T>
Image BasicAutoencoder<T>::reconstruct(const Image& image) const {
  const nn::Matrix<T> y = forward(image);
  Image out(image.height, image.width, 3);
  for (int yy = 0; yy < image.height; ++yy)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(yy, x, c) = static_cast<float>(y(static_cast<Eigen::Index>(yy) * image.width + x, c));
  return out;
}

template <class T>
double BasicAutoencoder<T>::accumulate_gradients(const Image& image, double scale) {
  const int s = config_.image_side;
  const int h = s / 2;
  const int q = s / 4;
  const int w = config_.base_width;
  Cache c;
  const nn::Matrix<T> y = forward(image, &c);
  const nn::Matrix<T> diff = y - image_to_map<T>(image);
  const double count = static_cast<double>(diff.size());
  const double loss = static_cast<double>(diff.squaredNorm()) / count;

  const nn::Matrix<T> dy = diff * static_cast<T>(2.0 * scale / count);
  nn::Matrix<T> dd1 = nn::relu_backward<T>(c.d1_pre, out_.backward(c.d1, dy));
  nn::Matrix<T> dcat1 = dec1_.backward(c.d1_cols, dd1, s, s);
  nn::Matrix<T> de1 = dcat1.rightCols(w);
  nn::Matrix<T> dd2 = nn::relu_backward<T>(c.d2_pre, nn::upsample2_backward<T>(dcat1.leftCols(2 * w), h, h));
  nn::Matrix<T> dcat2 = dec2_.backward(c.d2_cols, dd2, h, h);
  nn::Matrix<T> de2 = dcat2.rightCols(2 * w);
  nn::Matrix<T> de3 = nn::relu_backward<T>(c.e3_pre, nn::upsample2_backward<T>(dcat2.leftCols(4 * w), q, q));
  de2 += nn::avg_pool2_backward<T>(enc3_.backward(c.e3_cols, de3, q, q), h, h);
  de2 = nn::relu_backward<T>(c.e2_pre, de2);
  de1 += nn::avg_pool2_backward<T>(enc2_.backward(c.e2_cols, de2, h, h), s, s);
  de1 = nn::relu_backward<T>(c.e1_pre, de1);
  enc1_.backward(c.input_cols, de1, s, s);
  return loss;
}

template class BasicAutoencoder<float>;
template class BasicAutoencoder<double>;

AutoencoderTraining train_autoencoder(const AutoencoderConfig& config, const nn::TrainSchedule& schedule,
                                      SampleStream& real_stream, const TrainProgress& progress) {
  config.validate();
  schedule.validate();
  AutoencoderTraining run{Autoencoder(config), {}};
  const auto params = run.model.parameters();
  nn::AdamW<float> optimizer(schedule.weight_decay);
  for (int step = 0; step < schedule.total_steps; ++step) {
    const std::vector<ImageSample> batch = real_stream.next_batch();
    if (batch.empty()) throw InvalidInput("train_autoencoder: empty batch at step " + std::to_string(step));
    for (const ImageSample& s : batch) {
      if (s.label != Label::kReal) {
        throw RealOnlyViolation("train_autoencoder: FAKE sample '" + s.sample_id + "' at step " +
                                std::to_string(step) + "; the autoencoder trains on REAL images only");
      }
    }
    nn::zero_grads(params);
    const double scale = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const ImageSample& s : batch) loss += run.model.accumulate_gradients(s.pixels, scale);
    loss *= scale;
    if (!std::isfinite(loss)) {
      throw NumericFailure("train_autoencoder: non-finite loss at step " + std::to_string(step));
    }
    optimizer.step(params, schedule.lr_at(step));
    run.loss_trace.push_back(loss);
    if (progress) progress(step, loss);
  }
  return run;
}

nn::Checkpoint make_checkpoint(const Autoencoder& model, const nn::TrainSchedule& schedule, long step) {
  nn::Checkpoint ckpt;
  ckpt.role = "autoencoder";
  ckpt.config = model.config();
  ckpt.schedule = schedule;
  ckpt.step = step;
  ckpt.tensors = nn::to_records(const_cast<Autoencoder&>(model).parameters());
  return ckpt;
}

Autoencoder autoencoder_from_checkpoint(const nn::Checkpoint& checkpoint) {
  if (checkpoint.role != "autoencoder") {
    throw InvalidInput("checkpoint role is '" + checkpoint.role + "', expected 'autoencoder'");
  }
  Autoencoder model(checkpoint.config.get<AutoencoderConfig>());
  nn::from_records(checkpoint.tensors, model.parameters());
  return model;
}

}  // namespace rffr
