#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "rffr/common/error.hpp"
#include "rffr/residual/autoencoder.hpp"
#include "rffr/residual/residual.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace rffr;
using testing::texture_sample;

namespace {

// Conditional-on-non-empty inclusion probability at p = 0.25 over 16 blocks,
// p / (1 - (1-p)^16), and the 4-sigma binomial half-width for 20,000 draws.
constexpr double kSelectionExpectation = 0.2525310162925609;
constexpr double kSelectionBand = 0.012288502011321225;

Image filled(int side, float v) { return Image(side, side, 3, v); }

// Direct same-size convolution with reflect-101 borders.
Image direct_highpass(const Image& img, const AmplificationConfig& amp) {
  const int k[3][3] = {{0, -1, 0}, {-1, 4, -1}, {0, -1, 0}};
  const auto reflect = [](int i, int n) { return i < 0 ? -i : (i >= n ? 2 * n - 2 - i : i); };
  Image out(img.height, img.width, 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            s += k[dy + 1][dx + 1] * img.at(reflect(y + dy, img.height), reflect(x + dx, img.width), c);
        out.at(y, x, c) = static_cast<float>(std::clamp(amp.alpha * s, amp.clamp_low, amp.clamp_high));
      }
  return out;
}

}  // namespace

TEST_CASE("residual arithmetic, clamp and sign") {
  const AmplificationConfig amp;
  CHECK(amp.alpha == 4.0);
  const Image b = filled(4, 0.2f);
  const Image r0 = residual_block(b, b, amp);
  for (float v : r0.data) CHECK(v == 0.0f);

  const Image r = residual_block(filled(4, 0.7f), b, amp);
  for (float v : r.data) CHECK(v == 1.0f);

  // Reconstruction brighter than the original gives a positive residual.
  const Image small = residual_block(filled(4, 0.25f), b, amp);
  for (float v : small.data) CHECK(v == doctest::Approx(0.2).epsilon(1e-5));
  const Image flipped = residual_block(b, filled(4, 0.25f), amp);
  for (float v : flipped.data) CHECK(v == doctest::Approx(-0.2).epsilon(1e-5));

  CHECK_THROWS_AS(residual_block(filled(4, 0.f), filled(2, 0.f), amp), InvalidInput);
  AmplificationConfig bad;
  bad.clamp_low = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("amplification is linear where nothing clamps") {
  Rng rng(2);
  Image rec(6, 6, 3);
  Image orig(6, 6, 3);
  for (std::size_t i = 0; i < rec.data.size(); ++i) {
    orig.data[i] = static_cast<float>(rng.uniform());
    rec.data[i] = orig.data[i] + static_cast<float>(rng.uniform(-0.2, 0.2));
  }
  AmplificationConfig unit;
  unit.alpha = 1.0;
  const Image r4 = residual_block(rec, orig, AmplificationConfig{});
  const Image r1 = residual_block(rec, orig, unit);
  for (std::size_t i = 0; i < r4.data.size(); ++i) {
    if (std::abs(r4.data[i]) < 1.0f) CHECK(r4.data[i] == doctest::Approx(4.0 * r1.data[i]).epsilon(1e-5));
  }
}

TEST_CASE("selection basics") {
  const BlockGrid grid(4, 64);
  Rng rng(1);
  const BlockSelection all = select_blocks(grid, 1.0, rng);
  CHECK(all.indices.size() == 16);
  CHECK(all.indices == all_blocks(grid).indices);
  CHECK_THROWS_AS(select_blocks(grid, 0.0, rng), InvalidInput);
  CHECK_THROWS_AS(select_blocks(grid, 1.5, rng), InvalidInput);

  Rng a(9);
  Rng b(9);
  for (int i = 0; i < 50; ++i) CHECK(select_blocks(grid, 0.25, a).indices == select_blocks(grid, 0.25, b).indices);
}

TEST_CASE("selection frequencies sit in the conditional binomial band") {
  // Recompute the expectation with an unrelated generator first.
  std::mt19937_64 gen(12345);
  std::bernoulli_distribution coin(0.25);
  long kept = 0;
  long chosen = 0;
  for (int draw = 0; draw < 200000; ++draw) {
    int count = 0;
    for (int b = 0; b < 16; ++b) count += coin(gen);
    if (count == 0) continue;
    ++kept;
    chosen += count;
  }
  const double independent = static_cast<double>(chosen) / (16.0 * static_cast<double>(kept));
  CHECK(std::abs(independent - kSelectionExpectation) < 0.003);

  const BlockGrid grid(4, 64);
  Rng rng(2024);
  std::vector<int> hits(16, 0);
  for (int draw = 0; draw < 20000; ++draw) {
    const BlockSelection s = select_blocks(grid, 0.25, rng);
    REQUIRE(!s.indices.empty());
    for (std::size_t i = 1; i < s.indices.size(); ++i) CHECK(s.indices[i - 1] < s.indices[i]);
    for (int j : s.indices) ++hits[static_cast<std::size_t>(j - 1)];
  }
  for (int h : hits) CHECK(std::abs(h / 20000.0 - kSelectionExpectation) <= kSelectionBand);
}

TEST_CASE("highpass agrees with a direct convolution") {
  const Image img = texture_sample(16, 4).pixels;
  const AmplificationConfig amp;
  const Image fast = highpass_map(img, laplacian_kernel(), amp);
  const Image slow = direct_highpass(img, amp);
  for (std::size_t i = 0; i < fast.data.size(); ++i) CHECK(fast.data[i] == doctest::Approx(slow.data[i]).epsilon(1e-5));

  for (float v : highpass_map(filled(16, 0.4f), laplacian_kernel(), amp).data) CHECK(v == 0.0f);

  Image impulse = filled(16, 0.0f);
  impulse.at(6, 6, 0) = 0.1f;
  AmplificationConfig unit;
  unit.alpha = 1.0;
  const Image resp = highpass_map(impulse, laplacian_kernel(), unit);
  CHECK(resp.at(6, 6, 0) == doctest::Approx(0.4f));
  CHECK(resp.at(5, 6, 0) == doctest::Approx(-0.1f));
  CHECK(resp.at(6, 7, 0) == doctest::Approx(-0.1f));
  CHECK(resp.at(5, 5, 0) == 0.0f);
  CHECK(resp.at(6, 6, 1) == 0.0f);

  const auto blocks = highpass_residual(img, BlockGrid(2, 16));
  CHECK(assemble(blocks, BlockGrid(2, 16)) == fast);
}

TEST_CASE("full residual equals the per-block loop") {
  const BlockGrid grid(2, 16);
  auto model = std::make_shared<const Inpainter>(testing::tiny_inpainter());
  const ResidualGenerator mim = ResidualGenerator::mim(model);
  const Image img = texture_sample(16, 5).pixels;
  const AmplificationConfig amp;
  Image manual(16, 16, 3);
  for (int j = 1; j <= 4; ++j) {
    const Image rec = model->inpaint(img, grid, j);
    place_block(manual, grid, j, residual_block(rec, extract_block(img, grid, j), amp));
    CHECK(mim.block_residual(img, grid, j, amp) == extract_block(manual, grid, j));
  }
  const Image full = generate_full_residual(mim, img, grid, amp);
  CHECK(full == manual);
  CHECK(mim.forward_passes(grid) == 4);
  CHECK(ResidualGenerator::highpass().forward_passes(grid) == 0);

  // Training inputs cut from the same map agree with the per-block generator.
  Rng rng(3);
  const BlockInput in = generate_training_input(mim, img, grid, 0.5, amp, rng);
  REQUIRE(in.residual_blocks.size() == in.selection.indices.size());
  for (std::size_t i = 0; i < in.positions.size(); ++i) {
    const int j = in.selection.indices[i];
    CHECK(in.positions[i].index == j);
    CHECK(in.positions[i].row_offset == grid.row_offset(j));
    CHECK(in.residual_blocks[i] == extract_block(full, grid, j));
    CHECK(in.original_blocks[i] == extract_block(img, grid, j));
  }

  ResidualCache cache(mim, grid, amp);
  ImageSample sample{img, Label::kReal, "t", "s"};
  Rng r1(8);
  Rng r2(8);
  const BlockInput cached = cache.training_input(sample, 0.5, r1);
  const BlockInput fresh = generate_training_input(mim, img, grid, 0.5, amp, r2);
  CHECK(cached.selection.indices == fresh.selection.indices);
  CHECK(cached.residual_blocks == fresh.residual_blocks);
  CHECK(cache.size() == 1);
  CHECK(cache.test_input(sample).residual_blocks.size() == 4);
  CHECK(cache.size() == 1);
}

TEST_CASE("NONE generator yields originals only") {
  const BlockGrid grid(2, 16);
  const Image img = texture_sample(16, 6).pixels;
  Rng rng(4);
  const BlockInput in = generate_training_input(ResidualGenerator::none(), img, grid, 1.0, {}, rng);
  CHECK(in.residual_blocks.empty());
  CHECK(in.original_blocks.size() == 4);
  CHECK(ResidualGenerator::none().forward_passes(grid) == 0);
}

TEST_CASE("autoencoder gradients match finite differences") {
  AutoencoderConfig config;
  config.image_side = 8;
  config.base_width = 2;
  config.rng_seed = 5;
  BasicAutoencoder<double> model{Autoencoder(config)};
  const Image img = texture_sample(8, 2).pixels;
  auto params = model.parameters();
  const auto mse = [&] {
    const nn::Matrix<double> out = model.forward(img);
    double s = 0.0;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      const double d = out.data()[i] - img.data[static_cast<std::size_t>(i)];
      s += d * d;
    }
    return s / static_cast<double>(out.size());
  };
  const auto report = testing::check_gradients(
      params,
      [&] {
        nn::zero_grads(params);
        return model.accumulate_gradients(img, 1.0);
      },
      mse);
  CHECK_MESSAGE(report.worst <= 1e-3, "worst relative error at ", report.worst_parameter);
}

TEST_CASE("autoencoder residual is zero for an exact reconstruction") {
  AutoencoderConfig config;
  config.image_side = 16;
  config.base_width = 2;
  auto model = std::make_shared<Autoencoder>(config);
  // A zero output layer and bias equal to a constant image reproduce that image.
  for (const auto& p : model->parameters()) {
    if (p.name.rfind("out.", 0) == 0) p.param->value.setZero();
    if (p.name == "out.bias") p.param->value.setConstant(0.5f);
  }
  const Image img = filled(16, 0.5f);
  const auto blocks = ae_residual(*model, img, BlockGrid(2, 16), {});
  for (const Image& b : blocks)
    for (float v : b.data) CHECK(v == 0.0f);
  CHECK(ResidualGenerator::autoencoder(model).forward_passes(BlockGrid(2, 16)) == 1);
}

TEST_CASE("autoencoder trainer is REAL-only") {
  AutoencoderConfig config;
  config.image_side = 16;
  config.base_width = 2;
  nn::TrainSchedule schedule;
  schedule.total_steps = 2;
  schedule.base_lr = 1e-3;
  testing::RecordingStream fakes({texture_sample(16, 1, Label::kFake)}, 1);
  CHECK_THROWS_AS(train_autoencoder(config, schedule, fakes), RealOnlyViolation);
  testing::RecordingStream reals({texture_sample(16, 1)}, 1);
  const auto run = train_autoencoder(config, schedule, reals);
  CHECK(run.loss_trace.size() == 2);
}

TEST_CASE("generator kind names") {
  CHECK(parse_generator_kind("mim") == GeneratorKind::kMim);
  CHECK(parse_generator_kind("highpass") == GeneratorKind::kHighpass);
  CHECK(to_string(GeneratorKind::kNone) == "none");
  CHECK_THROWS_AS(parse_generator_kind("sobel"), InvalidInput);
}
