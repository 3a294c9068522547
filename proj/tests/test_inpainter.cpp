#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "rffr/common/error.hpp"
#include "rffr/inpainter/inpainter.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace rffr;
using testing::texture_sample;
using testing::tiny_inpainter;

namespace {

Image texture(int side, std::uint64_t seed) { return texture_sample(side, seed).pixels; }

// rep_loss evaluated in double straight from the raw prediction.
double block_loss(const BasicInpainter<double>& model, const Image& image, const BlockGrid& grid, int j) {
  const auto pred = model.predict(image, grid, j);
  const Image target = extract_block(image, grid, j);
  const int ps = model.config().patch_side;
  const int per_block = grid.block_side() / ps;
  double total = 0.0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    const int y0 = static_cast<int>(r / per_block) * ps;
    const int x0 = static_cast<int>(r % per_block) * ps;
    Eigen::Index col = 0;
    for (int y = 0; y < ps; ++y)
      for (int x = 0; x < ps; ++x)
        for (int c = 0; c < 3; ++c) {
          const double d = pred(r, col++) - target.at(y0 + y, x0 + x, c);
          total += d * d;
        }
  }
  return total / static_cast<double>(pred.size());
}

}  // namespace

TEST_CASE("rep_loss hand cases") {
  Image a(2, 2, 1, 0.0f);
  Image b = a;
  CHECK(rep_loss(a, b) == 0.0);
  b.at(0, 0, 0) = 1.0f;
  CHECK(rep_loss(a, b) == doctest::Approx(0.25).epsilon(1e-12));

  Image base(4, 4, 3, 0.3f);
  Image shifted = base;
  for (float& v : shifted.data) v += 0.1f;
  CHECK(rep_loss(shifted, base) == doctest::Approx(0.01).epsilon(1e-6));

  CHECK_THROWS_AS(rep_loss(Image(2, 2, 1), Image(2, 3, 1)), InvalidInput);
}

TEST_CASE("config validation") {
  InpainterConfig c = tiny_inpainter();
  CHECK_NOTHROW(c.validate());
  c.encoder_heads = 3;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = tiny_inpainter();
  c.patch_side = 5;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  // Block side 4 is fine for patch 4; block side 2 is not.
  c = tiny_inpainter();
  CHECK_NOTHROW(c.check_grid(BlockGrid(4, 16)));
  CHECK_THROWS_AS(c.check_grid(BlockGrid(8, 16)), InvalidInput);
  CHECK_THROWS_AS(c.check_grid(BlockGrid(2, 32)), InvalidInput);
}

TEST_CASE("positional tables cover every patch") {
  Inpainter model(tiny_inpainter());
  for (const auto& p : model.parameters()) {
    if (p.name == "encoder_pos" || p.name == "decoder_pos") CHECK(p.param->value.rows() == 16);
  }
}

TEST_CASE("inpaint shape, determinism and mask overload") {
  Inpainter model(tiny_inpainter());
  const BlockGrid grid(2, 16);
  const Image image = texture(16, 1);
  const Image a = model.inpaint(image, grid, 2);
  CHECK(a.height == 8);
  CHECK(a.width == 8);
  CHECK(a.channels == 3);
  for (float v : a.data) CHECK(std::isfinite(v));
  CHECK(model.inpaint(image, grid, 2) == a);
  CHECK(model.inpaint(image, make_mask(2, grid)) == a);
  CHECK_THROWS_AS(model.inpaint(texture(32, 1), BlockGrid(2, 32), 1), InvalidInput);
  CHECK_THROWS_AS(model.inpaint(image, grid, 5), InvalidInput);
}

TEST_CASE("masked contents never reach the output") {
  Inpainter model(tiny_inpainter());
  const BlockGrid grid(2, 16);
  Rng rng(21);
  for (int j = 1; j <= 4; ++j) {
    Image image = texture(16, 30 + static_cast<std::uint64_t>(j));
    const Image reference = model.inpaint(image, grid, j);
    for (int trial = 0; trial < 5; ++trial) {
      Image block = extract_block(image, grid, j);
      for (float& v : block.data) v = static_cast<float>(rng.uniform());
      place_block(image, grid, j, block);
      CHECK(model.inpaint(image, grid, j) == reference);
    }
  }
}

TEST_CASE("reconstruct_full matches a manual block loop") {
  Inpainter model(tiny_inpainter());
  const Image image = texture(16, 4);
  const BlockGrid grid(2, 16);
  Image manual(16, 16, 3, 0.0f);
  for (int j = 1; j <= grid.block_count(); ++j) {
    place_block(manual, grid, j, model.inpaint(image, make_mask(j, grid)));
  }
  CHECK(reconstruct_full(model, image, grid) == clamped(manual, 0.0f, 1.0f));

  const BlockGrid whole(1, 16);
  CHECK(reconstruct_full(model, image, whole) == clamped(model.inpaint(image, whole, 1), 0.0f, 1.0f));
}

TEST_CASE("inpainter gradients match finite differences") {
  BasicInpainter<double> model{BasicInpainter<float>(tiny_inpainter())};
  const BlockGrid grid(2, 16);
  const Image image = texture(16, 5);
  const int j = 3;
  auto params = model.parameters();
  const auto report = testing::check_gradients(
      params,
      [&] {
        nn::zero_grads(params);
        return model.accumulate_gradients(image, grid, j, 1.0);
      },
      [&] { return block_loss(model, image, grid, j); });
  CHECK_MESSAGE(report.worst <= 1e-3, "worst relative error at ", report.worst_parameter);
  CHECK(report.entries.size() > 40);
}

TEST_CASE("trainer refuses FAKE samples before updating") {
  std::vector<ImageSample> samples{texture_sample(16, 1), texture_sample(16, 2, Label::kFake)};
  testing::RecordingStream stream(samples, 2);
  nn::TrainSchedule schedule;
  schedule.total_steps = 3;
  schedule.base_lr = 1e-3;
  CHECK_THROWS_AS(train_inpainter(tiny_inpainter(), schedule, stream, BlockGrid(2, 16)), RealOnlyViolation);
}

TEST_CASE("trainer consumes only REAL samples and is seeded") {
  std::vector<ImageSample> samples;
  for (std::uint64_t s = 0; s < 4; ++s) samples.push_back(texture_sample(16, s));
  nn::TrainSchedule schedule;
  schedule.total_steps = 20;
  schedule.warmup_steps = 2;
  schedule.base_lr = 1e-3;
  schedule.batch_size = 2;

  testing::RecordingStream first(samples, 2);
  const auto a = train_inpainter(tiny_inpainter(), schedule, first, BlockGrid(2, 16));
  CHECK(a.loss_trace.size() == 20);
  CHECK(first.served().size() == 40);
  for (Label l : first.served()) CHECK(l == Label::kReal);

  testing::RecordingStream second(samples, 2);
  const auto b = train_inpainter(tiny_inpainter(), schedule, second, BlockGrid(2, 16));
  CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const auto dir = std::filesystem::temp_directory_path() / "rffr_test_inpainter_ckpt";
  std::filesystem::remove_all(dir);
  Inpainter model(tiny_inpainter());
  nn::TrainSchedule schedule;
  schedule.total_steps = 7;
  save_checkpoint(make_checkpoint(model, schedule, 7, 2), dir);
  const nn::Checkpoint loaded = nn::load_checkpoint(dir);
  CHECK(loaded.role == "inpainter");
  CHECK(loaded.step == 7);
  CHECK(loaded.schedule.get<nn::TrainSchedule>() == schedule);
  Inpainter restored = inpainter_from_checkpoint(loaded);
  CHECK(restored.config() == model.config());
  const auto pa = model.parameters();
  const auto pb = restored.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].param->value == pb[i].param->value);
  const Image image = texture(16, 8);
  CHECK(restored.inpaint(image, BlockGrid(2, 16), 1) == model.inpaint(image, BlockGrid(2, 16), 1));
  std::filesystem::remove_all(dir);
}

TEST_CASE("overfit loss trends down over the second half") {
  const BlockGrid grid(2, 16);
  std::vector<ImageSample> reals;
  for (int i = 0; i < 8; ++i) reals.push_back(texture_sample(16, 80 + static_cast<std::uint64_t>(i)));
  BatchIterator stream(reals, 8, 1);
  const auto run = train_inpainter(tiny_inpainter(), nn::TrainSchedule{3e-3, 50, 2000, 8, 0.0}, stream, grid);
  // 100-step moving average sampled at window boundaries.
  std::vector<double> windows;
  for (std::size_t start = 1000; start + 100 <= run.loss_trace.size(); start += 100) {
    double sum = 0.0;
    for (std::size_t i = start; i < start + 100; ++i) sum += run.loss_trace[i];
    windows.push_back(sum / 100.0);
  }
  REQUIRE(windows.size() == 10);
  for (std::size_t i = 1; i < windows.size(); ++i) CHECK(windows[i] <= windows[i - 1]);
  CHECK(windows.back() < 0.1 * run.loss_trace.front());
}
