// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance 1 4 12     a subset
//
// Exit status is 0 only if every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "desk.hpp"
#include "rffr/cli/app.hpp"
#include "rffr/common/error.hpp"
#include "rffr/eval/metrics.hpp"
#include "rffr/eval/report.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace rffr;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

using desk::Outcome;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// ---- 1 ----------------------------------------------------------------------

Outcome geometry() {
  const auto t0 = Clock::now();
  int checked = 0;
  int rejected = 0;
  std::string failure;
  for (const int side : {48, 224}) {
    for (const int k : {1, 2, 3, 4, 6}) {
      const std::string tag = fmt("side=%d k=%d", side, k);
      if (side % k != 0) {
        // A grid that does not tile the image is refused outright.
        try {
          BlockGrid grid(k, side);
          failure = tag + ": non-dividing k accepted";
        } catch (const InvalidInput&) {
          ++rejected;
        }
        continue;
      }
      const BlockGrid grid(k, side);
      const int bs = side / k;
      Rng rng(derive_seed(7, tag));
      Image image(side, side, 3);
      for (float& v : image.data) v = static_cast<float>(rng.uniform());

      const std::vector<Image> blocks = divide(image, grid);
      if (static_cast<int>(blocks.size()) != k * k) failure = tag + ": block count";
      if (!(assemble(blocks, grid) == image)) failure = tag + ": tiling round trip";

      std::vector<int> covered(static_cast<std::size_t>(side * side), 0);
      for (int j = 1; j <= k * k; ++j) {
        const BlockMask mask = make_mask(j, grid);
        if (mask.zero_count() != bs * bs) failure = tag + ": mask zero count";
        for (int y = 0; y < side; ++y)
          for (int x = 0; x < side; ++x) covered[static_cast<std::size_t>(y * side + x)] += mask.at(y, x) == 0;
        // Brute force: the block owning each pixel, by integer division.
        const int r0 = ((j - 1) / k) * bs;
        const int c0 = ((j - 1) % k) * bs;
        if (grid.row_offset(j) != r0 || grid.col_offset(j) != c0) failure = tag + ": offsets";
        const Image& b = blocks[static_cast<std::size_t>(j - 1)];
        for (int y = 0; y < bs; ++y)
          for (int x = 0; x < bs; ++x)
            for (int c = 0; c < 3; ++c)
              if (b.at(y, x, c) != image.at(r0 + y, c0 + x, c)) failure = tag + ": block contents";
      }
      if (std::any_of(covered.begin(), covered.end(), [](int n) { return n != 1; })) failure = tag + ": partition";
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
          if (grid.block_of(x, y) != (y / bs) * k + x / bs + 1) failure = tag + ": block_of";
      ++checked;
    }
  }
  const double t = seconds_since(t0);
  return {failure.empty() && t < 10.0,
          fmt("%d grids checked, %d non-dividing refused%s; %.2fs (limit 10s)", checked, rejected,
              failure.empty() ? "" : (", first failure " + failure).c_str(), t)};
}

// ---- 2 ----------------------------------------------------------------------

Outcome causality() {
  const auto t0 = Clock::now();
  const desk::Setup setup = desk::standard();
  const Inpainter model(setup.inpainter);
  const BlockGrid grid = setup.grid();
  Rng rng(202);
  int identical = 0;
  for (int pair = 0; pair < 5; ++pair) {
    Image image = testing::texture_sample(setup.side, 900 + static_cast<std::uint64_t>(pair)).pixels;
    const int j = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(grid.block_count())));
    const Image reference = model.inpaint(image, grid, j);
    for (int trial = 0; trial < 20; ++trial) {
      Image block = extract_block(image, grid, j);
      for (float& v : block.data) v = static_cast<float>(rng.uniform(-2.0, 3.0));
      place_block(image, grid, j, block);
      identical += model.inpaint(image, grid, j) == reference;
    }
  }
  const double t = seconds_since(t0);
  return {identical == 100 && t < 30.0, fmt("%d/100 bit-identical; %.2fs (limit 30s)", identical, t)};
}

// ---- 3 ----------------------------------------------------------------------

double inpainter_loss(const BasicInpainter<double>& model, const Image& image, const BlockGrid& grid, int j) {
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

Outcome gradients() {
  const auto t0 = Clock::now();
  const BlockGrid grid(2, 16);
  const Image image = testing::texture_sample(16, 5).pixels;

  BasicInpainter<double> inpainter{Inpainter(testing::tiny_inpainter())};
  auto ip = inpainter.parameters();
  const auto ri = testing::check_gradients(
      ip,
      [&] {
        nn::zero_grads(ip);
        return inpainter.accumulate_gradients(image, grid, 3, 1.0);
      },
      [&] { return inpainter_loss(inpainter, image, grid, 3); });

  const BlockGrid dgrid(4, 16);
  Rng sel(8);
  const BlockInput input = generate_training_input(ResidualGenerator::highpass(), image, dgrid, 0.5, {}, sel);
  BasicDetector<double> detector{Detector(testing::tiny_detector())};
  auto dp = detector.parameters();
  const auto rd = testing::check_gradients(
      dp,
      [&] {
        nn::zero_grads(dp);
        return detector.accumulate_gradients(input, Label::kFake, 1.0);
      },
      [&] { return cls_loss(detector.forward(input), Label::kFake); });

  const double t = seconds_since(t0);
  const double worst = std::max(ri.worst, rd.worst);
  return {worst <= 1e-3 && t < 120.0,
          fmt("inpainter worst %.2e over %zu probes, detector worst %.2e over %zu probes; %.2fs (limit 120s)",
              ri.worst, ri.entries.size(), rd.worst, rd.entries.size(), t)};
}

// ---- 4 ----------------------------------------------------------------------

double pairwise_auc(const ScoreSet& s) {
  long long twice = 0;
  long long pairs = 0;
  for (const ScoreItem& pos : s.items) {
    if (pos.label != Label::kFake) continue;
    for (const ScoreItem& neg : s.items) {
      if (neg.label != Label::kReal) continue;
      twice += pos.score > neg.score ? 2 : (pos.score == neg.score ? 1 : 0);
      ++pairs;
    }
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pairs));
}

Outcome auc_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(4242);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int exact = 0;
  int invariant = 0;
  for (int trial = 0; trial < 50; ++trial) {
    ScoreSet s;
    for (int i = 0; i < 200; ++i) {
      double score = unit(gen);
      // Inject ties by snapping a third of the scores to a coarse lattice.
      if (i % 3 == 0) score = std::round(score * 10.0) / 10.0;
      s.add(score, unit(gen) < 0.45 ? Label::kFake : Label::kReal);
    }
    s.items[0].label = Label::kFake;
    s.items[1].label = Label::kReal;
    const double a = auc(s);
    exact += a == pairwise_auc(s);
    ScoreSet t = s;
    for (ScoreItem& i : t.items) i.score = std::exp(3.0 * i.score) + i.score * i.score * i.score;
    invariant += auc(t) == a;
  }
  const double t = seconds_since(t0);
  return {exact == 50 && invariant == 50 && t < 30.0,
          fmt("%d/50 exact, %d/50 transform-invariant; %.2fs (limit 30s)", exact, invariant, t)};
}

// ---- 5 ----------------------------------------------------------------------

Outcome loss_arithmetic() {
  const double ln2 = cls_loss(Prediction{{0.5, 0.5}}, Label::kFake);
  const double ln2_real = cls_loss(Prediction{{0.5, 0.5}}, Label::kReal);

  struct Case {
    Image a, b;
    double expected;
  };
  std::vector<Case> cases;
  {
    Image a(2, 2, 1, 0.0f);
    Image b = a;
    cases.push_back({a, b, 0.0});
    b.at(0, 0, 0) = 1.0f;
    cases.push_back({a, b, 0.25});
  }
  cases.push_back({Image(4, 4, 3, 0.25f), Image(4, 4, 3, 0.75f), 0.25});
  {
    Image a(1, 2, 2, 0.0f);
    a.data = {0.0f, 0.5f, 1.0f, 0.25f};
    cases.push_back({a, Image(1, 2, 2, 0.0f), (0.0 + 0.25 + 1.0 + 0.0625) / 4.0});
  }
  double worst = 0.0;
  for (const Case& c : cases) worst = std::max(worst, std::abs(rep_loss(c.a, c.b) - c.expected));
  const double err = std::max(std::abs(ln2 - std::log(2.0)), std::abs(ln2_real - std::log(2.0)));
  return {err <= 1e-9 && worst <= 1e-12,
          fmt("|cls_loss - ln2| = %.1e (tol 1e-9), rep_loss worst %.1e over %zu cases (tol 1e-12)", err, worst,
              cases.size())};
}

// ---- 6 ----------------------------------------------------------------------

Outcome selection_statistics() {
  const auto t0 = Clock::now();
  // Inclusion probability given a non-empty draw, p / (1 - (1-p)^16), and the
  // 4-sigma binomial half-width for 20,000 draws.
  constexpr double kExpectation = 0.2525310162925609;
  constexpr double kBand = 0.012288502011321225;
  const BlockGrid grid(4, 64);
  Rng rng(606);
  std::vector<int> hits(16, 0);
  for (int draw = 0; draw < 20000; ++draw)
    for (int j : select_blocks(grid, 0.25, rng).indices) ++hits[static_cast<std::size_t>(j - 1)];
  double worst = 0.0;
  for (int h : hits) worst = std::max(worst, std::abs(h / 20000.0 - kExpectation));

  // Low p makes empty draws common, so the redraw path is exercised.
  int empty = 0;
  long redraws = 0;
  for (int draw = 0; draw < 100000; ++draw) {
    const BlockSelection s = select_blocks(grid, draw % 2 == 0 ? 0.25 : 0.02, rng);
    empty += s.indices.empty();
    redraws += s.redraws;
  }
  const double t = seconds_since(t0);
  return {worst <= kBand && empty == 0 && redraws > 0 && t < 30.0,
          fmt("max |freq - %.4f| = %.4f (band %.4f), %d empty of 1e5 (%ld redraws); %.2fs (limit 30s)", kExpectation,
              worst, kBand, empty, redraws, t)};
}

// ---- 7 ----------------------------------------------------------------------

Outcome permutation() {
  const desk::Setup setup = desk::standard();
  const Detector model(setup.detector);
  const BlockGrid grid = setup.grid();
  Rng rng(707);
  double worst = 0.0;
  for (int c = 0; c < 10; ++c) {
    const Image image = testing::texture_sample(setup.side, 700 + static_cast<std::uint64_t>(c)).pixels;
    const BlockInput input =
        generate_training_input(ResidualGenerator::highpass(), image, grid, 0.5, setup.amp, rng);
    std::vector<std::size_t> order(input.positions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order.begin(), order.end());
    BlockInput permuted = input;
    for (std::size_t i = 0; i < order.size(); ++i) {
      permuted.residual_blocks[i] = input.residual_blocks[order[i]];
      permuted.original_blocks[i] = input.original_blocks[order[i]];
      permuted.positions[i] = input.positions[order[i]];
    }
    worst = std::max(worst, std::abs(model.forward(input).p_fake() - model.forward(permuted).p_fake()));
  }
  return {worst <= 1e-5, fmt("max |dP_fake| = %.2e over 10 cases (tol 1e-5)", worst)};
}

// ---- 8 ----------------------------------------------------------------------

double mean_block_loss(const Inpainter& model, const std::vector<ImageSample>& images, const BlockGrid& grid) {
  double total = 0.0;
  int n = 0;
  for (const ImageSample& s : images)
    for (int j = 1; j <= grid.block_count(); ++j, ++n)
      total += rep_loss(model.inpaint(s.pixels, grid, j), extract_block(s.pixels, grid, j));
  return total / n;
}

Outcome overfit() {
  // Inpainter: 8 REAL textures, every (image, block) pair scored in full.
  const auto t0 = Clock::now();
  const BlockGrid grid(2, 16);
  std::vector<ImageSample> reals;
  for (int i = 0; i < 8; ++i) reals.push_back(testing::texture_sample(16, 80 + static_cast<std::uint64_t>(i)));
  const InpainterConfig ic = testing::tiny_inpainter();
  const double initial = mean_block_loss(Inpainter(ic), reals, grid);
  nn::TrainSchedule is{3e-3, 50, 2000, 8, 0.0};
  int inpaint_steps = -1;
  double inpaint_final = initial;
  {
    BatchIterator stream(reals, 8, 1);
    auto run = train_inpainter(ic, is, stream, grid);
    inpaint_final = mean_block_loss(run.model, reals, grid);
    for (int s = 0; s < is.total_steps; ++s)
      if (run.loss_trace[static_cast<std::size_t>(s)] <= 0.1 * initial) {
        inpaint_steps = s + 1;
        break;
      }
  }
  const double t_inpaint = seconds_since(t0);
  const bool inpaint_ok = inpaint_final <= 0.1 * initial && t_inpaint < 600.0;

  // Detector: 8 REAL/FAKE blend-seam pairs, accuracy on the full block set.
  const auto t1 = Clock::now();
  std::vector<ImageSample> toy;
  for (const SyntheticPair& p : testing::make_pairs(8, ArtifactKind::kBlendSeam, 16, 40)) {
    toy.push_back(p.real);
    toy.push_back(p.fake);
  }
  const BlockGrid dgrid(4, 16);
  ResidualCache cache(ResidualGenerator::highpass(), dgrid, {});
  BatchIterator stream(toy, 16, 2);
  int reached = -1;
  int best_correct = 0;
  DetectorTrainOptions opt;
  opt.p = 1.0;
  opt.hook_every = 10;
  opt.hook = [&](int step, const Detector& m) {
    if (reached > 0) return;
    int correct = 0;
    for (const ImageSample& s : toy) correct += m.forward(cache.test_input(s)).predicted() == s.label;
    best_correct = std::max(best_correct, correct);
    if (correct == 16) reached = step;
  };
  DetectorConfig dc = testing::tiny_detector();
  dc.embed_dim = 16;
  train_detector(dc, nn::TrainSchedule{3e-3, 20, 1000, 16, 0.0}, stream, cache, opt);
  const double t_detect = seconds_since(t1);
  const bool detect_ok = reached > 0 && t_detect < 600.0;

  return {inpaint_ok && detect_ok,
          fmt("inpainter %.4f -> %.4f (%.1f%%, batch loss first under 10%% at step %d) in %.1fs; "
              "detector 100%% train accuracy at step %d (best %d/16) in %.1fs (limits 2000/1000 steps, 600s each)",
              initial, inpaint_final, 100.0 * inpaint_final / initial, inpaint_steps, t_inpaint, reached,
              best_correct, t_detect)};
}

// ---- 12 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string directory_bytes(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const fs::path& f : files) all += f.filename().string() + "\n" + slurp(f);
  return all;
}

Outcome persistence() {
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / "rffr_acceptance_persistence";
  fs::remove_all(root);
  std::vector<std::string> failures;

  // Checkpoints: save, load, save again; bytes and parameter values must agree.
  {
    const Inpainter inpainter(testing::tiny_inpainter());
    const nn::TrainSchedule schedule{1e-3, 2, 10, 4, 0.05};
    nn::save_checkpoint(make_checkpoint(inpainter, schedule, 10, 2), root / "inp_a");
    const Inpainter back = inpainter_from_checkpoint(nn::load_checkpoint(root / "inp_a"));
    nn::save_checkpoint(make_checkpoint(back, schedule, 10, 2), root / "inp_b");
    if (directory_bytes(root / "inp_a") != directory_bytes(root / "inp_b")) failures.push_back("inpainter bytes");
    auto pa = const_cast<Inpainter&>(inpainter).parameters();
    auto pb = const_cast<Inpainter&>(back).parameters();
    for (std::size_t i = 0; i < pa.size(); ++i)
      if (pa[i].param->value != pb[i].param->value) failures.push_back("inpainter tensor " + pa[i].name);

    const Detector detector(testing::tiny_detector());
    nn::save_checkpoint(make_checkpoint(detector, schedule, 10, {{"generator", "mim"}}), root / "det_a");
    const Detector dback = detector_from_checkpoint(nn::load_checkpoint(root / "det_a"));
    nn::save_checkpoint(make_checkpoint(dback, schedule, 10, {{"generator", "mim"}}), root / "det_b");
    if (directory_bytes(root / "det_a") != directory_bytes(root / "det_b")) failures.push_back("detector bytes");
    const Image image = testing::texture_sample(16, 3).pixels;
    const BlockGrid grid(4, 16);
    if (predict(detector, image, ResidualGenerator::highpass(), grid, {}) !=
        predict(dback, image, ResidualGenerator::highpass(), grid, {}))
      failures.push_back("detector prediction");
  }

  // Report: awkward doubles survive text and back.
  {
    EvalReport r;
    r.matrix.push_back({"a", "a", 100.0 / 3.0, true, {}});
    r.matrix.push_back({"a", "b", 0.1 + 0.2, false, {}});
    r.matrix.push_back({"a", "c", std::nullopt, false, "AUC needs at least one FAKE"});
    r.curves["a"]["b"] = {{50, 2.0 / 3.0}, {100, 1e-17}};
    r.selections.push_back({"a", "b", "b", 50, 200.0 / 3.0, 100, 1e-15, 1e-15 - 200.0 / 3.0});
    save_report(r, root / "report.json");
    const EvalReport back = load_report(root / "report.json");
    save_report(back, root / "report2.json");
    if (!(back == r)) failures.push_back("report values");
    if (slurp(root / "report.json") != slurp(root / "report2.json")) failures.push_back("report bytes");
  }

  // End to end: the miniature pipeline twice from one seed.
  std::string first_report;
  for (const char* run : {"e2e_a", "e2e_b"}) {
    const fs::path cfg = root / (std::string(run) + ".json");
    std::ofstream(cfg) << desk::miniature_config(root / run).dump(2);
    for (const char* verb : {"synth-data", "train-rffr", "train-detector", "eval"}) {
      std::ostringstream out, err;
      const int code = cli::run({"--config", cfg.string(), "--seed", "17", verb}, out, err);
      if (code != 0) failures.push_back(std::string(run) + " " + verb + ": " + err.str());
    }
    const std::string bytes = slurp(root / run / "eval" / "report.json");
    if (first_report.empty()) first_report = bytes;
    else if (bytes != first_report || bytes.empty()) failures.push_back("end-to-end report bytes differ");
  }
  fs::remove_all(root);
  const double t = seconds_since(t0);
  return {failures.empty(),
          fmt("checkpoints, report and miniature rerun (%zu report bytes) %s; %.1fs", first_report.size(),
              failures.empty() ? "identical" : ("differ: " + failures.front()).c_str(), t)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "geometry", geometry},
      {2, "causality", causality},
      {3, "gradients", gradients},
      {4, "auc oracle", auc_oracle},
      {5, "loss arithmetic", loss_arithmetic},
      {6, "selection statistics", selection_statistics},
      {7, "permutation invariance", permutation},
      {8, "overfit", overfit},
      {9, "residual contrast", desk::residual_contrast},
      {10, "cross-artifact direction", desk::cross_artifact},
      {11, "validation-free stability", desk::stability},
      {12, "persistence", persistence},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
