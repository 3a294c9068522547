#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rffr/detector/detector.hpp"
#include "rffr/inpainter/inpainter.hpp"

namespace rffr::desk {

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// Desk-scale models: 64 px images, 4x4 blocks of 16 px, 8 px patches.
struct Setup {
  int side = 64;
  int k = 4;
  InpainterConfig inpainter;
  nn::TrainSchedule inpainter_schedule;
  int inpainter_images = 1024;
  DetectorConfig detector;
  nn::TrainSchedule detector_schedule;
  AmplificationConfig amp;
  double p = 0.25;

  BlockGrid grid() const { return BlockGrid(k, side); }
};

Setup standard();

/// Small end-to-end config for the CLI: 16 px, two domains of 10 pairs.
nlohmann::json miniature_config(const std::filesystem::path& out);

Outcome residual_contrast();
Outcome cross_artifact();
Outcome stability();

}  // namespace rffr::desk
