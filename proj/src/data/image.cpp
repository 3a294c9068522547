#include "rffr/data/image.hpp"

#include <algorithm>
#include <cmath>

#include "rffr/common/error.hpp"

namespace rffr {

std::string_view to_string(Label label) { return label == Label::kReal ? "real" : "fake"; }

Label parse_label(std::string_view text) {
  if (text == "real") return Label::kReal;
  if (text == "fake") return Label::kFake;
  throw InvalidInput("unknown label '" + std::string(text) + "' (expected real|fake)");
}

void validate_sample(const ImageSample& sample) {
  const Image& px = sample.pixels;
  if (px.height != px.width || px.height <= 0) {
    throw InvalidInput("sample '" + sample.sample_id + "' is not square (" +
                       std::to_string(px.height) + "x" + std::to_string(px.width) + ")");
  }
  if (px.channels != 3) throw InvalidInput("sample '" + sample.sample_id + "' is not RGB");
  if (px.data.size() != px.index(px.height - 1, px.width - 1, 2) + 1) {
    throw InvalidInput("sample '" + sample.sample_id + "' has inconsistent pixel storage");
  }
  for (const float v : px.data) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw InvalidInput("sample '" + sample.sample_id + "' has a pixel outside [0,1]");
    }
  }
  if (sample.domain_tag.empty()) {
    throw InvalidInput("sample '" + sample.sample_id + "' has an empty domain tag");
  }
}

Image clamped(Image image, float lo, float hi) {
  for (float& v : image.data) v = std::clamp(v, lo, hi);
  return image;
}

double mean_abs(const Image& image, int y0, int x0, int h, int w) {
  double total = 0.0;
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x)
      for (int c = 0; c < image.channels; ++c) total += std::abs(image.at(y, x, c));
  return total / (static_cast<double>(h) * w * image.channels);
}

}  // namespace rffr
