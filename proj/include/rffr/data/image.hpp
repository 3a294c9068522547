#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace rffr {

/// Dense HWC float image. Also used for blocks and residual maps.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c = 3, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float& at(int y, int x, int c) { return data[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data[index(y, x, c)]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Image& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }
  bool operator==(const Image&) const = default;
};

enum class Label { kReal = 0, kFake = 1 };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

/// One square RGB training or test image with its annotations.
struct ImageSample {
  Image pixels;
  Label label = Label::kReal;
  std::string domain_tag;
  std::string sample_id;
};

/// Checks the sample invariants: square, 3 channels, values in [0,1], tag set.
void validate_sample(const ImageSample& sample);

/// Copy of `image` with every value clamped to [lo, hi].
Image clamped(Image image, float lo, float hi);

/// Mean absolute value over the rectangle [y0,y0+h) x [x0,x0+w), all channels.
double mean_abs(const Image& image, int y0, int x0, int h, int w);

}  // namespace rffr
