#pragma once

#include <string>

#include "rffr/nn/layers.hpp"

namespace rffr::nn {

// Feature maps are (height*width) x channels matrices, pixels in row-major order.

/// 3x3 convolution, stride 1, zero padding 1, via im2col.
template <class T>
class Conv3x3 {
 public:
  Conv3x3() = default;
  Conv3x3(int in_channels, int out_channels) : linear(9 * in_channels, out_channels), in_(in_channels) {}

  void init(Rng& rng) {
    // He-uniform for ReLU networks.
    const double bound = std::sqrt(6.0 / (9.0 * in_));
    for (Eigen::Index i = 0; i < linear.weight.value.size(); ++i) {
      linear.weight.value.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
    }
    linear.bias.value.setZero();
  }

  static Matrix<T> im2col(const Matrix<T>& x, int height, int width) {
    const auto channels = x.cols();
    Matrix<T> cols = Matrix<T>::Zero(static_cast<Eigen::Index>(height) * width, 9 * channels);
    for (int y = 0; y < height; ++y)
      for (int xx = 0; xx < width; ++xx) {
        const Eigen::Index row = static_cast<Eigen::Index>(y) * width + xx;
        for (int dy = -1; dy <= 1; ++dy) {
          const int sy = y + dy;
          if (sy < 0 || sy >= height) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int sx = xx + dx;
            if (sx < 0 || sx >= width) continue;
            const int tap = (dy + 1) * 3 + (dx + 1);
            cols.row(row).segment(tap * channels, channels) =
                x.row(static_cast<Eigen::Index>(sy) * width + sx);
          }
        }
      }
    return cols;
  }

  static Matrix<T> col2im(const Matrix<T>& dcols, int height, int width, Eigen::Index channels) {
    Matrix<T> grad = Matrix<T>::Zero(static_cast<Eigen::Index>(height) * width, channels);
    for (int y = 0; y < height; ++y)
      for (int xx = 0; xx < width; ++xx) {
        const Eigen::Index row = static_cast<Eigen::Index>(y) * width + xx;
        for (int dy = -1; dy <= 1; ++dy) {
          const int sy = y + dy;
          if (sy < 0 || sy >= height) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int sx = xx + dx;
            if (sx < 0 || sx >= width) continue;
            const int tap = (dy + 1) * 3 + (dx + 1);
            grad.row(static_cast<Eigen::Index>(sy) * width + sx) +=
                dcols.row(row).segment(tap * channels, channels);
          }
        }
      }
    return grad;
  }

  /// Returns the output map; `cols` receives the im2col buffer for backward.
  Matrix<T> forward(const Matrix<T>& x, int height, int width, Matrix<T>* cols = nullptr) const {
    Matrix<T> c = im2col(x, height, width);
    Matrix<T> y = linear.forward(c);
    if (cols) *cols = std::move(c);
    return y;
  }

  Matrix<T> backward(const Matrix<T>& cols, const Matrix<T>& dy, int height, int width) {
    Matrix<T> dcols = linear.backward(cols, dy);
    return col2im(dcols, height, width, in_);
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    linear.visit(prefix, f);
  }

  Linear<T> linear;

 private:
  int in_ = 0;
};

template <class T>
Matrix<T> relu(const Matrix<T>& x) {
  return x.cwiseMax(static_cast<T>(0));
}

template <class T>
Matrix<T> relu_backward(const Matrix<T>& x, const Matrix<T>& dy) {
  return (x.array() > static_cast<T>(0)).select(dy, static_cast<T>(0));
}

/// 2x2 average pooling; height and width must be even.
template <class T>
Matrix<T> avg_pool2(const Matrix<T>& x, int height, int width) {
  const int h = height / 2;
  const int w = width / 2;
  Matrix<T> y(static_cast<Eigen::Index>(h) * w, x.cols());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const auto src = [&](int dy, int dx) {
        return x.row(static_cast<Eigen::Index>(2 * r + dy) * width + 2 * c + dx);
      };
      y.row(static_cast<Eigen::Index>(r) * w + c) =
          (src(0, 0) + src(0, 1) + src(1, 0) + src(1, 1)) * static_cast<T>(0.25);
    }
  return y;
}

template <class T>
Matrix<T> avg_pool2_backward(const Matrix<T>& dy, int height, int width) {
  const int w = width / 2;
  Matrix<T> dx(static_cast<Eigen::Index>(height) * width, dy.cols());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      dx.row(static_cast<Eigen::Index>(y) * width + x) =
          dy.row(static_cast<Eigen::Index>(y / 2) * w + x / 2) * static_cast<T>(0.25);
    }
  return dx;
}

/// Nearest-neighbour 2x upsampling from (height, width).
template <class T>
Matrix<T> upsample2(const Matrix<T>& x, int height, int width) {
  Matrix<T> y(static_cast<Eigen::Index>(4) * height * width, x.cols());
  const int w2 = 2 * width;
  for (int r = 0; r < 2 * height; ++r)
    for (int c = 0; c < w2; ++c) {
      y.row(static_cast<Eigen::Index>(r) * w2 + c) = x.row(static_cast<Eigen::Index>(r / 2) * width + c / 2);
    }
  return y;
}

template <class T>
Matrix<T> upsample2_backward(const Matrix<T>& dy, int height, int width) {
  Matrix<T> dx = Matrix<T>::Zero(static_cast<Eigen::Index>(height) * width, dy.cols());
  const int w2 = 2 * width;
  for (int r = 0; r < 2 * height; ++r)
    for (int c = 0; c < w2; ++c) {
      dx.row(static_cast<Eigen::Index>(r / 2) * width + c / 2) += dy.row(static_cast<Eigen::Index>(r) * w2 + c);
    }
  return dx;
}

}  // namespace rffr::nn
