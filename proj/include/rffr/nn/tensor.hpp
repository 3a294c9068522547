#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rffr/common/rng.hpp"

namespace rffr::nn {

/// Row-major dynamic matrix; rows are tokens, columns are features.
template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
using ColumnVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Trainable array with its accumulated gradient.
template <class T>
struct Parameter {
  Matrix<T> value;
  Matrix<T> grad;
  bool decay = false;  // subject to decoupled weight decay

  Parameter() = default;
  Parameter(Eigen::Index rows, Eigen::Index cols, bool decay_ = false)
      : value(Matrix<T>::Zero(rows, cols)), grad(Matrix<T>::Zero(rows, cols)), decay(decay_) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <class T>
struct NamedParameter {
  std::string name;
  Parameter<T>* param;
};

template <class T>
using ParameterList = std::vector<NamedParameter<T>>;

template <class T>
void zero_grads(const ParameterList<T>& params) {
  for (const auto& p : params) p.param->zero_grad();
}

template <class T>
void fill_truncated_normal(Matrix<T>& m, double std, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.truncated_normal(std));
}

template <class T>
void fill_xavier_uniform(Matrix<T>& m, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
}

/// 2D sine-cosine table, one row per grid cell (row-major), `dim` % 4 == 0
/// uses the usual half-row/half-column split; other widths fall back to a
/// flattened 1D encoding.
template <class T>
Matrix<T> sincos_table(int grid_side, int dim) {
  Matrix<T> table(grid_side * grid_side, dim);
  const auto encode = [](double pos, int i, int width) {
    const double omega = 1.0 / std::pow(10000.0, (2.0 * (i / 2)) / width);
    return (i % 2 == 0) ? std::sin(pos * omega) : std::cos(pos * omega);
  };
  for (int r = 0; r < grid_side; ++r)
    for (int c = 0; c < grid_side; ++c) {
      const int row = r * grid_side + c;
      if (dim % 4 == 0) {
        const int half = dim / 2;
        for (int i = 0; i < half; ++i) {
          table(row, i) = static_cast<T>(encode(r, i, half));
          table(row, half + i) = static_cast<T>(encode(c, i, half));
        }
      } else {
        for (int i = 0; i < dim; ++i) table(row, i) = static_cast<T>(encode(row, i, dim));
      }
    }
  return table;
}

}  // namespace rffr::nn
