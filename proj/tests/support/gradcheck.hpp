#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rffr/common/rng.hpp"
#include "rffr/nn/tensor.hpp"

namespace rffr::testing {

struct GradCheckEntry {
  std::string parameter;
  Eigen::Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst = 0.0;
  std::string worst_parameter;
};

/// Central finite differences against analytic gradients, independently of the
/// backward pass. `analytic` must zero the grads, run forward+backward and
/// return the loss; `loss` must evaluate the loss only. For each parameter
/// group the largest-gradient entry plus `random_per_group` random entries are
/// probed.
inline GradCheckReport check_gradients(const nn::ParameterList<double>& params,
                                       const std::function<double()>& analytic,
                                       const std::function<double()>& loss,
                                       int random_per_group = 3, double h = 1e-4,
                                       std::uint64_t seed = 11) {
  analytic();
  std::vector<nn::Matrix<double>> grads;
  for (const auto& p : params) grads.push_back(p.param->grad);

  Rng rng(seed);
  GradCheckReport report;
  for (std::size_t g = 0; g < params.size(); ++g) {
    nn::Matrix<double>& value = params[g].param->value;
    const nn::Matrix<double>& grad = grads[g];
    std::vector<Eigen::Index> probe;
    Eigen::Index row = 0;
    Eigen::Index col = 0;
    grad.cwiseAbs().maxCoeff(&row, &col);
    probe.push_back(row * grad.cols() + col);
    for (int r = 0; r < random_per_group; ++r) {
      probe.push_back(static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(value.size()))));
    }
    for (const Eigen::Index i : probe) {
      const double saved = value.data()[i];
      value.data()[i] = saved + h;
      const double up = loss();
      value.data()[i] = saved - h;
      const double down = loss();
      value.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grad.data()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      report.entries.push_back({params[g].name, i, a, numeric, rel});
      if (rel > report.worst) {
        report.worst = rel;
        report.worst_parameter = params[g].name;
      }
    }
  }
  return report;
}

}  // namespace rffr::testing
