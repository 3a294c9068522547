#pragma once

#include <cmath>
#include <vector>

#include <json.hpp>

#include "rffr/nn/tensor.hpp"

namespace rffr::nn {

/// Linear warmup followed by cosine decay to zero.
struct TrainSchedule {
  double base_lr = 7.5e-5;
  int warmup_steps = 0;
  int total_steps = 1;
  int batch_size = 128;
  double weight_decay = 0.05;

  void validate() const;
  /// Learning rate for the update with 0-based index `step`; lr(total_steps) == 0.
  double lr_at(int step) const;

  bool operator==(const TrainSchedule&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainSchedule, base_lr, warmup_steps, total_steps,
                                                batch_size, weight_decay)

/// Adam with decoupled weight decay. Decay applies only to parameters flagged
/// with Parameter::decay.
template <class T>
class AdamW {
 public:
  explicit AdamW(double weight_decay = 0.05, double beta1 = 0.9, double beta2 = 0.95,
                 double eps = 1e-8)
      : weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const ParameterList<T>& params, double lr) {
    if (first_.empty()) {
      for (const auto& p : params) {
        first_.push_back(Matrix<T>::Zero(p.param->value.rows(), p.param->value.cols()));
        second_.push_back(Matrix<T>::Zero(p.param->value.rows(), p.param->value.cols()));
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const T b1 = static_cast<T>(beta1_);
    const T b2 = static_cast<T>(beta2_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Parameter<T>& p = *params[i].param;
      first_[i] = b1 * first_[i] + (static_cast<T>(1) - b1) * p.grad;
      second_[i] = b2 * second_[i] + (static_cast<T>(1) - b2) * p.grad.cwiseAbs2();
      if (p.decay && weight_decay_ > 0.0) p.value *= static_cast<T>(1.0 - lr * weight_decay_);
      const T step_size = static_cast<T>(lr / bc1);
      const T denom_scale = static_cast<T>(1.0 / std::sqrt(bc2));
      p.value.array() -= step_size * first_[i].array() /
                         (second_[i].array().sqrt() * denom_scale + static_cast<T>(eps_));
    }
  }

  long steps() const { return t_; }

 private:
  double weight_decay_;
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
  std::vector<Matrix<T>> first_;
  std::vector<Matrix<T>> second_;
};

/// True when every parameter value is finite.
template <class T>
bool parameters_finite(const ParameterList<T>& params) {
  for (const auto& p : params)
    if (!p.param->value.allFinite()) return false;
  return true;
}

}  // namespace rffr::nn
