#include "rffr/nn/optim.hpp"

#include <numbers>

#include "rffr/common/error.hpp"

namespace rffr::nn {

void TrainSchedule::validate() const {
  if (!(base_lr > 0.0)) throw InvalidInput("base_lr must be positive");
  if (total_steps < 1) throw InvalidInput("total_steps must be positive");
  if (warmup_steps < 0 || warmup_steps > total_steps) {
    throw InvalidInput("warmup_steps must lie in [0, total_steps]");
  }
  if (batch_size < 1) throw InvalidInput("batch_size must be positive");
  if (weight_decay < 0.0) throw InvalidInput("weight_decay must be non-negative");
}

double TrainSchedule::lr_at(int step) const {
  if (step < warmup_steps) return base_lr * step / warmup_steps;
  if (step >= total_steps) return 0.0;
  const int decay_span = total_steps - warmup_steps;
  const double progress = static_cast<double>(step - warmup_steps) / decay_span;
  return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace rffr::nn
