#pragma once

#include <string>
#include <vector>

#include "rffr/data/image.hpp"

namespace rffr {

struct ScoreItem {
  double score = 0.0;
  Label label = Label::kReal;
  std::string sample_id;
  std::string domain_tag;
};

struct ScoreSet {
  std::vector<ScoreItem> items;

  void add(double score, Label label, std::string sample_id = {}, std::string domain_tag = {});
  std::size_t count(Label label) const;
};

/// Mann-Whitney AUC with FAKE as the positive class; tied pairs count one half.
/// Throws UndefinedMetric unless both classes are present.
double auc(const ScoreSet& scores);

/// Exponential moving average used for plotting: s0 = v0, s_t = f*s_{t-1} + (1-f)*v_t.
std::vector<double> smooth_ema(const std::vector<double>& values, double factor = 0.8);

/// Largest drop below the running maximum, measured only at positions from
/// `first` on (the maximum itself runs over the whole series).
double peak_decline(const std::vector<double>& values, std::size_t first);

}  // namespace rffr
