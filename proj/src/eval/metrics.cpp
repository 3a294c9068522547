#include "rffr/eval/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "rffr/common/error.hpp"

namespace rffr {

void ScoreSet::add(double score, Label label, std::string sample_id, std::string domain_tag) {
  items.push_back({score, label, std::move(sample_id), std::move(domain_tag)});
}

std::size_t ScoreSet::count(Label label) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [label](const ScoreItem& i) { return i.label == label; }));
}

double auc(const ScoreSet& scores) {
  const std::size_t positives = scores.count(Label::kFake);
  const std::size_t negatives = scores.items.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedMetric("AUC needs at least one REAL and one FAKE score (got " + std::to_string(negatives) +
                          " real, " + std::to_string(positives) + " fake)");
  }
  std::vector<std::size_t> order(scores.items.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores.items[a].score < scores.items[b].score; });

  // Doubled ranks keep tie averages integral, so the result is exact.
  long long doubled_rank_sum = 0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end < order.size() && scores.items[order[end]].score == scores.items[order[start]].score) ++end;
    const long long doubled_rank = static_cast<long long>(start + 1 + end);  // 2 * mean of ranks start+1..end
    for (std::size_t i = start; i < end; ++i) {
      if (scores.items[order[i]].label == Label::kFake) doubled_rank_sum += doubled_rank;
    }
    start = end;
  }
  const long long p = static_cast<long long>(positives);
  const long long doubled_u = doubled_rank_sum - p * (p + 1);
  return static_cast<double>(doubled_u) / (2.0 * static_cast<double>(p) * static_cast<double>(negatives));
}

std::vector<double> smooth_ema(const std::vector<double>& values, double factor) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(out.empty() ? v : factor * out.back() + (1.0 - factor) * v);
  return out;
}

double peak_decline(const std::vector<double>& values, std::size_t first) {
  double peak = -std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    peak = std::max(peak, values[i]);
    if (i >= first) worst = std::max(worst, peak - values[i]);
  }
  return worst;
}

}  // namespace rffr
