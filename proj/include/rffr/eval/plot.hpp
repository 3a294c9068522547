#pragma once

#include <filesystem>
#include <string>

#include "rffr/eval/report.hpp"

namespace rffr {

/// Line chart of AUC against iteration, one line per test domain. Series are
/// EMA-smoothed for display only (factor 0 disables smoothing).
void plot_curves(const Curves& curves, const std::string& title, const std::filesystem::path& path,
                 double smoothing = 0.8);

/// Train x test heatmap of the AUC matrix; failed cells are drawn grey.
void plot_matrix(const EvalReport& report, const std::filesystem::path& path);

}  // namespace rffr
