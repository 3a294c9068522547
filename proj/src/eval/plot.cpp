#include "rffr/eval/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "rffr/common/error.hpp"
#include "rffr/eval/metrics.hpp"

namespace rffr {
namespace {

const cv::Scalar kPalette[] = {{180, 119, 31}, {14, 127, 255}, {44, 160, 44}, {40, 39, 214},
                               {189, 103, 148}, {75, 86, 140}, {194, 119, 227}, {127, 127, 127}};

void put(cv::Mat& img, const std::string& text, cv::Point at, double scale = 0.45,
         cv::Scalar color = {30, 30, 30}) {
  cv::putText(img, text, at, cv::FONT_HERSHEY_SIMPLEX, scale, color, 1, cv::LINE_AA);
}

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write(const cv::Mat& img, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), img)) throw IoError("cannot write plot " + path.string());
}

}  // namespace

void plot_curves(const Curves& curves, const std::string& title, const std::filesystem::path& path,
                 double smoothing) {
  const int w = 720, h = 440, left = 60, right = 170, top = 40, bottom = 50;
  cv::Mat img(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
  long max_iter = 1;
  for (const auto& [_, pts] : curves)
    for (const CurvePoint& p : pts) max_iter = std::max(max_iter, p.iteration);
  const double y_lo = 0.0, y_hi = 1.0;
  const auto px = [&](long it) { return left + static_cast<int>((w - left - right) * static_cast<double>(it) / max_iter); };
  const auto py = [&](double v) { return top + static_cast<int>((h - top - bottom) * (y_hi - v) / (y_hi - y_lo)); };

  for (int i = 0; i <= 4; ++i) {
    const double v = y_lo + (y_hi - y_lo) * i / 4.0;
    cv::line(img, {left, py(v)}, {w - right, py(v)}, {225, 225, 225});
    put(img, fixed(v, 2), {8, py(v) + 4});
  }
  cv::rectangle(img, {left, top}, {w - right, h - bottom}, {90, 90, 90});
  put(img, "0", {left - 4, h - bottom + 18});
  put(img, std::to_string(max_iter), {w - right - 30, h - bottom + 18});
  put(img, "iteration", {(w - right) / 2, h - 12});
  put(img, title, {left, 24}, 0.55);

  int series = 0;
  for (const auto& [domain, pts] : curves) {
    const cv::Scalar color = kPalette[series % std::size(kPalette)];
    std::vector<double> values;
    for (const CurvePoint& p : pts) values.push_back(p.auc);
    if (smoothing > 0.0) values = smooth_ema(values, smoothing);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      cv::line(img, {px(pts[i - 1].iteration), py(values[i - 1])}, {px(pts[i].iteration), py(values[i])}, color, 2,
               cv::LINE_AA);
    }
    const int ly = top + 16 + 20 * series;
    cv::line(img, {w - right + 10, ly - 4}, {w - right + 30, ly - 4}, color, 2);
    put(img, domain, {w - right + 36, ly});
    ++series;
  }
  write(img, path);
}

void plot_matrix(const EvalReport& report, const std::filesystem::path& path) {
  std::vector<std::string> trains, tests;
  for (const MatrixCell& c : report.matrix) {
    if (std::find(trains.begin(), trains.end(), c.train_domain) == trains.end()) trains.push_back(c.train_domain);
    if (std::find(tests.begin(), tests.end(), c.test_domain) == tests.end()) tests.push_back(c.test_domain);
  }
  const int cell = 90, left = 130, top = 60;
  const int w = left + cell * static_cast<int>(tests.size()) + 20;
  const int h = top + cell * static_cast<int>(trains.size()) + 20;
  cv::Mat img(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
  put(img, "train \\ test  (AUC %)", {8, 22}, 0.5);
  for (std::size_t c = 0; c < tests.size(); ++c) put(img, tests[c], {left + static_cast<int>(c) * cell + 4, top - 8}, 0.4);

  for (std::size_t r = 0; r < trains.size(); ++r) {
    put(img, trains[r], {8, top + static_cast<int>(r) * cell + cell / 2}, 0.4);
    for (std::size_t c = 0; c < tests.size(); ++c) {
      const MatrixCell* mc = report.cell(trains[r], tests[c]);
      const cv::Rect box(left + static_cast<int>(c) * cell, top + static_cast<int>(r) * cell, cell, cell);
      cv::Scalar fill(200, 200, 200);
      std::string label = "error";
      if (mc && mc->auc_percent) {
        // 50 (chance) maps to the cold end, 100 to the hot end.
        const double t = std::clamp((*mc->auc_percent - 50.0) / 50.0, 0.0, 1.0);
        cv::Mat swatch(1, 1, CV_8UC1, cv::Scalar(static_cast<int>(t * 255)));
        cv::Mat colored;
        cv::applyColorMap(swatch, colored, cv::COLORMAP_VIRIDIS);
        const cv::Vec3b v = colored.at<cv::Vec3b>(0, 0);
        fill = cv::Scalar(v[0], v[1], v[2]);
        label = fixed(*mc->auc_percent, 1);
      }
      cv::rectangle(img, box, fill, cv::FILLED);
      cv::rectangle(img, box, mc && mc->intra_domain ? cv::Scalar(0, 0, 0) : cv::Scalar(255, 255, 255), 2);
      put(img, label, {box.x + 18, box.y + cell / 2 + 5}, 0.5, {255, 255, 255});
    }
  }
  write(img, path);
}

}  // namespace rffr
