#include "rffr/data/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "rffr/common/error.hpp"

namespace fs = std::filesystem;

namespace rffr {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "unknown";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw InvalidInput("unknown split '" + std::string(text) + "' (expected train|val|test)");
}

std::string ManifestEntry::sample_id() const { return fs::path(path).stem().string(); }

fs::path DatasetManifest::resolve(const ManifestEntry& entry) const {
  const fs::path p(entry.path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<ManifestEntry> DatasetManifest::select(Split split) const {
  std::vector<ManifestEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [split](const ManifestEntry& e) { return e.split == split; });
  return out;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path.string());

  DatasetManifest manifest;
  manifest.base_dir = path.parent_path();
  std::string line;
  if (!std::getline(in, line) || trim(line) != "path,label,domain_tag,split") {
    throw InvalidInput(path.string() + ": header must be 'path,label,domain_tag,split'");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(trim(line));
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 4) throw InvalidInput(where + ": expected 4 fields");
    ManifestEntry entry;
    entry.path = fields[0];
    try {
      entry.label = parse_label(fields[1]);
      entry.split = parse_split(fields[3]);
    } catch (const InvalidInput& e) {
      throw InvalidInput(where + " (" + entry.path + "): " + e.what());
    }
    entry.domain_tag = fields[2];
    if (entry.domain_tag.empty()) throw InvalidInput(where + ": empty domain_tag");
    manifest.entries.push_back(std::move(entry));
  }

  // Splits must be disjoint by sample id.
  std::map<std::string, Split> seen;
  for (const ManifestEntry& e : manifest.entries) {
    const auto [it, inserted] = seen.emplace(e.sample_id(), e.split);
    if (!inserted && it->second != e.split) {
      throw InvalidInput(path.string() + ": sample '" + e.sample_id() +
                         "' appears in more than one split");
    }
  }
  for (const ManifestEntry& e : manifest.entries) {
    const fs::path resolved = manifest.resolve(e);
    if (!fs::is_regular_file(resolved)) {
      throw IoError(path.string() + ": image not found: " + resolved.string());
    }
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << "path,label,domain_tag,split\n";
  for (const ManifestEntry& e : manifest.entries) {
    out << e.path << ',' << to_string(e.label) << ',' << e.domain_tag << ',' << to_string(e.split)
        << '\n';
  }
  if (!out) throw IoError("failed writing manifest " + path.string());
}

Image read_image(const fs::path& path, std::optional<int> target_side) {
  if (!fs::exists(path)) throw IoError("image not found: " + path.string());
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError("cannot decode image: " + path.string());
  if (bgr.rows != bgr.cols) {
    throw InvalidInput("image is not square (" + std::to_string(bgr.rows) + "x" +
                       std::to_string(bgr.cols) + "): " + path.string());
  }
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  if (target_side && *target_side != rgb.rows) {
    cv::Mat resized;
    cv::resize(rgb, resized, cv::Size(*target_side, *target_side), 0, 0,
               *target_side < rgb.rows ? cv::INTER_AREA : cv::INTER_LINEAR);
    rgb = resized;
  }
  Image image(rgb.rows, rgb.cols, 3);
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<cv::Vec3b>(y);
    for (int x = 0; x < rgb.cols; ++x)
      for (int c = 0; c < 3; ++c) image.at(y, x, c) = static_cast<float>(row[x][c]) / 255.0f;
  }
  return image;
}

void write_png(const Image& image, const fs::path& path) {
  if (image.channels != 3 && image.channels != 1) {
    throw InvalidInput("write_png supports 1 or 3 channels");
  }
  cv::Mat mat(image.height, image.width, image.channels == 3 ? CV_8UC3 : CV_8UC1);
  for (int y = 0; y < image.height; ++y) {
    auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < image.channels; ++c) {
        const double v = std::clamp(static_cast<double>(image.at(y, x, c)), 0.0, 1.0);
        // OpenCV expects BGR order.
        const int dst_c = image.channels == 3 ? 2 - c : 0;
        row[x * image.channels + dst_c] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
  }
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), mat)) throw IoError("cannot write image " + path.string());
}

std::vector<ImageSample> load_samples(const DatasetManifest& manifest, Split split,
                                      std::optional<int> target_side) {
  std::vector<ImageSample> samples;
  for (const ManifestEntry& e : manifest.select(split)) {
    ImageSample s;
    s.pixels = read_image(manifest.resolve(e), target_side);
    s.label = e.label;
    s.domain_tag = e.domain_tag;
    s.sample_id = e.sample_id();
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, std::size_t batch_size,
                                                    Rng& rng) {
  if (batch_size < 1) throw InvalidInput("batch_size must be at least 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < count; i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(count, i + batch_size)));
  }
  return batches;
}

BatchIterator::BatchIterator(std::vector<ImageSample> samples, std::size_t batch_size,
                             std::uint64_t seed)
    : samples_(std::move(samples)), batch_size_(batch_size), rng_(seed) {
  if (batch_size_ < 1) throw InvalidInput("batch_size must be at least 1");
  if (samples_.empty()) throw InvalidInput("BatchIterator needs at least one sample");
}

std::vector<ImageSample> BatchIterator::next_batch() {
  if (cursor_ == order_.size()) {
    order_ = epoch_batches(samples_.size(), batch_size_, rng_);
    cursor_ = 0;
    ++epoch_;
  }
  std::vector<ImageSample> batch;
  for (const std::size_t i : order_[cursor_]) batch.push_back(samples_[i]);
  ++cursor_;
  return batch;
}

std::vector<std::vector<ImageSample>> batch_iter(const DatasetManifest& manifest, Split split,
                                                 std::size_t batch_size, Rng& rng,
                                                 std::optional<int> target_side) {
  std::vector<ImageSample> samples = load_samples(manifest, split, target_side);
  std::vector<std::vector<ImageSample>> batches;
  for (const auto& idx : epoch_batches(samples.size(), batch_size, rng)) {
    std::vector<ImageSample> batch;
    for (const std::size_t i : idx) batch.push_back(samples[i]);
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace rffr
