#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rffr/common/rng.hpp"
#include "rffr/data/image.hpp"

namespace rffr {

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct ManifestEntry {
  std::string path;  // as written in the file
  Label label = Label::kReal;
  std::string domain_tag;
  Split split = Split::kTrain;

  /// Sample id: the path without directory and extension.
  std::string sample_id() const;
};

/// CSV `path,label,domain_tag,split`; relative paths resolve against `base_dir`.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestEntry& entry) const;
  std::vector<ManifestEntry> select(Split split) const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Reads an 8-bit PNG (or any OpenCV-decodable image) into RGB [0,1].
/// Square images are resized to `target_side` when it is given.
Image read_image(const std::filesystem::path& path, std::optional<int> target_side = std::nullopt);
void write_png(const Image& image, const std::filesystem::path& path);

std::vector<ImageSample> load_samples(const DatasetManifest& manifest, Split split,
                                      std::optional<int> target_side = std::nullopt);

/// One epoch of shuffled batches; the last batch may be short.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, std::size_t batch_size,
                                                    Rng& rng);

/// Source of training batches.
class SampleStream {
 public:
  virtual ~SampleStream() = default;
  virtual std::vector<ImageSample> next_batch() = 0;
};

/// Cycles over an in-memory sample set, reshuffling at every epoch. Epoch
/// order is fixed by the seed before any batch is handed out.
class BatchIterator : public SampleStream {
 public:
  BatchIterator(std::vector<ImageSample> samples, std::size_t batch_size, std::uint64_t seed);

  std::vector<ImageSample> next_batch() override;
  /// Number of epochs started so far.
  std::size_t epoch() const { return epoch_; }
  const std::vector<ImageSample>& samples() const { return samples_; }

 private:
  std::vector<ImageSample> samples_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::vector<std::size_t>> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

/// Batches of one pass over `split` of the manifest, loaded from disk.
std::vector<std::vector<ImageSample>> batch_iter(const DatasetManifest& manifest, Split split,
                                                 std::size_t batch_size, Rng& rng,
                                                 std::optional<int> target_side = std::nullopt);

}  // namespace rffr
