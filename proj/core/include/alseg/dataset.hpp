#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "alseg/image.hpp"

namespace alseg {

// One non-overlapping square region of one image; the unit of labeling.
struct RegionId {
  int image_index = 0;
  int row = 0;
  int col = 0;

  auto operator<=>(const RegionId&) const = default;
};

// Synthetic scene generator settings. Rare/object classes are the last
// rare_class_frequencies.size() class ids; the remaining (background) classes
// share the leftover pixel mass.
struct GenConfig {
  int num_images = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  int num_classes = 0;
  std::vector<double> rare_class_frequencies;
  std::array<int, 2> object_size_range{4, 9};
  double noise_sigma = 0.5;
  double signature_overlap = 0.3;
  double signature_jitter = 0.0;  // >0 shifts signatures; used for source-domain sets
  int region_height = 8;
  int region_width = 8;
  std::uint64_t seed = 0;
  std::uint64_t signature_seed = 1000;

  void validate() const;
};

// Feature images plus ground-truth labels plus the region grid; the world the
// labeling oracle knows.
struct SceneDataset {
  std::vector<Image> images;
  std::vector<LabelMap> labels;
  int num_classes = 0;
  int region_height = 0;
  int region_width = 0;

  SceneDataset() = default;
  SceneDataset(std::vector<Image> imgs, std::vector<LabelMap> labs, int classes, int rh, int rw);

  int num_images() const { return static_cast<int>(images.size()); }
  int grid_rows() const { return images.empty() ? 0 : images.front().height / region_height; }
  int grid_cols() const { return images.empty() ? 0 : images.front().width / region_width; }
  int regions_per_image() const { return grid_rows() * grid_cols(); }
  int total_regions() const { return num_images() * regions_per_image(); }

  bool operator==(const SceneDataset&) const = default;
};

// Image-index roles: train_pool drives policy-training episodes, eval_pool is
// where acquisition is evaluated, reward feeds the per-step reward and early
// stopping, state builds the MDP state. Indices not assigned to any role act
// as the held-out test images.
struct Splits {
  std::vector<int> train_pool;
  std::vector<int> eval_pool;
  std::vector<int> reward;
  std::vector<int> state;
};

struct SplitSizes {
  int train_pool = 0;
  int eval_pool = 0;
  int reward = 0;
  int state = 0;
};

// Deterministic per-class feature signatures shared by every dataset built
// from the same (channels, num_classes, overlap, signature_seed, jitter).
std::vector<std::vector<float>> class_signatures(const GenConfig& config);

SceneDataset generate_scenes(const GenConfig& config);

// Pooled class histogram (non-void pixels, normalized) over the given images;
// empty image list means the whole dataset.
std::vector<double> class_histogram(const SceneDataset& dataset, const std::vector<int>& image_indices = {});

// Greedy pick of `count` images whose pooled label histogram tracks
// target_hist; each step adds the candidate minimizing the L1 distance of the
// running histogram to the target, ties broken by smallest index.
std::vector<int> select_state_set(const SceneDataset& dataset, const std::vector<int>& candidates,
                                  const std::vector<double>& target_hist, int count);

// State images are matched to the dataset-wide class histogram first; the
// remaining roles are drawn uniformly without replacement. All role lists are
// returned sorted ascending.
Splits split_dataset(const SceneDataset& dataset, const SplitSizes& sizes, std::uint64_t seed);

std::vector<int> holdout_indices(const SceneDataset& dataset, const Splits& splits);

// Row-major enumeration by (image, row, col); stable across calls.
std::vector<RegionId> region_grid(const SceneDataset& dataset);
std::vector<RegionId> image_regions(const SceneDataset& dataset, int image_index);

std::pair<PatchView, LabelPatchView> region_pixels(const SceneDataset& dataset, RegionId region);

// The labeling oracle: returns ground truth for the region. Idempotent;
// budget bookkeeping lives in the episode state, not here.
LabelPatchView reveal_labels(const SceneDataset& dataset, RegionId region);

// Directory layout: manifest.json plus per-image little-endian float32
// feature files and uint8 label files. Round trip is bit-exact.
void save_dataset(const SceneDataset& dataset, const std::filesystem::path& dir);
SceneDataset load_dataset(const std::filesystem::path& dir);

// Same images and labels under a different region grid (region dims must
// divide the image dims).
SceneDataset with_region_dims(const SceneDataset& dataset, int region_height, int region_width);

}  // namespace alseg
