#pragma once

#include <alseg/dataset.hpp>
#include <alseg/learner.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace alseg {

// Which feature blocks the state/action vectors carry. Pooling is over the
// per-region entropy map; the KL blocks are the similarity histograms.
enum class FeatureVariant {
  kMaxPool,      // class distribution + max-pooled entropy (g^2)
  kThreePool,    // + min/avg/max poolings (3 g^2)
  kThreePoolKl,  // + both KL histograms
};

struct FeatureConfig {
  FeatureVariant variant = FeatureVariant::kThreePoolKl;
  int pooled_grid = 2;  // g: entropy maps pool down to g x g cells
  // Lower bin edges; bin i covers [edges[i], edges[i+1]), last bin open.
  std::vector<double> kl_bin_edges{0.0, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0};
  double kl_smoothing = 1e-6;
  // Block 4 compares against at most this many unlabeled regions per step.
  int unlabeled_sample_size = 200;

  int kl_bins() const { return static_cast<int>(kl_bin_edges.size()); }
  int poolings() const { return variant == FeatureVariant::kMaxPool ? 1 : 3; }
  int entropy_dim() const { return poolings() * pooled_grid * pooled_grid; }
  int kl_dim() const { return variant == FeatureVariant::kThreePoolKl ? 2 * kl_bins() : 0; }
  int region_dim(int num_classes) const { return num_classes + entropy_dim(); }
  int action_dim(int num_classes) const { return region_dim(num_classes) + kl_dim(); }
  int state_dim(int num_classes, int state_regions) const {
    return state_regions * region_dim(num_classes);
  }

  void validate() const;
  bool operator==(const FeatureConfig&) const = default;
};

struct StateFeatures {
  std::vector<double> values;
  bool operator==(const StateFeatures&) const = default;
};

// Feature vector of one candidate region: class distribution, pooled
// entropy, then (variant permitting) KL-vs-labeled and KL-vs-unlabeled
// histograms.
struct ActionFeatures {
  RegionId region;
  std::vector<double> values;
  bool operator==(const ActionFeatures&) const = default;
};

using CandidatePool = std::vector<ActionFeatures>;

// Computes each image's prediction at most once per learner state.
class PredictionCache {
 public:
  PredictionCache(const Learner& learner, const SceneDataset& dataset)
      : learner_(&learner), dataset_(&dataset), maps_(dataset.num_images()) {}

  const PredictionMap& at(int image_index);
  void invalidate() { std::fill(maps_.begin(), maps_.end(), std::nullopt); }

 private:
  const Learner* learner_;
  const SceneDataset* dataset_;
  std::vector<std::optional<PredictionMap>> maps_;
};

// Normalized count of per-pixel argmax classes over a rectangle of the map.
std::vector<double> class_distribution(const PredictionMap& pred, int y0, int x0,
                                       int height, int width);
inline std::vector<double> class_distribution(const PredictionMap& pred) {
  return class_distribution(pred, 0, 0, pred.height, pred.width);
}

// Per-pixel Shannon entropy (nats), row-major over the rectangle.
std::vector<double> entropy_map(const PredictionMap& pred, int y0, int x0,
                                int height, int width);

// Partitions an h x w map into a g x g grid of near-equal cells (remainder
// rows/cols absorbed by trailing cells) and emits min-pooled, then
// average-pooled, then max-pooled values, each block row-major.
std::vector<double> pooled_entropy_features(std::span<const double> map, int height,
                                            int width, int g);

// KL(p || q) after additive smoothing of both arguments and renormalization.
double kl_divergence_smoothed(std::span<const double> p, std::span<const double> q,
                              double eps);

// Histogram of KL(p || q) over all q in `others`, normalized by |others|;
// empty `others` yields all zeros.
std::vector<double> kl_histogram(std::span<const double> p,
                                 std::span<const std::vector<double>> others,
                                 const FeatureConfig& config);

// Ground-truth class distribution of a region over non-VOID pixels; all-VOID
// regions yield all zeros.
std::vector<double> ground_truth_distribution(const SceneDataset& dataset, RegionId region);
// Predicted class distribution of a region.
std::vector<double> predicted_distribution(PredictionCache& cache, const SceneDataset& dataset,
                                           RegionId region);

// Class distribution ++ pooled entropy for one region of one prediction map.
std::vector<double> region_features(const PredictionMap& pred, int y0, int x0, int height,
                                    int width, const FeatureConfig& config);

// Concatenation of region_features over every region of the state images,
// in dataset enumeration order.
StateFeatures state_features(PredictionCache& cache, const SceneDataset& dataset,
                             std::span<const int> state_images, const FeatureConfig& config);
StateFeatures state_features(const Learner& learner, const SceneDataset& dataset,
                             std::span<const int> state_images, const FeatureConfig& config);

ActionFeatures action_features(RegionId region, PredictionCache& cache,
                               const SceneDataset& dataset,
                               std::span<const std::vector<double>> labeled_distributions,
                               std::span<const std::vector<double>> unlabeled_distributions,
                               const FeatureConfig& config);

// Uniform sample of `count` distinct regions (all of them if fewer exist).
std::vector<RegionId> sample_regions(std::span<const RegionId> universe, int count,
                                     std::mt19937_64& rng);

// One uniform draw of k*n distinct regions partitioned into k disjoint pools
// of n. Throws when the universe is too small (episode must end early).
std::vector<std::vector<RegionId>> sample_pools(std::span<const RegionId> unlabeled, int k,
                                                int n, std::mt19937_64& rng);

}  // namespace alseg
