#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "alseg/dataset.hpp"
#include "alseg/image.hpp"

namespace alseg {

// C x C counts, rows = ground truth, cols = prediction. Void pixels never
// enter. Mergeable by addition.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::uint64_t> counts;

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int classes)
      : num_classes(classes), counts(static_cast<size_t>(classes) * classes, 0) {}

  std::uint64_t at(int gt, int pred) const { return counts[static_cast<size_t>(gt) * num_classes + pred]; }
  void add(int gt, int pred, std::uint64_t n = 1);
  std::uint64_t total() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

// Adds one count per non-void ground-truth pixel at (gt, pred).
void accumulate(ConfusionMatrix& conf, const LabelMap& prediction, const LabelMap& ground_truth);

// Per-class IoU; classes with TP+FP+FN == 0 are absent (nullopt) and excluded
// from the mean.
struct IouReport {
  std::vector<std::optional<double>> per_class;
  double mean = 0.0;
};

IouReport mean_iou(const ConfusionMatrix& conf);

// Mean of present values; the single averaging routine behind mean_iou and
// the report tables.
double mean_of_present(std::span<const std::optional<double>> values);

// Normalized class histogram over the non-void ground-truth pixels of the
// given regions.
std::vector<double> label_histogram(const SceneDataset& dataset, std::span<const RegionId> regions);

// Shannon entropy in nats, with 0 * ln 0 == 0.
double distribution_entropy(std::span<const double> dist);

}  // namespace alseg
