#include "alseg/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace alseg {

void ConfusionMatrix::add(int gt, int pred, std::uint64_t n) {
  if (gt < 0 || gt >= num_classes || pred < 0 || pred >= num_classes)
    throw std::invalid_argument("confusion: class id out of range");
  counts[static_cast<std::size_t>(gt) * num_classes + pred] += n;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.num_classes != num_classes)
    throw std::invalid_argument("confusion: class count mismatch");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  return *this;
}

void accumulate(ConfusionMatrix& conf, const LabelMap& prediction, const LabelMap& ground_truth) {
  if (prediction.height != ground_truth.height || prediction.width != ground_truth.width)
    throw std::invalid_argument("accumulate: shape mismatch");
  for (std::size_t i = 0; i < ground_truth.data.size(); ++i) {
    std::uint8_t gt = ground_truth.data[i];
    if (gt == kVoidLabel) continue;
    conf.add(gt, prediction.data[i]);
  }
}

double mean_of_present(std::span<const std::optional<double>> values) {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : values)
    if (v) {
      sum += *v;
      ++n;
    }
  return n ? sum / n : 0.0;
}

IouReport mean_iou(const ConfusionMatrix& conf) {
  IouReport report;
  report.per_class.resize(conf.num_classes);
  for (int c = 0; c < conf.num_classes; ++c) {
    std::uint64_t tp = conf.at(c, c);
    std::uint64_t row = 0, col = 0;
    for (int k = 0; k < conf.num_classes; ++k) {
      row += conf.at(c, k);
      col += conf.at(k, c);
    }
    std::uint64_t denom = row + col - tp;  // TP + FP + FN
    if (denom > 0)
      report.per_class[c] = static_cast<double>(tp) / static_cast<double>(denom);
  }
  report.mean = mean_of_present(report.per_class);
  return report;
}

std::vector<double> label_histogram(const SceneDataset& dataset,
                                    std::span<const RegionId> regions) {
  if (regions.empty()) throw std::invalid_argument("label_histogram: no regions");
  std::vector<std::uint64_t> counts(dataset.num_classes, 0);
  std::uint64_t total = 0;
  for (const RegionId& r : regions) {
    LabelPatchView patch = reveal_labels(dataset, r);
    for (int y = 0; y < patch.height; ++y)
      for (int x = 0; x < patch.width; ++x) {
        std::uint8_t v = patch.at(y, x);
        if (v == kVoidLabel) continue;
        ++counts[v];
        ++total;
      }
  }
  if (total == 0) throw std::invalid_argument("label_histogram: all pixels void");
  std::vector<double> hist(dataset.num_classes);
  for (int c = 0; c < dataset.num_classes; ++c)
    hist[c] = static_cast<double>(counts[c]) / static_cast<double>(total);
  return hist;
}

double distribution_entropy(std::span<const double> dist) {
  double h = 0.0;
  for (double p : dist)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

}  // namespace alseg
