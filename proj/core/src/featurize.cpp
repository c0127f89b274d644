#include "alseg/featurize.hpp"

#include "alseg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace alseg {

void FeatureConfig::validate() const {
  if (pooled_grid < 1) throw std::invalid_argument("features: pooled_grid must be >= 1");
  if (kl_bin_edges.empty()) throw std::invalid_argument("features: no KL bins");
  for (std::size_t i = 1; i < kl_bin_edges.size(); ++i)
    if (kl_bin_edges[i] <= kl_bin_edges[i - 1])
      throw std::invalid_argument("features: KL bin edges must be strictly increasing");
  if (kl_bin_edges.front() != 0.0)
    throw std::invalid_argument("features: first KL bin edge must be 0");
  if (kl_smoothing <= 0.0) throw std::invalid_argument("features: KL smoothing must be positive");
  if (unlabeled_sample_size < 1)
    throw std::invalid_argument("features: unlabeled sample size must be >= 1");
}

const PredictionMap& PredictionCache::at(int image_index) {
  if (image_index < 0 || image_index >= dataset_->num_images())
    throw std::invalid_argument("prediction cache: image index out of range");
  auto& slot = maps_[static_cast<std::size_t>(image_index)];
  if (!slot) slot = learner_->predict(dataset_->images[image_index]);
  return *slot;
}

std::vector<double> class_distribution(const PredictionMap& pred, int y0, int x0, int height,
                                       int width) {
  if (height <= 0 || width <= 0 || y0 < 0 || x0 < 0 || y0 + height > pred.height ||
      x0 + width > pred.width)
    throw std::invalid_argument("class_distribution: rectangle out of range");
  std::vector<double> dist(pred.num_classes, 0.0);
  for (int y = y0; y < y0 + height; ++y)
    for (int x = x0; x < x0 + width; ++x) {
      int best = 0;
      double best_p = pred.at(y, x, 0);
      for (int c = 1; c < pred.num_classes; ++c)
        if (pred.at(y, x, c) > best_p) {
          best_p = pred.at(y, x, c);
          best = c;
        }
      dist[best] += 1.0;
    }
  double total = static_cast<double>(height) * width;
  for (double& v : dist) v /= total;
  return dist;
}

std::vector<double> entropy_map(const PredictionMap& pred, int y0, int x0, int height,
                                int width) {
  if (height <= 0 || width <= 0 || y0 < 0 || x0 < 0 || y0 + height > pred.height ||
      x0 + width > pred.width)
    throw std::invalid_argument("entropy_map: rectangle out of range");
  std::vector<double> out(static_cast<std::size_t>(height) * width);
  std::size_t i = 0;
  for (int y = y0; y < y0 + height; ++y)
    for (int x = x0; x < x0 + width; ++x, ++i) {
      double h = 0.0;
      for (int c = 0; c < pred.num_classes; ++c) {
        double p = pred.at(y, x, c);
        if (p > 0.0) h -= p * std::log(p);
      }
      out[i] = h;
    }
  return out;
}

std::vector<double> pooled_entropy_features(std::span<const double> map, int height, int width,
                                            int g) {
  if (g < 1 || g > height || g > width)
    throw std::invalid_argument("pooled_entropy_features: grid does not fit the map");
  if (static_cast<std::size_t>(height) * width != map.size())
    throw std::invalid_argument("pooled_entropy_features: size mismatch");

  // Cell i spans base cells plus one extra for the trailing `rem` cells.
  auto bounds = [](int extent, int cells, int i) {
    int base = extent / cells, rem = extent % cells;
    int start = i * base + std::max(0, i - (cells - rem));
    int len = base + (i >= cells - rem ? 1 : 0);
    return std::pair{start, start + len};
  };

  std::vector<double> mins, avgs, maxs;
  mins.reserve(static_cast<std::size_t>(g) * g);
  avgs.reserve(static_cast<std::size_t>(g) * g);
  maxs.reserve(static_cast<std::size_t>(g) * g);
  for (int gy = 0; gy < g; ++gy) {
    auto [y0, y1] = bounds(height, g, gy);
    for (int gx = 0; gx < g; ++gx) {
      auto [x0, x1] = bounds(width, g, gx);
      double mn = map[static_cast<std::size_t>(y0) * width + x0];
      double mx = mn;
      double sum = 0.0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          double v = map[static_cast<std::size_t>(y) * width + x];
          mn = std::min(mn, v);
          mx = std::max(mx, v);
          sum += v;
        }
      mins.push_back(mn);
      avgs.push_back(sum / ((y1 - y0) * (x1 - x0)));
      maxs.push_back(mx);
    }
  }
  std::vector<double> out;
  out.reserve(3 * mins.size());
  out.insert(out.end(), mins.begin(), mins.end());
  out.insert(out.end(), avgs.begin(), avgs.end());
  out.insert(out.end(), maxs.begin(), maxs.end());
  return out;
}

double kl_divergence_smoothed(std::span<const double> p, std::span<const double> q, double eps) {
  if (p.size() != q.size()) throw std::invalid_argument("kl: length mismatch");
  if (p.empty()) throw std::invalid_argument("kl: empty distributions");
  double psum = 0.0, qsum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    psum += p[i] + eps;
    qsum += q[i] + eps;
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double pi = (p[i] + eps) / psum;
    double qi = (q[i] + eps) / qsum;
    kl += pi * std::log(pi / qi);
  }
  return kl;
}

std::vector<double> kl_histogram(std::span<const double> p,
                                 std::span<const std::vector<double>> others,
                                 const FeatureConfig& config) {
  std::vector<double> hist(config.kl_bins(), 0.0);
  if (others.empty()) return hist;
  const auto& edges = config.kl_bin_edges;
  for (const auto& q : others) {
    double score = kl_divergence_smoothed(p, q, config.kl_smoothing);
    auto it = std::upper_bound(edges.begin(), edges.end(), score);
    std::size_t bin = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin() - 1);
    hist[bin] += 1.0;
  }
  for (double& v : hist) v /= static_cast<double>(others.size());
  return hist;
}

std::vector<double> ground_truth_distribution(const SceneDataset& dataset, RegionId region) {
  LabelPatchView patch = reveal_labels(dataset, region);
  std::vector<double> dist(dataset.num_classes, 0.0);
  double total = 0.0;
  for (int y = 0; y < patch.height; ++y)
    for (int x = 0; x < patch.width; ++x) {
      std::uint8_t v = patch.at(y, x);
      if (v == kVoidLabel) continue;
      dist[v] += 1.0;
      total += 1.0;
    }
  if (total > 0.0)
    for (double& v : dist) v /= total;
  return dist;
}

std::vector<double> predicted_distribution(PredictionCache& cache, const SceneDataset& dataset,
                                           RegionId region) {
  region_pixels(dataset, region);  // range check
  const PredictionMap& pred = cache.at(region.image_index);
  return class_distribution(pred, region.row * dataset.region_height,
                            region.col * dataset.region_width, dataset.region_height,
                            dataset.region_width);
}

std::vector<double> region_features(const PredictionMap& pred, int y0, int x0, int height,
                                    int width, const FeatureConfig& config) {
  std::vector<double> out = class_distribution(pred, y0, x0, height, width);
  std::vector<double> ent = entropy_map(pred, y0, x0, height, width);
  std::vector<double> pooled = pooled_entropy_features(ent, height, width, config.pooled_grid);
  if (config.variant == FeatureVariant::kMaxPool) {
    // Max block only: the trailing g^2 values.
    std::size_t g2 = pooled.size() / 3;
    out.insert(out.end(), pooled.end() - static_cast<std::ptrdiff_t>(g2), pooled.end());
  } else {
    out.insert(out.end(), pooled.begin(), pooled.end());
  }
  return out;
}

StateFeatures state_features(PredictionCache& cache, const SceneDataset& dataset,
                             std::span<const int> state_images, const FeatureConfig& config) {
  if (state_images.empty()) throw std::invalid_argument("state_features: no state images");
  StateFeatures s;
  s.values.reserve(static_cast<std::size_t>(state_images.size()) *
                   dataset.regions_per_image() * config.region_dim(dataset.num_classes));
  for (int i : state_images) {
    const PredictionMap& pred = cache.at(i);
    for (int r = 0; r < dataset.grid_rows(); ++r)
      for (int c = 0; c < dataset.grid_cols(); ++c) {
        auto f = region_features(pred, r * dataset.region_height, c * dataset.region_width,
                                 dataset.region_height, dataset.region_width, config);
        s.values.insert(s.values.end(), f.begin(), f.end());
      }
  }
  return s;
}

StateFeatures state_features(const Learner& learner, const SceneDataset& dataset,
                             std::span<const int> state_images, const FeatureConfig& config) {
  PredictionCache cache(learner, dataset);
  return state_features(cache, dataset, state_images, config);
}

ActionFeatures action_features(RegionId region, PredictionCache& cache,
                               const SceneDataset& dataset,
                               std::span<const std::vector<double>> labeled_distributions,
                               std::span<const std::vector<double>> unlabeled_distributions,
                               const FeatureConfig& config) {
  ActionFeatures a;
  a.region = region;
  const PredictionMap& pred = cache.at(region.image_index);
  a.values = region_features(pred, region.row * dataset.region_height,
                             region.col * dataset.region_width, dataset.region_height,
                             dataset.region_width, config);
  if (config.kl_dim() > 0) {
    std::vector<double> p(a.values.begin(), a.values.begin() + dataset.num_classes);
    auto h_labeled = kl_histogram(p, labeled_distributions, config);
    auto h_unlabeled = kl_histogram(p, unlabeled_distributions, config);
    a.values.insert(a.values.end(), h_labeled.begin(), h_labeled.end());
    a.values.insert(a.values.end(), h_unlabeled.begin(), h_unlabeled.end());
  }
  return a;
}

std::vector<RegionId> sample_regions(std::span<const RegionId> universe, int count,
                                     std::mt19937_64& rng) {
  if (count < 0) throw std::invalid_argument("sample_regions: negative count");
  std::vector<RegionId> pool(universe.begin(), universe.end());
  if (count >= static_cast<int>(pool.size())) return pool;
  // Partial Fisher-Yates; the first `count` entries are a uniform draw.
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

std::vector<std::vector<RegionId>> sample_pools(std::span<const RegionId> unlabeled, int k,
                                                int n, std::mt19937_64& rng) {
  if (k < 1 || n < 1) throw std::invalid_argument("sample_pools: k and n must be positive");
  if (static_cast<std::size_t>(k) * n > unlabeled.size())
    throw std::invalid_argument("sample_pools: not enough unlabeled regions");
  std::vector<RegionId> drawn = sample_regions(unlabeled, k * n, rng);
  std::vector<std::vector<RegionId>> pools(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    pools[static_cast<std::size_t>(i)].assign(drawn.begin() + static_cast<std::ptrdiff_t>(i) * n,
                                              drawn.begin() + static_cast<std::ptrdiff_t>(i + 1) * n);
  return pools;
}

}  // namespace alseg
