#include "alseg/baselines.hpp"

#include "alseg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace alseg {

std::string_view method_name(AcquisitionMethod m) {
  switch (m) {
    case AcquisitionMethod::kUniform: return "uniform";
    case AcquisitionMethod::kEntropy: return "entropy";
    case AcquisitionMethod::kBald: return "bald";
    case AcquisitionMethod::kPolicy: return "dqn";
  }
  throw std::invalid_argument("unknown acquisition method");
}

AcquisitionMethod parse_method(std::string_view name) {
  if (name == "uniform") return AcquisitionMethod::kUniform;
  if (name == "entropy") return AcquisitionMethod::kEntropy;
  if (name == "bald") return AcquisitionMethod::kBald;
  if (name == "dqn") return AcquisitionMethod::kPolicy;
  throw std::invalid_argument("unknown acquisition method: " + std::string(name));
}

namespace {

void check_rect(int map_h, int map_w, int y0, int x0, int height, int width) {
  if (y0 < 0 || x0 < 0 || height < 1 || width < 1 || y0 + height > map_h ||
      x0 + width > map_w)
    throw std::invalid_argument("score: rectangle out of bounds");
}

struct Scored {
  double score;
  RegionId region;
};

std::vector<RegionId> top_k(std::vector<Scored> scored, int k) {
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.region < b.region;
  });
  std::vector<RegionId> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(scored[static_cast<std::size_t>(i)].region);
  return out;
}

std::vector<RegionId> acquire_policy(const AcquisitionScorer& scorer,
                                     const AcquisitionContext& ctx, int k,
                                     std::mt19937_64& rng) {
  if (scorer.policy == nullptr) throw std::invalid_argument("acquire: policy scorer without agent");
  PredictionCache cache(ctx.learner, ctx.dataset);
  StateFeatures state = state_features(cache, ctx.dataset, ctx.state_images, ctx.features);

  std::vector<std::vector<double>> labeled_dists;
  labeled_dists.reserve(ctx.labeled.size());
  for (RegionId r : ctx.labeled) labeled_dists.push_back(ground_truth_distribution(ctx.dataset, r));

  std::vector<RegionId> sampled =
      sample_regions(ctx.unlabeled, ctx.features.unlabeled_sample_size, rng);
  std::vector<std::vector<double>> unlabeled_dists;
  unlabeled_dists.reserve(sampled.size());
  for (RegionId r : sampled) unlabeled_dists.push_back(predicted_distribution(cache, ctx.dataset, r));

  std::vector<std::vector<RegionId>> pool_regions =
      sample_pools(ctx.unlabeled, k, scorer.pool_size, rng);
  std::vector<CandidatePool> pools(pool_regions.size());
  for (std::size_t i = 0; i < pool_regions.size(); ++i) {
    pools[i].reserve(pool_regions[i].size());
    for (RegionId r : pool_regions[i])
      pools[i].push_back(
          action_features(r, cache, ctx.dataset, labeled_dists, unlabeled_dists, ctx.features));
  }

  std::vector<int> chosen = scorer.policy->select_subactions(state, pools, 0.0, rng);
  std::vector<RegionId> out;
  out.reserve(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i)
    out.push_back(pool_regions[i][static_cast<std::size_t>(chosen[i])]);
  return out;
}

}  // namespace

double score_entropy(const PredictionMap& pred, int y0, int x0, int height, int width) {
  check_rect(pred.height, pred.width, y0, x0, height, width);
  double sum = 0.0;
  for (int y = y0; y < y0 + height; ++y)
    for (int x = x0; x < x0 + width; ++x)
      for (int c = 0; c < pred.num_classes; ++c) {
        double p = pred.at(y, x, c);
        if (p > 0.0) sum -= p * std::log(p);
      }
  return sum;
}

double score_bald(std::span<const PredictionMap> passes, int y0, int x0, int height,
                  int width) {
  if (passes.size() < 2) throw std::invalid_argument("bald: needs at least two passes");
  const PredictionMap& first = passes[0];
  for (const PredictionMap& p : passes)
    if (p.height != first.height || p.width != first.width ||
        p.num_classes != first.num_classes)
      throw std::invalid_argument("bald: pass shapes differ");
  check_rect(first.height, first.width, y0, x0, height, width);

  const double inv_t = 1.0 / static_cast<double>(passes.size());
  std::vector<double> mean(static_cast<std::size_t>(first.num_classes));
  double sum = 0.0;
  for (int y = y0; y < y0 + height; ++y)
    for (int x = x0; x < x0 + width; ++x) {
      std::fill(mean.begin(), mean.end(), 0.0);
      double mean_entropy = 0.0;
      for (const PredictionMap& pass : passes) {
        for (int c = 0; c < first.num_classes; ++c) {
          double p = pass.at(y, x, c);
          mean[static_cast<std::size_t>(c)] += p * inv_t;
          if (p > 0.0) mean_entropy -= p * std::log(p) * inv_t;
        }
      }
      double entropy_of_mean = 0.0;
      for (double p : mean)
        if (p > 0.0) entropy_of_mean -= p * std::log(p);
      sum += std::max(0.0, entropy_of_mean - mean_entropy);
    }
  return sum;
}

std::vector<RegionId> acquire(const AcquisitionScorer& scorer, const AcquisitionContext& ctx,
                              int k, std::mt19937_64& rng) {
  if (k < 1) throw std::invalid_argument("acquire: k must be positive");
  if (static_cast<std::size_t>(k) > ctx.unlabeled.size())
    throw std::invalid_argument("acquire: fewer unlabeled regions than k");
  if (scorer.pool_size < 1) throw std::invalid_argument("acquire: pool size must be positive");

  if (scorer.method == AcquisitionMethod::kPolicy) return acquire_policy(scorer, ctx, k, rng);

  std::vector<RegionId> pool = sample_regions(ctx.unlabeled, scorer.pool_size, rng);
  if (static_cast<int>(pool.size()) < k)
    throw std::invalid_argument("acquire: candidate pool smaller than k");

  if (scorer.method == AcquisitionMethod::kUniform) return sample_regions(pool, k, rng);

  PredictionCache cache(ctx.learner, ctx.dataset);
  const int rh = ctx.dataset.region_height;
  const int rw = ctx.dataset.region_width;
  std::vector<Scored> scored;
  scored.reserve(pool.size());

  if (scorer.method == AcquisitionMethod::kEntropy) {
    for (RegionId r : pool) {
      const PredictionMap& pred = cache.at(r.image_index);
      scored.push_back({score_entropy(pred, r.row * rh, r.col * rw, rh, rw), r});
    }
    return top_k(std::move(scored), k);
  }

  // BALD: one MC-dropout bundle per image touched by the pool, seeded off
  // this round's rng so reruns reproduce the ranking.
  if (scorer.mc_passes < 2) throw std::invalid_argument("acquire: bald needs mc_passes >= 2");
  std::uint64_t mc_seed = rng();
  std::map<int, std::vector<PredictionMap>> per_image;
  for (RegionId r : pool) {
    auto it = per_image.find(r.image_index);
    if (it == per_image.end()) {
      auto passes = ctx.learner.predict_mc_dropout(
          ctx.dataset.images[static_cast<std::size_t>(r.image_index)], scorer.mc_passes,
          derive_seed(mc_seed, static_cast<std::uint64_t>(r.image_index)));
      it = per_image.emplace(r.image_index, std::move(passes)).first;
    }
    scored.push_back({score_bald(it->second, r.row * rh, r.col * rw, rh, rw), r});
  }
  return top_k(std::move(scored), k);
}

}  // namespace alseg
