#pragma once

#include <alseg/dataset.hpp>
#include <alseg/featurize.hpp>
#include <alseg/learner.hpp>
#include <alseg/policy.hpp>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace alseg {

enum class AcquisitionMethod { kUniform, kEntropy, kBald, kPolicy };

std::string_view method_name(AcquisitionMethod m);
AcquisitionMethod parse_method(std::string_view name);

// How the next batch of regions to label is chosen. Scoring methods draw a
// single candidate pool per round; the policy variant draws its own K
// disjoint pools and acts greedily.
struct AcquisitionScorer {
  AcquisitionMethod method = AcquisitionMethod::kUniform;
  int pool_size = 500;
  int mc_passes = 20;              // BALD only
  const Agent* policy = nullptr;   // kPolicy only, non-owning
  FeatureConfig features{};        // kPolicy only
};

// Sum over region pixels of predicted-class Shannon entropy (nats).
double score_entropy(const PredictionMap& pred, int y0, int x0, int height, int width);
// Sum over region pixels of H[mean_t p_t] - mean_t H[p_t] across MC-dropout
// passes. Zero whenever all passes agree.
double score_bald(std::span<const PredictionMap> passes, int y0, int x0, int height,
                  int width);

// Everything an acquisition round may read. state_images feed the policy
// variant's state featurization and are ignored by the rest.
struct AcquisitionContext {
  const SceneDataset& dataset;
  const Learner& learner;
  const FeatureConfig& features;
  std::span<const int> state_images;
  std::span<const RegionId> labeled;
  std::span<const RegionId> unlabeled;
};

// Picks k distinct unlabeled regions. Uniform takes k random picks from one
// sampled pool; entropy/BALD take the top k scores (ties to the lowest
// RegionId); the policy variant delegates to greedy sub-action selection
// over k disjoint pools.
std::vector<RegionId> acquire(const AcquisitionScorer& scorer, const AcquisitionContext& ctx,
                              int k, std::mt19937_64& rng);

}  // namespace alseg
