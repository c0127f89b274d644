#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "alseg/baselines.hpp"
#include "alseg/config.hpp"
#include "alseg/dataset.hpp"
#include "alseg/featurize.hpp"
#include "alseg/learner.hpp"
#include "alseg/metrics.hpp"
#include "alseg/policy.hpp"
#include "alseg/rng.hpp"

using namespace alseg;

namespace {

// One benchmark-sized scene set, built once and shared.
const SceneDataset& bench_dataset() {
  static SceneDataset ds = [] {
    GenConfig gen = benchmark_preset().gen;
    gen.num_images = 20;
    return generate_scenes(gen);
  }();
  return ds;
}

const Learner& bench_learner() {
  static Learner learner = [] {
    const SceneDataset& ds = bench_dataset();
    Learner l(benchmark_preset().learner, ds.num_classes, ds.images.front().channels, 7);
    l.train_step(ds, image_regions(ds, 0));
    return l;
  }();
  return learner;
}

std::vector<double> random_distribution(std::mt19937_64& rng, int classes) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> d(classes);
  double sum = 0.0;
  for (double& v : d) {
    v = unif(rng) + 1e-6;
    sum += v;
  }
  for (double& v : d) v /= sum;
  return d;
}

}  // namespace

static void BM_LearnerPredict(benchmark::State& state) {
  const SceneDataset& ds = bench_dataset();
  const Learner& learner = bench_learner();
  for (auto _ : state) benchmark::DoNotOptimize(learner.predict(ds.images[1]));
  state.SetItemsProcessed(state.iterations() * ds.images[1].height * ds.images[1].width);
}
BENCHMARK(BM_LearnerPredict);

static void BM_LearnerTrainStep(benchmark::State& state) {
  const SceneDataset& ds = bench_dataset();
  std::vector<RegionId> regions = image_regions(ds, 2);
  regions.resize(8);
  for (auto _ : state) {
    Learner learner = bench_learner();
    learner.train_step(ds, regions);
    benchmark::DoNotOptimize(learner);
  }
}
BENCHMARK(BM_LearnerTrainStep);

static void BM_EvaluateMiou(benchmark::State& state) {
  const SceneDataset& ds = bench_dataset();
  const Learner& learner = bench_learner();
  std::vector<int> images{3, 4};
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_miou(learner, ds, images));
}
BENCHMARK(BM_EvaluateMiou);

static void BM_StateFeatures(benchmark::State& state) {
  const SceneDataset& ds = bench_dataset();
  const Learner& learner = bench_learner();
  FeatureConfig features;
  std::vector<int> state_images{5, 6, 7, 8};
  for (auto _ : state)
    benchmark::DoNotOptimize(state_features(learner, ds, state_images, features));
}
BENCHMARK(BM_StateFeatures);

static void BM_PooledEntropyFeatures(benchmark::State& state) {
  const SceneDataset& ds = bench_dataset();
  PredictionMap pred = bench_learner().predict(ds.images[1]);
  std::vector<double> map = entropy_map(pred, 0, 0, pred.height, pred.width);
  for (auto _ : state)
    benchmark::DoNotOptimize(pooled_entropy_features(map, pred.height, pred.width, 2));
}
BENCHMARK(BM_PooledEntropyFeatures);

static void BM_KlHistogram(benchmark::State& state) {
  FeatureConfig features;
  auto rng = make_rng(11);
  std::vector<double> p = random_distribution(rng, 8);
  std::vector<std::vector<double>> others;
  for (int i = 0; i < 200; ++i) others.push_back(random_distribution(rng, 8));
  for (auto _ : state) benchmark::DoNotOptimize(kl_histogram(p, others, features));
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_KlHistogram);

static void BM_ScorePool(benchmark::State& state) {
  FeatureConfig features;
  AgentConfig config = benchmark_preset().agent;
  const int classes = 8, state_regions = 144;
  auto init_rng = make_rng(13);
  QNet net(features.state_dim(classes, state_regions), features.action_dim(classes),
           features.kl_dim(), config.layout, config.use_batch_norm, init_rng);
  auto rng = make_rng(17);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> state_vec(features.state_dim(classes, state_regions));
  for (double& v : state_vec) v = unif(rng);
  CandidatePool pool(10);
  for (auto& a : pool) {
    a.values.resize(features.action_dim(classes));
    for (double& v : a.values) v = unif(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(net.score_pool(state_vec, pool));
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_ScorePool);

static void BM_SamplePools(benchmark::State& state) {
  const SceneDataset& ds = bench_dataset();
  std::vector<RegionId> universe;
  for (int i = 0; i < ds.num_images(); ++i) {
    auto regs = image_regions(ds, i);
    universe.insert(universe.end(), regs.begin(), regs.end());
  }
  auto rng = make_rng(19);
  for (auto _ : state) benchmark::DoNotOptimize(sample_pools(universe, 8, 10, rng));
}
BENCHMARK(BM_SamplePools);

static void BM_ConfusionAccumulate(benchmark::State& state) {
  const SceneDataset& ds = bench_dataset();
  PredictionMap pred = bench_learner().predict(ds.images[1]);
  LabelMap hard = argmax_map(pred);
  for (auto _ : state) {
    ConfusionMatrix conf(ds.num_classes);
    accumulate(conf, hard, ds.labels[1]);
    benchmark::DoNotOptimize(conf);
  }
  state.SetItemsProcessed(state.iterations() * pred.height * pred.width);
}
BENCHMARK(BM_ConfusionAccumulate);

BENCHMARK_MAIN();
