#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "alseg/featurize.hpp"
#include "alseg/rng.hpp"
#include "support/oracles.hpp"

using namespace alseg;

namespace {

PredictionMap one_hot_map(int h, int w, int C, const std::vector<int>& classes) {
  PredictionMap pred(h, w, C);
  std::size_t i = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      pred.at(y, x, classes[i++]) = 1.0;
    }
  return pred;
}

FeatureConfig config_for(FeatureVariant v) {
  FeatureConfig cfg;
  cfg.variant = v;
  return cfg;
}

SceneDataset tiny_scene() {
  GenConfig g;
  g.num_images = 3;
  g.height = 16;
  g.width = 16;
  g.channels = 3;
  g.num_classes = 4;
  g.rare_class_frequencies = {0.02};
  g.object_size_range = {2, 4};
  g.noise_sigma = 0.3;
  g.signature_overlap = 0.2;
  g.region_height = 8;
  g.region_width = 8;
  g.seed = 30;
  return generate_scenes(g);
}

}  // namespace

TEST_CASE("feature config validation and dimensional bookkeeping") {
  FeatureConfig cfg;
  cfg.validate();
  CHECK(cfg.kl_bins() == 8);
  CHECK(config_for(FeatureVariant::kMaxPool).poolings() == 1);
  CHECK(config_for(FeatureVariant::kThreePool).poolings() == 3);
  CHECK(config_for(FeatureVariant::kThreePoolKl).poolings() == 3);
  CHECK(config_for(FeatureVariant::kMaxPool).entropy_dim() == 4);
  CHECK(config_for(FeatureVariant::kThreePool).entropy_dim() == 12);
  CHECK(config_for(FeatureVariant::kMaxPool).kl_dim() == 0);
  CHECK(config_for(FeatureVariant::kThreePool).kl_dim() == 0);
  CHECK(config_for(FeatureVariant::kThreePoolKl).kl_dim() == 16);
  CHECK(cfg.region_dim(4) == 16);
  CHECK(cfg.action_dim(4) == 32);
  CHECK(cfg.state_dim(4, 12) == 192);

  FeatureConfig bad = cfg;
  bad.pooled_grid = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.kl_bin_edges = {};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.kl_bin_edges = {0.0, 0.5, 0.5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.kl_bin_edges = {0.1, 0.5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.kl_smoothing = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.unlabeled_sample_size = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("class distribution counts argmax pixels") {
  SUBCASE("hand 3x3 argmax pattern") {
    PredictionMap pred = one_hot_map(3, 3, 4, {0, 0, 1, 1, 1, 2, 2, 2, 2});
    auto d = class_distribution(pred);
    CHECK(d[0] == doctest::Approx(2.0 / 9).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(3.0 / 9).epsilon(1e-12));
    CHECK(d[2] == doctest::Approx(4.0 / 9).epsilon(1e-12));
    CHECK(d[3] == 0.0);
  }

  SUBCASE("single-class map") {
    PredictionMap pred = one_hot_map(4, 4, 4, std::vector<int>(16, 2));
    auto d = class_distribution(pred);
    CHECK(d == std::vector<double>{0.0, 0.0, 1.0, 0.0});
  }

  SUBCASE("argmax ties resolve to the smallest class id") {
    PredictionMap pred(1, 1, 3);
    pred.at(0, 0, 0) = 0.4;
    pred.at(0, 0, 1) = 0.4;
    pred.at(0, 0, 2) = 0.2;
    auto d = class_distribution(pred);
    CHECK(d == std::vector<double>{1.0, 0.0, 0.0});
  }

  SUBCASE("random maps match the oracle and sum to 1") {
    auto rng = make_rng(3001);
    for (int rep = 0; rep < 120; ++rep) {
      int C = 2 + rep % 5;
      PredictionMap pred = oracles::random_pred(rng, 6, 5, C);
      auto got = class_distribution(pred, 1, 0, 4, 5);
      auto want = oracles::class_distribution(pred, 1, 0, 4, 5);
      REQUIRE(got.size() == want.size());
      double sum = 0.0;
      for (std::size_t i = 0; i < got.size(); ++i) {
        REQUIRE(got[i] == doctest::Approx(want[i]).epsilon(1e-9));
        sum += got[i];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("bad rectangle") {
    PredictionMap pred(4, 4, 2);
    CHECK_THROWS_AS(class_distribution(pred, 0, 0, 5, 4), std::invalid_argument);
    CHECK_THROWS_AS(class_distribution(pred, -1, 0, 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(class_distribution(pred, 0, 0, 0, 2), std::invalid_argument);
  }
}

TEST_CASE("entropy map computes per-pixel Shannon entropy in nats") {
  PredictionMap pred(1, 3, 4);
  pred.at(0, 0, 1) = 1.0;  // one-hot
  for (int c = 0; c < 4; ++c) pred.at(0, 1, c) = 0.25;
  pred.at(0, 2, 0) = 0.5;
  pred.at(0, 2, 1) = 0.25;
  pred.at(0, 2, 2) = 0.25;

  auto ent = entropy_map(pred, 0, 0, 1, 3);
  CHECK(ent[0] == 0.0);
  CHECK(ent[1] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(ent[2] == doctest::Approx(1.0397207708399179).epsilon(1e-9));

  auto rng = make_rng(3002);
  for (int rep = 0; rep < 100; ++rep) {
    PredictionMap p = oracles::random_pred(rng, 4, 4, 5);
    auto got = entropy_map(p, 0, 0, 4, 4);
    std::size_t i = 0;
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x, ++i) {
        std::vector<double> pix(5);
        for (int c = 0; c < 5; ++c) pix[c] = p.at(y, x, c);
        REQUIRE(got[i] == doctest::Approx(oracles::entropy(pix)).epsilon(1e-9));
        REQUIRE(got[i] >= -1e-12);
        REQUIRE(got[i] <= std::log(5.0) + 1e-12);
      }
  }

  CHECK_THROWS_AS(entropy_map(pred, 0, 0, 2, 3), std::invalid_argument);
}

TEST_CASE("pooled entropy features emit min, avg, max blocks") {
  SUBCASE("constant map") {
    std::vector<double> map(36, 0.7);
    auto f = pooled_entropy_features(map, 6, 6, 2);
    REQUIRE(f.size() == 12);
    for (double v : f) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
  }

  SUBCASE("2x2 map with g=1") {
    std::vector<double> map{0.0, 1.0, 2.0, 3.0};
    auto f = pooled_entropy_features(map, 2, 2, 1);
    REQUIRE(f.size() == 3);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(f[2] == 3.0);
  }

  SUBCASE("random maps match the per-cell oracle") {
    auto rng = make_rng(3003);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    struct Shape {
      int h, w, g;
    };
    for (Shape s : {Shape{8, 8, 2}, Shape{5, 7, 2}, Shape{9, 4, 3}, Shape{3, 3, 3}}) {
      for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> map(static_cast<std::size_t>(s.h) * s.w);
        for (double& v : map) v = u(rng);
        auto got = pooled_entropy_features(map, s.h, s.w, s.g);
        auto want = oracles::pooled_entropy(map, s.h, s.w, s.g);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i)
          REQUIRE(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
      }
    }
  }

  SUBCASE("bad grid") {
    std::vector<double> map(4, 0.0);
    CHECK_THROWS_AS(pooled_entropy_features(map, 2, 2, 3), std::invalid_argument);
    CHECK_THROWS_AS(pooled_entropy_features(map, 2, 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(pooled_entropy_features(map, 3, 2, 1), std::invalid_argument);
  }
}

TEST_CASE("smoothed KL divergence approaches the analytic value") {
  std::vector<double> p{1.0, 0.0};
  std::vector<double> q{0.5, 0.5};
  CHECK(kl_divergence_smoothed(p, p, 1e-6) == 0.0);
  CHECK(kl_divergence_smoothed(p, q, 1e-6) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-3 / std::log(2.0)));

  auto rng = make_rng(3004);
  for (int rep = 0; rep < 100; ++rep) {
    auto a = oracles::random_dist(rng, 6);
    auto b = oracles::random_dist(rng, 6);
    double got = kl_divergence_smoothed(a, b, 1e-6);
    CHECK(got == doctest::Approx(oracles::kl_smoothed(a, b, 1e-6)).epsilon(1e-9));
    CHECK(got >= -1e-12);
  }

  std::vector<double> shorter{1.0};
  CHECK_THROWS_AS(kl_divergence_smoothed(p, shorter, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(kl_divergence_smoothed({}, {}, 1e-6), std::invalid_argument);
}

TEST_CASE("KL histograms bin similarity scores") {
  FeatureConfig cfg;

  SUBCASE("identical comparisons fill bin zero") {
    std::vector<double> p{0.25, 0.25, 0.5};
    std::vector<std::vector<double>> others{p, p, p};
    auto h = kl_histogram(p, others, cfg);
    REQUIRE(h.size() == 8);
    CHECK(h[0] == 1.0);
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] == 0.0);
  }

  SUBCASE("empty comparison set yields zeros") {
    std::vector<double> p{1.0, 0.0};
    auto h = kl_histogram(p, {}, cfg);
    CHECK(h == std::vector<double>(8, 0.0));
  }

  SUBCASE("the ln 2 score lands in the [0.5, 1) bin") {
    std::vector<double> p{1.0, 0.0};
    std::vector<std::vector<double>> others{{0.5, 0.5}};
    auto h = kl_histogram(p, others, cfg);
    CHECK(h[4] == 1.0);
  }

  SUBCASE("random sets match the oracle and sum to 1") {
    auto rng = make_rng(3005);
    for (int rep = 0; rep < 100; ++rep) {
      auto p = oracles::random_dist(rng, 5);
      std::vector<std::vector<double>> others;
      int n = 1 + static_cast<int>(rep % 7);
      for (int i = 0; i < n; ++i) others.push_back(oracles::random_dist(rng, 5));
      auto got = kl_histogram(p, others, cfg);
      auto want = oracles::kl_histogram(p, others, cfg.kl_bin_edges, cfg.kl_smoothing);
      REQUIRE(got.size() == want.size());
      double sum = 0.0;
      for (std::size_t i = 0; i < got.size(); ++i) {
        REQUIRE(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        sum += got[i];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("ground truth distributions skip void and handle all-void regions") {
  std::vector<Image> imgs;
  imgs.emplace_back(4, 8, 1);
  std::vector<LabelMap> labs;
  LabelMap lab(4, 8);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) lab.at(y, x) = (x < 2) ? 0 : 1;
  for (int y = 0; y < 4; ++y)
    for (int x = 4; x < 8; ++x) lab.at(y, x) = kVoidLabel;
  lab.at(0, 4) = 2;
  labs.push_back(lab);
  SceneDataset ds(std::move(imgs), std::move(labs), 3, 4, 4);

  auto left = ground_truth_distribution(ds, {0, 0, 0});
  CHECK(left == std::vector<double>{0.5, 0.5, 0.0});

  auto right = ground_truth_distribution(ds, {0, 0, 1});
  CHECK(right == std::vector<double>{0.0, 0.0, 1.0});

  // erase the only labeled pixel; everything void now
  SceneDataset allvoid = ds;
  allvoid.labels[0].at(0, 4) = kVoidLabel;
  CHECK(ground_truth_distribution(allvoid, {0, 0, 1}) == std::vector<double>(3, 0.0));
}

TEST_CASE("prediction cache serves region distributions and validates indices") {
  SceneDataset ds = tiny_scene();
  LearnerConfig lcfg;
  lcfg.hidden_dims = {8};
  Learner learner(lcfg, 4, 3, 17);
  PredictionCache cache(learner, ds);

  CHECK_THROWS_AS(cache.at(-1), std::invalid_argument);
  CHECK_THROWS_AS(cache.at(3), std::invalid_argument);
  CHECK(cache.at(1) == learner.predict(ds.images[1]));

  auto d = predicted_distribution(cache, ds, {1, 1, 0});
  auto direct = class_distribution(learner.predict(ds.images[1]), 8, 0, 8, 8);
  CHECK(d == direct);
  CHECK_THROWS_AS(predicted_distribution(cache, ds, {1, 2, 0}), std::invalid_argument);

  cache.invalidate();
  CHECK(cache.at(1) == learner.predict(ds.images[1]));
}

TEST_CASE("region features select the pooling blocks per variant") {
  auto rng = make_rng(3006);
  PredictionMap pred = oracles::random_pred(rng, 8, 8, 4);

  auto full = region_features(pred, 0, 0, 8, 8, config_for(FeatureVariant::kThreePool));
  auto maxonly = region_features(pred, 0, 0, 8, 8, config_for(FeatureVariant::kMaxPool));
  auto withkl = region_features(pred, 0, 0, 8, 8, config_for(FeatureVariant::kThreePoolKl));

  REQUIRE(full.size() == 16);     // C + 3g^2
  REQUIRE(maxonly.size() == 8);   // C + g^2
  CHECK(withkl == full);          // KL blocks appear only in action features

  // max-pool variant keeps the class block and the trailing max block
  for (int i = 0; i < 4; ++i) CHECK(maxonly[i] == full[i]);
  for (int i = 0; i < 4; ++i) CHECK(maxonly[4 + i] == full[4 + 8 + i]);
}

TEST_CASE("state features concatenate region features over the state images") {
  SceneDataset ds = tiny_scene();
  LearnerConfig lcfg;
  lcfg.hidden_dims = {8};
  Learner learner(lcfg, 4, 3, 17);
  FeatureConfig cfg;

  std::vector<int> state_images{0, 2};
  StateFeatures s = state_features(learner, ds, state_images, cfg);
  // M = 2 images x 4 regions; each region contributes C + 3g^2 = 16
  REQUIRE(s.values.size() == 8 * 16);

  StateFeatures again = state_features(learner, ds, state_images, cfg);
  CHECK(s == again);

  // the class-distribution block of every region sums to 1
  for (std::size_t r = 0; r < 8; ++r) {
    double sum = 0.0;
    for (int c = 0; c < 4; ++c) sum += s.values[r * 16 + c];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }

  CHECK_THROWS_AS(state_features(learner, ds, {}, cfg), std::invalid_argument);
}

TEST_CASE("a uniform-output learner produces ln C entropy features") {
  SceneDataset ds = tiny_scene();
  LearnerConfig lcfg;
  lcfg.hidden_dims = {8};
  Learner learner(lcfg, 4, 3, 17);
  learner.visit_params([](double& p) { p = 0.0; });

  FeatureConfig cfg;
  StateFeatures s = state_features(learner, ds, std::vector<int>{0}, cfg);
  REQUIRE(s.values.size() == 4 * 16);
  for (std::size_t r = 0; r < 4; ++r) {
    // uniform predictions argmax-tie to class 0
    CHECK(s.values[r * 16 + 0] == 1.0);
    for (int c = 1; c < 4; ++c) CHECK(s.values[r * 16 + c] == 0.0);
    for (int e = 0; e < 12; ++e)
      CHECK(s.values[r * 16 + 4 + e] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }
}

TEST_CASE("action features append KL histograms against both sets") {
  SceneDataset ds = tiny_scene();
  LearnerConfig lcfg;
  lcfg.hidden_dims = {8};
  Learner learner(lcfg, 4, 3, 17);
  PredictionCache cache(learner, ds);
  FeatureConfig cfg;

  std::vector<std::vector<double>> unlabeled_dists{{0.25, 0.25, 0.25, 0.25}};

  SUBCASE("length and the empty-labeled-set rule") {
    ActionFeatures a = action_features({0, 0, 0}, cache, ds, {}, unlabeled_dists, cfg);
    CHECK(a.region == RegionId{0, 0, 0});
    REQUIRE(a.values.size() == 32);  // C + 3g^2 + 2*8
    for (int i = 16; i < 24; ++i) CHECK(a.values[i] == 0.0);
    double sum4 = 0.0;
    for (int i = 24; i < 32; ++i) sum4 += a.values[i];
    CHECK(sum4 == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("a labeled twin concentrates the first histogram in bin 0") {
    ActionFeatures probe = action_features({0, 0, 0}, cache, ds, {}, {}, cfg);
    std::vector<double> twin(probe.values.begin(), probe.values.begin() + 4);
    std::vector<std::vector<double>> labeled{twin};
    ActionFeatures a = action_features({0, 0, 0}, cache, ds, labeled, {}, cfg);
    CHECK(a.values[16] == 1.0);
    for (int i = 17; i < 24; ++i) CHECK(a.values[i] == 0.0);
  }

  SUBCASE("non-KL variants carry no histogram blocks") {
    FeatureConfig plain = config_for(FeatureVariant::kThreePool);
    ActionFeatures a = action_features({0, 0, 0}, cache, ds, {}, unlabeled_dists, plain);
    CHECK(a.values.size() == 16);
  }
}

TEST_CASE("sample_regions draws distinct regions uniformly") {
  std::vector<RegionId> universe;
  for (int i = 0; i < 20; ++i) universe.push_back({i, 0, 0});

  auto rng = make_rng(42);
  auto all = sample_regions(universe, 25, rng);
  CHECK(all == universe);
  auto exact = sample_regions(universe, 20, rng);
  CHECK(exact == universe);

  auto some = sample_regions(universe, 7, rng);
  REQUIRE(some.size() == 7);
  std::set<RegionId> uniq(some.begin(), some.end());
  CHECK(uniq.size() == 7);

  auto rng_a = make_rng(99);
  auto rng_b = make_rng(99);
  CHECK(sample_regions(universe, 7, rng_a) == sample_regions(universe, 7, rng_b));

  CHECK(sample_regions(universe, 0, rng).empty());
  CHECK_THROWS_AS(sample_regions(universe, -1, rng), std::invalid_argument);
}

TEST_CASE("sample_pools partitions one distinct draw into disjoint pools") {
  std::vector<RegionId> universe;
  for (int img = 0; img < 30; ++img)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) universe.push_back({img, r, c});
  // 270 regions

  SUBCASE("single pool over the whole set") {
    auto rng = make_rng(7);
    auto pools = sample_pools(universe, 1, static_cast<int>(universe.size()), rng);
    REQUIRE(pools.size() == 1);
    CHECK(pools[0] == universe);
  }

  SUBCASE("24 pools of 10 are 240 distinct regions") {
    auto rng = make_rng(8);
    auto pools = sample_pools(universe, 24, 10, rng);
    REQUIRE(pools.size() == 24);
    std::set<RegionId> seen;
    for (const auto& pool : pools) {
      REQUIRE(pool.size() == 10);
      for (const RegionId& r : pool) {
        CHECK(seen.insert(r).second);  // disjoint across pools
        CHECK(std::find(universe.begin(), universe.end(), r) != universe.end());
      }
    }
    CHECK(seen.size() == 240);
  }

  SUBCASE("insufficient regions throw") {
    auto rng = make_rng(9);
    CHECK_THROWS_AS(sample_pools(universe, 28, 10, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_pools(universe, 0, 10, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_pools(universe, 2, 0, rng), std::invalid_argument);
  }

  SUBCASE("deterministic given the rng state") {
    auto rng_a = make_rng(10);
    auto rng_b = make_rng(10);
    CHECK(sample_pools(universe, 4, 5, rng_a) == sample_pools(universe, 4, 5, rng_b));
  }
}

TEST_CASE("pool sampling is uniform over the region universe") {
  // 10^4 draws of 10 regions from 50; chi-squared with 49 dof at p=0.01
  std::vector<RegionId> universe;
  for (int i = 0; i < 50; ++i) universe.push_back({i / 10, (i % 10) / 5, i % 5});

  auto rng = make_rng(1234);
  std::map<RegionId, int> counts;
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    auto pools = sample_pools(universe, 5, 2, rng);
    for (const auto& pool : pools)
      for (const RegionId& r : pool) ++counts[r];
  }

  const double expected = draws * 10.0 / 50.0;
  double chi2 = 0.0;
  for (const RegionId& r : universe) {
    double diff = counts[r] - expected;
    chi2 += diff * diff / expected;
  }
  CHECK(chi2 < 74.92);
}
