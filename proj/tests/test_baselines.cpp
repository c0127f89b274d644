#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "alseg/baselines.hpp"
#include "alseg/rng.hpp"
#include "support/oracles.hpp"

using namespace alseg;

namespace {

SceneDataset make_scene() {
  GenConfig g;
  g.num_images = 6;
  g.height = 24;
  g.width = 24;
  g.channels = 3;
  g.num_classes = 4;
  g.rare_class_frequencies = {0.02};
  g.object_size_range = {2, 4};
  g.noise_sigma = 0.3;
  g.signature_overlap = 0.2;
  g.region_height = 8;
  g.region_width = 8;
  g.seed = 31;
  return generate_scenes(g);
}

Learner make_learner(std::uint64_t seed, double dropout = 0.0) {
  LearnerConfig cfg;
  cfg.hidden_dims = {8};
  cfg.dropout_rate = dropout;
  return Learner(cfg, 4, 3, seed);
}

std::vector<RegionId> all_regions(const SceneDataset& ds) {
  std::vector<RegionId> out;
  for (int i = 0; i < ds.num_images(); ++i) {
    auto regs = image_regions(ds, i);
    out.insert(out.end(), regs.begin(), regs.end());
  }
  return out;
}

std::vector<RegionId> manual_top_k(std::vector<std::pair<double, RegionId>> scored, int k) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<RegionId> out;
  for (int i = 0; i < k; ++i) out.push_back(scored[static_cast<std::size_t>(i)].second);
  return out;
}

}  // namespace

TEST_CASE("method names round trip and reject unknowns") {
  for (AcquisitionMethod m : {AcquisitionMethod::kUniform, AcquisitionMethod::kEntropy,
                              AcquisitionMethod::kBald, AcquisitionMethod::kPolicy})
    CHECK(parse_method(method_name(m)) == m);
  CHECK(method_name(AcquisitionMethod::kPolicy) == "dqn");
  CHECK_THROWS_WITH_AS(parse_method("qdn"), doctest::Contains("qdn"), std::invalid_argument);
  CHECK_THROWS_AS(parse_method(""), std::invalid_argument);
}

TEST_CASE("entropy scores sum per-pixel prediction entropy") {
  SUBCASE("one-hot predictions carry no entropy") {
    PredictionMap pred(4, 4, 3);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) pred.at(y, x, (y + x) % 3) = 1.0;
    CHECK(score_entropy(pred, 0, 0, 4, 4) == 0.0);
  }

  SUBCASE("a uniform 8x8 region scores area times ln C") {
    PredictionMap pred(8, 8, 4);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        for (int c = 0; c < 4; ++c) pred.at(y, x, c) = 0.25;
    CHECK(score_entropy(pred, 0, 0, 8, 8) ==
          doctest::Approx(64.0 * std::log(4.0)).epsilon(1e-12));
  }

  SUBCASE("random maps match the oracle") {
    auto rng = make_rng(4001);
    std::uniform_int_distribution<int> side(1, 6);
    for (int rep = 0; rep < 120; ++rep) {
      PredictionMap pred = oracles::random_pred(rng, 8, 6, 2 + rep % 4);
      int h = side(rng) % 4 + 1, w = side(rng) % 4 + 1;
      int y0 = side(rng) % (8 - h + 1), x0 = side(rng) % (6 - w + 1);
      CHECK(score_entropy(pred, y0, x0, h, w) ==
            doctest::Approx(oracles::score_entropy(pred, y0, x0, h, w)).epsilon(1e-9));
    }
  }

  SUBCASE("bad rectangles throw") {
    PredictionMap pred(4, 4, 2);
    CHECK_THROWS_AS(score_entropy(pred, 0, 0, 5, 4), std::invalid_argument);
    CHECK_THROWS_AS(score_entropy(pred, 3, 3, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(score_entropy(pred, 0, 0, 0, 1), std::invalid_argument);
  }
}

TEST_CASE("bald scores mutual information between passes") {
  SUBCASE("agreeing passes carry no information") {
    auto rng = make_rng(4002);
    PredictionMap base = oracles::random_pred(rng, 4, 4, 3);
    std::vector<PredictionMap> passes(4, base);
    CHECK(score_bald(passes, 0, 0, 4, 4) == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("maximally disagreeing one-hot passes score area times ln 2") {
    PredictionMap a(2, 4, 2), b(2, 4, 2);
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 4; ++x) {
        a.at(y, x, 0) = 1.0;
        b.at(y, x, 1) = 1.0;
      }
    std::vector<PredictionMap> passes{a, b};
    CHECK(score_bald(passes, 0, 0, 2, 4) ==
          doctest::Approx(8.0 * std::log(2.0)).epsilon(1e-12));
  }

  SUBCASE("random passes match the oracle and respect the entropy bound") {
    auto rng = make_rng(4003);
    std::uniform_int_distribution<int> np(2, 6);
    for (int rep = 0; rep < 100; ++rep) {
      int C = 2 + rep % 3;
      std::vector<PredictionMap> passes;
      int T = np(rng);
      for (int t = 0; t < T; ++t) passes.push_back(oracles::random_pred(rng, 5, 4, C));
      double got = score_bald(passes, 1, 0, 3, 4);
      CHECK(got == doctest::Approx(oracles::score_bald(passes, 1, 0, 3, 4)).epsilon(1e-9));
      CHECK(got >= 0.0);

      // mutual information cannot exceed the entropy of the mean prediction
      PredictionMap mean(5, 4, C);
      for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 4; ++x)
          for (int c = 0; c < C; ++c) {
            for (const PredictionMap& p : passes) mean.at(y, x, c) += p.at(y, x, c);
            mean.at(y, x, c) /= static_cast<double>(T);
          }
      CHECK(got <= score_entropy(mean, 1, 0, 3, 4) + 1e-9);
    }
  }

  SUBCASE("bad inputs throw") {
    auto rng = make_rng(4004);
    PredictionMap p = oracles::random_pred(rng, 4, 4, 3);
    std::vector<PredictionMap> one{p};
    CHECK_THROWS_AS(score_bald(one, 0, 0, 2, 2), std::invalid_argument);
    std::vector<PredictionMap> mixed{p, oracles::random_pred(rng, 4, 5, 3)};
    CHECK_THROWS_AS(score_bald(mixed, 0, 0, 2, 2), std::invalid_argument);
    std::vector<PredictionMap> two{p, p};
    CHECK_THROWS_AS(score_bald(two, 0, 0, 5, 2), std::invalid_argument);
  }
}

TEST_CASE("uniform acquisition draws distinct regions from a sampled pool") {
  SceneDataset ds = make_scene();
  Learner learner = make_learner(17);
  FeatureConfig features;
  std::vector<RegionId> universe = all_regions(ds);
  std::vector<int> state_imgs{4, 5};
  AcquisitionContext ctx{ds, learner, features, state_imgs, {}, universe};

  AcquisitionScorer scorer;
  scorer.method = AcquisitionMethod::kUniform;

  SUBCASE("whole-pool whole-budget selection returns everything") {
    scorer.pool_size = static_cast<int>(universe.size());
    auto rng = make_rng(4010);
    auto got = acquire(scorer, ctx, static_cast<int>(universe.size()), rng);
    CHECK(got == universe);
  }

  SUBCASE("partial draws are distinct, in range, and seeded") {
    scorer.pool_size = 20;
    auto rng_a = make_rng(4011);
    auto rng_b = make_rng(4011);
    auto a = acquire(scorer, ctx, 5, rng_a);
    auto b = acquire(scorer, ctx, 5, rng_b);
    CHECK(a == b);
    REQUIRE(a.size() == 5);
    std::set<RegionId> uniq(a.begin(), a.end());
    CHECK(uniq.size() == 5);
    for (RegionId r : a)
      CHECK(std::find(universe.begin(), universe.end(), r) != universe.end());
  }

  SUBCASE("argument validation") {
    auto rng = make_rng(4012);
    CHECK_THROWS_AS(acquire(scorer, ctx, 0, rng), std::invalid_argument);
    CHECK_THROWS_AS(acquire(scorer, ctx, static_cast<int>(universe.size()) + 1, rng),
                    std::invalid_argument);
    scorer.pool_size = 0;
    CHECK_THROWS_AS(acquire(scorer, ctx, 1, rng), std::invalid_argument);
    scorer.pool_size = 3;
    CHECK_THROWS_AS(acquire(scorer, ctx, 5, rng), std::invalid_argument);
  }
}

TEST_CASE("entropy acquisition takes the top-k scores with ties to the lowest region") {
  SceneDataset ds = make_scene();
  FeatureConfig features;
  std::vector<RegionId> universe = all_regions(ds);
  std::vector<int> state_imgs{4, 5};

  SUBCASE("an all-uniform learner ties every region") {
    Learner zeroed = make_learner(17);
    zeroed.visit_params([](double& p) { p = 0.0; });
    AcquisitionContext ctx{ds, zeroed, features, state_imgs, {}, universe};
    AcquisitionScorer scorer;
    scorer.method = AcquisitionMethod::kEntropy;
    scorer.pool_size = static_cast<int>(universe.size());
    auto rng = make_rng(4020);
    auto got = acquire(scorer, ctx, 6, rng);
    // universe enumerates sorted, so the tie-break picks its first six
    CHECK(got == std::vector<RegionId>(universe.begin(), universe.begin() + 6));
  }

  SUBCASE("scores agree with a hand ranking") {
    Learner learner = make_learner(18);
    AcquisitionContext ctx{ds, learner, features, state_imgs, {}, universe};
    AcquisitionScorer scorer;
    scorer.method = AcquisitionMethod::kEntropy;
    scorer.pool_size = static_cast<int>(universe.size());
    auto rng = make_rng(4021);
    auto got = acquire(scorer, ctx, 7, rng);

    std::vector<std::pair<double, RegionId>> scored;
    for (RegionId r : universe) {
      PredictionMap pred = learner.predict(ds.images[static_cast<std::size_t>(r.image_index)]);
      scored.push_back({oracles::score_entropy(pred, r.row * 8, r.col * 8, 8, 8), r});
    }
    CHECK(got == manual_top_k(std::move(scored), 7));
  }
}

TEST_CASE("bald acquisition reproduces its documented sampling protocol") {
  SceneDataset ds = make_scene();
  Learner learner = make_learner(19, 0.2);
  FeatureConfig features;
  std::vector<RegionId> universe = all_regions(ds);
  std::vector<int> state_imgs{4, 5};
  AcquisitionContext ctx{ds, learner, features, state_imgs, {}, universe};

  AcquisitionScorer scorer;
  scorer.method = AcquisitionMethod::kBald;
  scorer.pool_size = 20;
  scorer.mc_passes = 4;

  SUBCASE("seeded reruns select identically") {
    auto rng_a = make_rng(4030);
    auto rng_b = make_rng(4030);
    CHECK(acquire(scorer, ctx, 5, rng_a) == acquire(scorer, ctx, 5, rng_b));
  }

  SUBCASE("selection equals a hand-run of pool sampling plus mc scoring") {
    auto rng_a = make_rng(4031);
    auto got = acquire(scorer, ctx, 5, rng_a);

    auto rng_b = make_rng(4031);
    auto pool = sample_regions(universe, scorer.pool_size, rng_b);
    std::uint64_t mc_seed = rng_b();
    std::map<int, std::vector<PredictionMap>> per_image;
    std::vector<std::pair<double, RegionId>> scored;
    for (RegionId r : pool) {
      auto it = per_image.find(r.image_index);
      if (it == per_image.end()) {
        auto passes = learner.predict_mc_dropout(
            ds.images[static_cast<std::size_t>(r.image_index)], scorer.mc_passes,
            derive_seed(mc_seed, static_cast<std::uint64_t>(r.image_index)));
        it = per_image.emplace(r.image_index, std::move(passes)).first;
      }
      scored.push_back({oracles::score_bald(it->second, r.row * 8, r.col * 8, 8, 8), r});
    }
    CHECK(got == manual_top_k(std::move(scored), 5));
  }

  SUBCASE("fewer than two passes is rejected") {
    scorer.mc_passes = 1;
    auto rng = make_rng(4032);
    CHECK_THROWS_AS(acquire(scorer, ctx, 5, rng), std::invalid_argument);
  }
}

TEST_CASE("policy acquisition picks greedily from disjoint candidate pools") {
  SceneDataset ds = make_scene();
  Learner learner = make_learner(20);
  FeatureConfig features;
  std::vector<RegionId> universe = all_regions(ds);

  // images 4 and 5 define the state; image 0 is already labeled
  std::vector<int> state_imgs{4, 5};
  std::vector<RegionId> labeled = image_regions(ds, 0);
  std::vector<RegionId> unlabeled;
  for (int i = 1; i < 4; ++i) {
    auto regs = image_regions(ds, i);
    unlabeled.insert(unlabeled.end(), regs.begin(), regs.end());
  }

  AgentConfig acfg;
  acfg.layout.state_widths = {2};
  acfg.layout.action_widths = {2};
  acfg.layout.fusion_width = 2;
  Agent agent(acfg, features, 4, 2 * ds.regions_per_image(), 21);

  AcquisitionScorer scorer;
  scorer.method = AcquisitionMethod::kPolicy;
  scorer.policy = &agent;
  scorer.features = features;
  scorer.pool_size = 4;

  AcquisitionContext ctx{ds, learner, features, state_imgs, labeled, unlabeled};

  SUBCASE("selections are distinct unlabeled regions, reproducibly") {
    auto rng_a = make_rng(4040);
    auto got = acquire(scorer, ctx, 2, rng_a);
    REQUIRE(got.size() == 2);
    CHECK(got[0] != got[1]);
    for (RegionId r : got)
      CHECK(std::find(unlabeled.begin(), unlabeled.end(), r) != unlabeled.end());

    auto rng_b = make_rng(4040);
    CHECK(acquire(scorer, ctx, 2, rng_b) == got);
  }

  SUBCASE("a missing agent is rejected") {
    scorer.policy = nullptr;
    auto rng = make_rng(4041);
    CHECK_THROWS_AS(acquire(scorer, ctx, 2, rng), std::invalid_argument);
  }
}
