#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "alseg/runner.hpp"
#include "alseg/rng.hpp"

using namespace alseg;

namespace {

GenConfig runner_gen() {
  GenConfig g;
  g.num_images = 8;
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
  g.seed = 33;
  return g;
}

LearnerConfig small_learner() {
  LearnerConfig cfg;
  cfg.hidden_dims = {8};
  cfg.dropout_rate = 0.1;
  cfg.sgd = {0.05, 0.9, 1e-4};
  cfg.batch_size = 128;
  return cfg;
}

AgentConfig small_agent() {
  AgentConfig cfg;
  cfg.layout.state_widths = {2};
  cfg.layout.action_widths = {2};
  cfg.layout.fusion_width = 2;
  cfg.subactions = 4;
  cfg.pool_size = 5;
  cfg.batch_size = 8;
  cfg.replay_capacity = 64;
  cfg.target_sync_period = 4;
  cfg.sgd = {0.01, 0.9, 0.0};
  cfg.gamma = 0.9;
  cfg.epsilon = {1.0, 0.05, 100};
  return cfg;
}

Splits runner_splits() { return Splits{{0, 1, 2}, {3, 4}, {5}, {6}}; }

std::vector<RegionId> pool_regions(const SceneDataset& ds, const std::vector<int>& images) {
  std::vector<RegionId> out;
  for (int i : images) {
    auto regs = image_regions(ds, i);
    out.insert(out.end(), regs.begin(), regs.end());
  }
  return out;
}

}  // namespace

TEST_CASE("quantized rewards telescope exactly") {
  CHECK(quantize_miou(0.25) == 0.25);  // dyadic values are fixed points
  CHECK(quantize_miou(quantize_miou(0.7391)) == quantize_miou(0.7391));

  auto rng = make_rng(5001);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> mious(101);
    for (double& m : mious) m = u(rng);
    double sum = 0.0;
    for (std::size_t i = 1; i < mious.size(); ++i)
      sum += reward_from_mious(mious[i - 1], mious[i]);
    CHECK(sum == quantize_miou(mious.back()) - quantize_miou(mious.front()));
    CHECK(std::abs(quantize_miou(mious[rep]) - mious[rep]) <= std::ldexp(1.0, -41));
  }

  CHECK(reward_from_mious(0.25, 0.40) == doctest::Approx(0.15).epsilon(1e-9));
}

TEST_CASE("learner rewards are antisymmetric and vanish for identical models") {
  SceneDataset ds = generate_scenes(runner_gen());
  Learner a(small_learner(), 4, 3, 61);
  Learner b = a;
  b.train_step(ds, image_regions(ds, 0));

  std::vector<int> reward_imgs{5};
  CHECK(compute_reward(a, a, ds, reward_imgs) == 0.0);
  CHECK(compute_reward(a, b, ds, reward_imgs) == -compute_reward(b, a, ds, reward_imgs));
}

TEST_CASE("episode step counts round up the final short step") {
  CHECK(episode_step_count(500, 24) == 21);
  CHECK(episode_step_count(4, 4) == 1);
  CHECK(episode_step_count(10, 4) == 3);
  CHECK(episode_step_count(0, 4) == 0);
  CHECK_THROWS_AS(episode_step_count(-1, 4), std::invalid_argument);
  CHECK_THROWS_AS(episode_step_count(4, 0), std::invalid_argument);
}

TEST_CASE("a one-step episode banks terminal transitions") {
  SceneDataset ds = generate_scenes(runner_gen());
  Splits splits = runner_splits();
  Learner learner(small_learner(), 4, 3, 62);
  FeatureConfig features;
  Agent agent(small_agent(), features, 4, ds.regions_per_image(), 63);

  double start = quantize_miou(evaluate_miou(learner, ds, splits.reward));
  std::int64_t step = 0;
  EpisodeLog log = run_training_episode(ds, splits, learner, agent, features, 4, step, 71);

  REQUIRE(log.steps.size() == 1);
  CHECK(step == 1);
  CHECK(log.miou_start == start);
  CHECK(log.steps[0].selected.size() == 4);
  CHECK(log.cumulative_reward == log.miou_end - log.miou_start);
  CHECK(!log.steps[0].loss.has_value());  // replay is still below one batch

  std::vector<RegionId> train_regions = pool_regions(ds, splits.train_pool);
  std::set<RegionId> uniq;
  for (RegionId r : log.steps[0].selected) {
    CHECK(uniq.insert(r).second);
    CHECK(std::find(train_regions.begin(), train_regions.end(), r) != train_regions.end());
  }

  REQUIRE(agent.replay().size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(agent.replay().at(i).terminal);
    CHECK(agent.replay().at(i).next_state == nullptr);
    CHECK(agent.replay().at(i).reward == log.steps[0].reward);
  }
}

TEST_CASE("multi-step episodes respect the budget, telescope, and lag transitions") {
  SceneDataset ds = generate_scenes(runner_gen());
  Splits splits = runner_splits();
  Learner learner(small_learner(), 4, 3, 64);
  FeatureConfig features;
  Agent agent(small_agent(), features, 4, ds.regions_per_image(), 65);

  std::int64_t step = 5;  // mid-schedule: epsilon must follow the global counter
  EpisodeLog log = run_training_episode(ds, splits, learner, agent, features, 10, step, 72);

  REQUIRE(log.steps.size() == 3);
  CHECK(step == 8);
  CHECK(log.steps[0].selected.size() == 4);
  CHECK(log.steps[1].selected.size() == 4);
  CHECK(log.steps[2].selected.size() == 2);  // short remainder step

  for (int i = 0; i < 3; ++i) {
    CHECK(log.steps[static_cast<std::size_t>(i)].step == i);
    CHECK(log.steps[static_cast<std::size_t>(i)].epsilon ==
          agent.config().epsilon.at(5 + i));
  }

  // rewards telescope to the overall quantized improvement
  double sum = 0.0;
  std::set<RegionId> all_selected;
  for (const StepLog& s : log.steps) {
    sum += s.reward;
    for (RegionId r : s.selected) CHECK(all_selected.insert(r).second);
  }
  CHECK(all_selected.size() == 10);
  CHECK(sum == log.miou_end - log.miou_start);
  CHECK(log.cumulative_reward == sum);

  // the first update with a full batch happens at the second step
  CHECK(!log.steps[0].loss.has_value());
  CHECK(log.steps[1].loss.has_value());
  CHECK(log.steps[2].loss.has_value());

  // one-step lag: step-t transitions carry step-(t+1) pools; terminal at the end
  REQUIRE(agent.replay().size() == 10);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK_FALSE(agent.replay().at(i).terminal);
    REQUIRE(agent.replay().at(i).next_pool != nullptr);
    CHECK(agent.replay().at(i).next_pool->size() == 5);
  }
  for (std::size_t i = 8; i < 10; ++i) CHECK(agent.replay().at(i).terminal);
  // step 1's four transitions wrap around step 2's two pools
  CHECK(agent.replay().at(4).next_pool == agent.replay().at(6).next_pool);
  CHECK(agent.replay().at(5).next_pool == agent.replay().at(7).next_pool);
  CHECK(agent.replay().at(4).next_pool != agent.replay().at(5).next_pool);
  // step 0's four transitions each get their own step-1 pool
  std::set<const CandidatePool*> step0_pools;
  for (std::size_t i = 0; i < 4; ++i)
    step0_pools.insert(agent.replay().at(i).next_pool.get());
  CHECK(step0_pools.size() == 4);
}

TEST_CASE("episodes are deterministic given seeds and reject bad budgets") {
  SceneDataset ds = generate_scenes(runner_gen());
  Splits splits = runner_splits();
  FeatureConfig features;

  SUBCASE("same seeds reproduce the log bit for bit") {
    Learner la(small_learner(), 4, 3, 66), lb(small_learner(), 4, 3, 66);
    Agent aa(small_agent(), features, 4, ds.regions_per_image(), 67);
    Agent ab(small_agent(), features, 4, ds.regions_per_image(), 67);
    std::int64_t sa = 0, sb = 0;
    EpisodeLog ea = run_training_episode(ds, splits, la, aa, features, 10, sa, 73);
    EpisodeLog eb = run_training_episode(ds, splits, lb, ab, features, 10, sb, 73);

    REQUIRE(ea.steps.size() == eb.steps.size());
    for (std::size_t i = 0; i < ea.steps.size(); ++i) {
      CHECK(ea.steps[i].selected == eb.steps[i].selected);
      CHECK(ea.steps[i].reward == eb.steps[i].reward);
      CHECK(ea.steps[i].epsilon == eb.steps[i].epsilon);
      CHECK(ea.steps[i].loss == eb.steps[i].loss);
    }
    CHECK(ea.miou_start == eb.miou_start);
    CHECK(ea.miou_end == eb.miou_end);
    CHECK(la == lb);
    CHECK(aa.online() == ab.online());
  }

  SUBCASE("a zero budget is an empty episode") {
    Learner learner(small_learner(), 4, 3, 68);
    Agent agent(small_agent(), features, 4, ds.regions_per_image(), 69);
    std::int64_t step = 3;
    EpisodeLog log = run_training_episode(ds, splits, learner, agent, features, 0, step, 74);
    CHECK(log.steps.empty());
    CHECK(step == 3);
    CHECK(log.miou_start == log.miou_end);
    CHECK(log.cumulative_reward == 0.0);
    CHECK(agent.replay().size() == 0);
  }

  SUBCASE("budgets beyond the train pool are rejected") {
    Learner learner(small_learner(), 4, 3, 68);
    Agent agent(small_agent(), features, 4, ds.regions_per_image(), 69);
    std::int64_t step = 0;
    CHECK_THROWS_AS(run_training_episode(ds, splits, learner, agent, features, 28, step, 75),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_training_episode(ds, splits, learner, agent, features, -1, step, 75),
                    std::invalid_argument);
  }

  SUBCASE("a small replay keeps only the newest transitions") {
    Learner learner(small_learner(), 4, 3, 68);
    AgentConfig cfg = small_agent();
    cfg.replay_capacity = 6;
    Agent agent(cfg, features, 4, ds.regions_per_image(), 69);
    std::int64_t step = 0;
    run_training_episode(ds, splits, learner, agent, features, 10, step, 76);
    CHECK(agent.replay().size() == 6);
  }

  SUBCASE("replaying all labeled regions keeps the episode invariants") {
    LearnerConfig lc = small_learner();
    lc.replay_labeled = true;
    Learner learner(lc, 4, 3, 68);
    Agent agent(small_agent(), features, 4, ds.regions_per_image(), 69);
    std::int64_t step = 0;
    EpisodeLog log = run_training_episode(ds, splits, learner, agent, features, 10, step, 77);
    double sum = 0.0;
    std::size_t count = 0;
    for (const StepLog& s : log.steps) {
      sum += s.reward;
      count += s.selected.size();
    }
    CHECK(count == 10);
    CHECK(sum == log.miou_end - log.miou_start);
  }
}

TEST_CASE("train_policy tracks the best episode and resolves the epsilon decay") {
  SceneDataset ds = generate_scenes(runner_gen());
  Splits splits = runner_splits();
  Learner theta0(small_learner(), 4, 3, 80);
  FeatureConfig features;
  AgentConfig acfg = small_agent();
  acfg.epsilon = {1.0, 0.05, 0};  // resolve from the run setup

  SUBCASE("zero episodes return the freshly seeded agent") {
    TrainPolicyResult r = train_policy(ds, splits, theta0, acfg, features, 0, 4, 99);
    CHECK(r.episodes.empty());
    CHECK(r.best_episode == -1);
    CHECK(r.steps == 0);

    AgentConfig resolved = acfg;
    resolved.epsilon.decay_steps = 1;
    Agent expected(resolved, features, 4, ds.regions_per_image(), derive_seed(99, "agent"));
    CHECK(r.agent.config() == expected.config());
    CHECK(r.agent.online() == expected.online());
  }

  SUBCASE("the best episode is the first cumulative-reward maximum") {
    TrainPolicyResult r = train_policy(ds, splits, theta0, acfg, features, 3, 4, 100);
    REQUIRE(r.episodes.size() == 3);
    CHECK(r.steps == 3);

    int best = 0;
    for (int e = 1; e < 3; ++e)
      if (r.episodes[static_cast<std::size_t>(e)].cumulative_reward >
          r.episodes[static_cast<std::size_t>(best)].cumulative_reward)
        best = e;
    CHECK(r.best_episode == best);

    // decay resolved to half of 3 steps: only the first step explores fully
    CHECK(r.episodes[0].steps[0].epsilon == 1.0);
    CHECK(r.episodes[1].steps[0].epsilon == 0.05);
    CHECK(r.episodes[2].steps[0].epsilon == 0.05);
  }

  SUBCASE("negative episode counts are rejected") {
    CHECK_THROWS_AS(train_policy(ds, splits, theta0, acfg, features, -1, 4, 101),
                    std::invalid_argument);
  }
}

TEST_CASE("acquisition runs snapshot nested label sets at each budget") {
  SceneDataset ds = generate_scenes(runner_gen());
  Splits splits = runner_splits();
  Learner theta0(small_learner(), 4, 3, 81);
  AcquisitionScorer scorer;
  scorer.method = AcquisitionMethod::kUniform;
  scorer.pool_size = 18;

  AcquisitionSettings settings;
  settings.budgets = {4, 8};
  settings.regions_per_round = 4;
  settings.patience = 0;
  settings.max_epochs = 3;

  SUBCASE("budget zero evaluates the initial learner untouched") {
    AcquisitionSettings zero;
    zero.budgets = {0};
    AcquisitionRun run = run_acquisition(scorer, ds, splits, theta0, zero, 200);
    REQUIRE(run.budgets.size() == 1);
    const BudgetResult& b = run.budgets[0];
    CHECK(b.budget == 0);
    CHECK(b.labeled.empty());
    CHECK(b.epochs == 0);
    CHECK(b.label_entropy == 0.0);
    CHECK(b.class_frequencies == std::vector<double>(4, 0.0));
    std::vector<int> holdout = holdout_indices(ds, splits);
    CHECK(b.miou == evaluate(theta0, ds, holdout).mean);
    CHECK(b.miou == b.holdout.mean);
  }

  SUBCASE("snapshots nest and report frequencies of the revealed pixels") {
    AcquisitionRun run = run_acquisition(scorer, ds, splits, theta0, settings, 201);
    CHECK(run.method == AcquisitionMethod::kUniform);
    CHECK(run.seed == 201);
    REQUIRE(run.budgets.size() == 2);
    const BudgetResult& b4 = run.budgets[0];
    const BudgetResult& b8 = run.budgets[1];
    REQUIRE(b4.labeled.size() == 4);
    REQUIRE(b8.labeled.size() == 8);
    CHECK(std::equal(b4.labeled.begin(), b4.labeled.end(), b8.labeled.begin()));

    std::vector<RegionId> eval_regions = pool_regions(ds, splits.eval_pool);
    std::set<RegionId> uniq;
    for (RegionId r : b8.labeled) {
      CHECK(uniq.insert(r).second);
      CHECK(std::find(eval_regions.begin(), eval_regions.end(), r) != eval_regions.end());
    }

    for (const BudgetResult& b : run.budgets) {
      CHECK(b.epochs >= 1);
      CHECK(b.epochs <= 3);
      CHECK(b.miou == b.holdout.mean);
      CHECK(b.holdout.per_class.size() == 4);
      double sum = 0.0;
      for (double f : b.class_frequencies) sum += f;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(b.class_frequencies == label_histogram(ds, b.labeled));
      CHECK(b.label_entropy == distribution_entropy(b.class_frequencies));
    }

    AcquisitionRun again = run_acquisition(scorer, ds, splits, theta0, settings, 201);
    CHECK(again.budgets[1].labeled == b8.labeled);
    CHECK(again.budgets[1].miou == b8.miou);
  }

  SUBCASE("invalid settings are rejected") {
    AcquisitionSettings bad = settings;
    bad.budgets = {4, 4};
    CHECK_THROWS_AS(run_acquisition(scorer, ds, splits, theta0, bad, 202),
                    std::invalid_argument);
    bad.budgets = {-1};
    CHECK_THROWS_AS(run_acquisition(scorer, ds, splits, theta0, bad, 202),
                    std::invalid_argument);
    bad.budgets = {19};  // eval pool holds 18 regions
    CHECK_THROWS_AS(run_acquisition(scorer, ds, splits, theta0, bad, 202),
                    std::invalid_argument);
    bad = settings;
    bad.regions_per_round = 0;
    CHECK_THROWS_AS(run_acquisition(scorer, ds, splits, theta0, bad, 202),
                    std::invalid_argument);
    bad = settings;
    bad.patience = -1;
    CHECK_THROWS_AS(run_acquisition(scorer, ds, splits, theta0, bad, 202),
                    std::invalid_argument);
  }
}

TEST_CASE("compare_methods lays runs out variant-major and is thread-count invariant") {
  SceneDataset ds = generate_scenes(runner_gen());
  Splits splits = runner_splits();
  Learner theta0(small_learner(), 4, 3, 82);

  AcquisitionScorer uniform;
  uniform.method = AcquisitionMethod::kUniform;
  uniform.pool_size = 18;
  AcquisitionScorer entropy = uniform;
  entropy.method = AcquisitionMethod::kEntropy;
  std::vector<AcquisitionScorer> variants{uniform, entropy};
  std::vector<std::uint64_t> seeds{11, 12};

  AcquisitionSettings settings;
  settings.budgets = {4, 8};
  settings.regions_per_round = 4;
  settings.patience = 0;
  settings.max_epochs = 2;

  CompareResult serial = compare_methods(variants, seeds, ds, splits, theta0, settings, 1);
  REQUIRE(serial.runs.size() == 4);
  CHECK(serial.runs[0].method == AcquisitionMethod::kUniform);
  CHECK(serial.runs[0].seed == 11);
  CHECK(serial.runs[1].method == AcquisitionMethod::kUniform);
  CHECK(serial.runs[1].seed == 12);
  CHECK(serial.runs[2].method == AcquisitionMethod::kEntropy);
  CHECK(serial.runs[2].seed == 11);
  CHECK(serial.runs[3].method == AcquisitionMethod::kEntropy);
  CHECK(serial.runs[3].seed == 12);

  CompareResult parallel = compare_methods(variants, seeds, ds, splits, theta0, settings, 4);
  REQUIRE(parallel.runs.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(parallel.runs[i].budgets.size() == serial.runs[i].budgets.size());
    for (std::size_t b = 0; b < serial.runs[i].budgets.size(); ++b) {
      CHECK(parallel.runs[i].budgets[b].labeled == serial.runs[i].budgets[b].labeled);
      CHECK(parallel.runs[i].budgets[b].miou == serial.runs[i].budgets[b].miou);
    }
  }
}

TEST_CASE("pretraining freezes a deterministic restart point") {
  SceneDataset ds = generate_scenes(runner_gen());
  Splits splits = runner_splits();
  GenConfig gen = runner_gen();
  PretrainConfig pre{4, 0.35, 0, 2};

  Learner a = make_pretrained_learner(ds, splits, gen, small_learner(), pre, 300);
  Learner b = make_pretrained_learner(ds, splits, gen, small_learner(), pre, 300);
  CHECK(a == b);

  // the returned state is its own initial snapshot
  Learner drifted = a;
  drifted.train_step(ds, image_regions(ds, 0));
  drifted.reset_to_initial();
  CHECK(drifted == a);

  SUBCASE("a source-free pretrain uses only the train pool") {
    PretrainConfig nosrc{0, 0.0, 0, 2};
    Learner c = make_pretrained_learner(ds, splits, gen, small_learner(), nosrc, 301);
    Learner d = make_pretrained_learner(ds, splits, gen, small_learner(), nosrc, 301);
    CHECK(c == d);
  }

  SUBCASE("invalid settings are rejected") {
    CHECK_THROWS_AS((PretrainConfig{-1, 0.35, 0, 2}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((PretrainConfig{4, 1.5, 0, 2}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((PretrainConfig{4, 0.35, -1, 2}.validate()), std::invalid_argument);
    SceneDataset empty;
    CHECK_THROWS_AS(make_pretrained_learner(empty, splits, gen, small_learner(), pre, 302),
                    std::invalid_argument);
  }
}

TEST_CASE("run_experiment wires variants, seeds, and full-image budgets together") {
  ExperimentConfig cfg;
  cfg.gen = runner_gen();
  cfg.splits = {3, 2, 1, 1};
  cfg.learner = small_learner();
  cfg.pretrain = {4, 0.35, 0, 2};
  cfg.agent = small_agent();
  cfg.agent.pool_size = 3;
  cfg.agent.batch_size = 4;
  cfg.episodes = 1;
  cfg.train_budget = 8;
  cfg.acquisition.budgets = {4, 8, 9};
  cfg.acquisition.regions_per_round = 4;
  cfg.acquisition.patience = 0;
  cfg.acquisition.max_epochs = 3;
  cfg.variants = {
      {"uniform", AcquisitionMethod::kUniform, 18, 20, FeatureVariant::kThreePoolKl, false},
      {"dqn", AcquisitionMethod::kPolicy, 3, 20, FeatureVariant::kThreePoolKl, false},
      {"dqn_full", AcquisitionMethod::kPolicy, 2, 20, FeatureVariant::kThreePoolKl, true},
  };
  cfg.seeds = {1, 2};
  cfg.jobs = 1;

  SceneDataset ds = generate_scenes(cfg.gen);
  ExperimentResult serial = run_experiment(cfg, ds, nullptr);
  REQUIRE(serial.runs.size() == 6);

  // variant-major, seed-minor
  CHECK(serial.runs[0].label == "uniform");
  CHECK(serial.runs[1].label == "uniform");
  CHECK(serial.runs[2].label == "dqn");
  CHECK(serial.runs[4].label == "dqn_full");
  CHECK(serial.runs[0].run.seed == 1);
  CHECK(serial.runs[1].run.seed == 2);

  // region-denominated budgets; full-image rows keep only multiples of the
  // per-image region count (9) and scale back to regions
  REQUIRE(serial.runs[0].run.budgets.size() == 3);
  CHECK(serial.runs[0].run.budgets[2].budget == 9);
  REQUIRE(serial.runs[2].run.budgets.size() == 3);
  REQUIRE(serial.runs[4].run.budgets.size() == 1);
  CHECK(serial.runs[4].run.budgets[0].budget == 9);
  CHECK(serial.runs[4].run.budgets[0].labeled.size() == 1);  // one whole image

  SUBCASE("thread count does not change the results") {
    ExperimentConfig par = cfg;
    par.jobs = 2;
    ExperimentResult threaded = run_experiment(par, ds, nullptr);
    REQUIRE(threaded.runs.size() == serial.runs.size());
    for (std::size_t i = 0; i < serial.runs.size(); ++i) {
      CHECK(threaded.runs[i].label == serial.runs[i].label);
      REQUIRE(threaded.runs[i].run.budgets.size() == serial.runs[i].run.budgets.size());
      for (std::size_t b = 0; b < serial.runs[i].run.budgets.size(); ++b) {
        CHECK(threaded.runs[i].run.budgets[b].miou == serial.runs[i].run.budgets[b].miou);
        CHECK(threaded.runs[i].run.budgets[b].labeled ==
              serial.runs[i].run.budgets[b].labeled);
      }
    }
  }

  SUBCASE("duplicate labels and empty run matrices are rejected") {
    ExperimentConfig bad = cfg;
    bad.variants[1].label = "uniform";
    CHECK_THROWS_WITH_AS(run_experiment(bad, ds, nullptr), doctest::Contains("duplicate"),
                         std::invalid_argument);
    bad = cfg;
    bad.variants.clear();
    CHECK_THROWS_AS(run_experiment(bad, ds, nullptr), std::invalid_argument);
    bad = cfg;
    bad.seeds.clear();
    CHECK_THROWS_AS(run_experiment(bad, ds, nullptr), std::invalid_argument);
  }
}
