#include "alseg/runner.hpp"

#include "alseg/config.hpp"
#include "alseg/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace alseg {

namespace {

std::vector<RegionId> split_regions(const SceneDataset& dataset, std::span<const int> images) {
  std::vector<RegionId> out;
  out.reserve(images.size() * static_cast<std::size_t>(dataset.regions_per_image()));
  for (int img : images) {
    auto regs = image_regions(dataset, img);
    out.insert(out.end(), regs.begin(), regs.end());
  }
  return out;
}

void remove_regions(std::vector<RegionId>& sorted_pool, std::span<const RegionId> removed) {
  for (RegionId r : removed) {
    auto it = std::lower_bound(sorted_pool.begin(), sorted_pool.end(), r);
    if (it == sorted_pool.end() || *it != r)
      throw std::invalid_argument("runner: selected region was not unlabeled");
    sorted_pool.erase(it);
  }
}

// Runs tasks 0..count-1 on up to `jobs` threads; exceptions are rethrown in
// task order so failures are deterministic.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& task) {
  if (count == 0) return;
  int workers = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

double quantize_miou(double miou) {
  return std::ldexp(static_cast<double>(std::llround(std::ldexp(miou, 40))), -40);
}

double reward_from_mious(double before, double after) {
  return quantize_miou(after) - quantize_miou(before);
}

double compute_reward(const Learner& before, const Learner& after, const SceneDataset& dataset,
                      std::span<const int> reward_images) {
  return reward_from_mious(evaluate_miou(before, dataset, reward_images),
                           evaluate_miou(after, dataset, reward_images));
}

int episode_step_count(int budget, int regions_per_step) {
  if (budget < 0 || regions_per_step < 1)
    throw std::invalid_argument("episode_step_count: bad arguments");
  return (budget + regions_per_step - 1) / regions_per_step;
}

EpisodeLog run_training_episode(const SceneDataset& dataset, const Splits& splits,
                                Learner& learner, Agent& agent, const FeatureConfig& features,
                                int budget, std::int64_t& global_step,
                                std::uint64_t episode_seed) {
  if (budget < 0) throw std::invalid_argument("episode: negative budget");
  std::vector<RegionId> unlabeled = split_regions(dataset, splits.train_pool);
  if (static_cast<std::size_t>(budget) > unlabeled.size())
    throw std::invalid_argument("episode: budget exceeds the train-pool regions");

  auto rng = make_rng(episode_seed);
  learner.reset_to_initial();
  std::vector<RegionId> labeled;
  labeled.reserve(static_cast<std::size_t>(budget));

  EpisodeLog log;
  log.miou_start = quantize_miou(evaluate_miou(learner, dataset, splits.reward));
  double prev_q = log.miou_start;

  // Transitions of step t stay pending until t+1 supplies their next state
  // and pools (or the episode ends and they become terminal).
  struct Pending {
    std::shared_ptr<const StateFeatures> state;
    std::vector<ActionFeatures> chosen;
    double reward = 0.0;
  };
  Pending pending;
  bool have_pending = false;

  const int k_cfg = agent.config().subactions;
  const int n_pool = agent.config().pool_size;

  while (static_cast<int>(labeled.size()) < budget) {
    const int t = static_cast<int>(log.steps.size());
    const int k = std::min(k_cfg, budget - static_cast<int>(labeled.size()));

    PredictionCache cache(learner, dataset);
    auto state = std::make_shared<const StateFeatures>(
        state_features(cache, dataset, splits.state, features));

    std::vector<std::vector<double>> labeled_dists;
    labeled_dists.reserve(labeled.size());
    for (RegionId r : labeled) labeled_dists.push_back(ground_truth_distribution(dataset, r));
    std::vector<RegionId> sampled =
        sample_regions(unlabeled, features.unlabeled_sample_size, rng);
    std::vector<std::vector<double>> unlabeled_dists;
    unlabeled_dists.reserve(sampled.size());
    for (RegionId r : sampled)
      unlabeled_dists.push_back(predicted_distribution(cache, dataset, r));

    std::vector<std::vector<RegionId>> pool_regions = sample_pools(unlabeled, k, n_pool, rng);
    std::vector<CandidatePool> pools(pool_regions.size());
    std::vector<std::shared_ptr<const CandidatePool>> pool_ptrs(pool_regions.size());
    for (std::size_t i = 0; i < pool_regions.size(); ++i) {
      pools[i].reserve(pool_regions[i].size());
      for (RegionId r : pool_regions[i])
        pools[i].push_back(
            action_features(r, cache, dataset, labeled_dists, unlabeled_dists, features));
      pool_ptrs[i] = std::make_shared<const CandidatePool>(pools[i]);
    }

    if (have_pending) {
      for (std::size_t j = 0; j < pending.chosen.size(); ++j)
        agent.push({pending.state, pending.chosen[j], pending.reward, state,
                    pool_ptrs[j % pool_ptrs.size()], false});
      log.steps.back().loss = agent.update(rng);
    }

    const double epsilon = agent.config().epsilon.at(global_step);
    std::vector<int> choice = agent.select_subactions(*state, pools, epsilon, rng);

    std::vector<RegionId> selected;
    std::vector<ActionFeatures> chosen_features;
    selected.reserve(choice.size());
    chosen_features.reserve(choice.size());
    for (std::size_t i = 0; i < choice.size(); ++i) {
      selected.push_back(pool_regions[i][static_cast<std::size_t>(choice[i])]);
      chosen_features.push_back(pools[i][static_cast<std::size_t>(choice[i])]);
    }

    remove_regions(unlabeled, selected);
    labeled.insert(labeled.end(), selected.begin(), selected.end());
    learner.train_step(dataset, learner.config().replay_labeled ? labeled : selected);

    const double new_q = quantize_miou(evaluate_miou(learner, dataset, splits.reward));
    const double reward = new_q - prev_q;
    prev_q = new_q;

    log.steps.push_back({t, epsilon, reward, std::nullopt, selected});
    pending = {state, std::move(chosen_features), reward};
    have_pending = true;
    ++global_step;
  }

  if (have_pending) {
    for (std::size_t j = 0; j < pending.chosen.size(); ++j)
      agent.push({pending.state, pending.chosen[j], pending.reward, nullptr, nullptr, true});
    log.steps.back().loss = agent.update(rng);
  }

  log.miou_end = prev_q;
  for (const StepLog& s : log.steps) log.cumulative_reward += s.reward;
  return log;
}

TrainPolicyResult train_policy(const SceneDataset& dataset, const Splits& splits,
                               const Learner& theta0, const AgentConfig& agent_config,
                               const FeatureConfig& features, int episodes, int budget,
                               std::uint64_t seed) {
  if (episodes < 0) throw std::invalid_argument("train_policy: negative episode count");
  AgentConfig config = agent_config;
  config.validate();
  const std::int64_t total_steps =
      static_cast<std::int64_t>(episodes) * episode_step_count(budget, config.subactions);
  if (config.epsilon.decay_steps == 0)
    config.epsilon.decay_steps = std::max<std::int64_t>(1, total_steps / 2);

  const int state_regions =
      static_cast<int>(splits.state.size()) * dataset.regions_per_image();
  Agent agent(config, features, dataset.num_classes, state_regions,
              derive_seed(seed, "agent"));

  TrainPolicyResult result{agent, {}, -1, 0};
  Learner learner = theta0;
  std::int64_t global_step = 0;
  double best_reward = 0.0;
  const std::uint64_t episode_base = derive_seed(seed, "episodes");
  for (int e = 0; e < episodes; ++e) {
    EpisodeLog log =
        run_training_episode(dataset, splits, learner, agent, features, budget, global_step,
                             derive_seed(episode_base, static_cast<std::uint64_t>(e)));
    if (result.best_episode < 0 || log.cumulative_reward > best_reward) {
      best_reward = log.cumulative_reward;
      result.best_episode = e;
      result.agent = agent;
    }
    result.episodes.push_back(std::move(log));
  }
  result.steps = global_step;
  return result;
}

AcquisitionRun run_acquisition(const AcquisitionScorer& scorer, const SceneDataset& dataset,
                               const Splits& splits, const Learner& theta0,
                               const AcquisitionSettings& settings, std::uint64_t seed) {
  if (settings.regions_per_round < 1)
    throw std::invalid_argument("acquisition: regions per round must be positive");
  if (settings.patience < 0 || settings.max_epochs < 0)
    throw std::invalid_argument("acquisition: negative training limits");
  std::vector<RegionId> unlabeled = split_regions(dataset, splits.eval_pool);
  for (std::size_t i = 0; i < settings.budgets.size(); ++i) {
    if (settings.budgets[i] < 0) throw std::invalid_argument("acquisition: negative budget");
    if (i > 0 && settings.budgets[i] <= settings.budgets[i - 1])
      throw std::invalid_argument("acquisition: budgets must be strictly ascending");
    if (static_cast<std::size_t>(settings.budgets[i]) > unlabeled.size())
      throw std::invalid_argument("acquisition: budget exceeds the eval-pool regions");
  }

  auto rng = make_rng(derive_seed(seed, "acquire"));
  Learner trajectory = theta0;
  trajectory.reset_to_initial();

  std::vector<RegionId> labeled;
  std::map<int, std::vector<RegionId>> snapshots;
  for (int b : settings.budgets)
    if (b == 0) snapshots.emplace(0, std::vector<RegionId>{});
  const int target = settings.budgets.empty() ? 0 : settings.budgets.back();

  while (static_cast<int>(labeled.size()) < target) {
    int next_budget = target;
    for (int b : settings.budgets)
      if (b > static_cast<int>(labeled.size())) {
        next_budget = b;
        break;
      }
    const int k =
        std::min(settings.regions_per_round, next_budget - static_cast<int>(labeled.size()));

    AcquisitionContext ctx{dataset,        trajectory, scorer.features,
                           splits.state,   labeled,    unlabeled};
    std::vector<RegionId> selected = acquire(scorer, ctx, k, rng);
    remove_regions(unlabeled, selected);
    labeled.insert(labeled.end(), selected.begin(), selected.end());
    trajectory.train_step(dataset, trajectory.config().replay_labeled ? labeled : selected);

    if (std::find(settings.budgets.begin(), settings.budgets.end(),
                  static_cast<int>(labeled.size())) != settings.budgets.end())
      snapshots.emplace(static_cast<int>(labeled.size()), labeled);
  }

  AcquisitionRun run{scorer.method, seed, {}};
  const std::vector<int> holdout = holdout_indices(dataset, splits);
  for (int b : settings.budgets) {
    const std::vector<RegionId>& snapshot = snapshots.at(b);
    Learner model = theta0;
    model.reset_to_initial();
    Learner::FitResult fit{};
    if (b > 0)
      fit = model.train_to_convergence(dataset, snapshot, splits.reward, settings.patience,
                                       settings.max_epochs);
    BudgetResult result;
    result.budget = b;
    result.labeled = snapshot;
    result.holdout = evaluate(model, dataset, holdout);
    result.miou = result.holdout.mean;
    result.epochs = fit.epochs;
    if (b > 0) {
      result.class_frequencies = label_histogram(dataset, snapshot);
      result.label_entropy = distribution_entropy(result.class_frequencies);
    } else {
      result.class_frequencies.assign(static_cast<std::size_t>(dataset.num_classes), 0.0);
      result.label_entropy = 0.0;
    }
    run.budgets.push_back(std::move(result));
  }
  return run;
}

CompareResult compare_methods(std::span<const AcquisitionScorer> variants,
                              std::span<const std::uint64_t> seeds,
                              const SceneDataset& dataset, const Splits& splits,
                              const Learner& theta0, const AcquisitionSettings& settings,
                              int jobs) {
  CompareResult result;
  result.runs.resize(variants.size() * seeds.size());
  parallel_for(result.runs.size(), jobs, [&](std::size_t i) {
    const std::size_t v = i / seeds.size();
    const std::size_t s = i % seeds.size();
    result.runs[i] = run_acquisition(variants[v], dataset, splits, theta0, settings, seeds[s]);
  });
  return result;
}

void PretrainConfig::validate() const {
  if (source_images < 0) throw std::invalid_argument("pretrain: negative source image count");
  if (signature_jitter < 0.0 || signature_jitter > 1.0)
    throw std::invalid_argument("pretrain: jitter must be in [0,1]");
  if (patience < 0 || max_epochs < 0)
    throw std::invalid_argument("pretrain: negative training limits");
}

Learner make_pretrained_learner(const SceneDataset& dataset, const Splits& splits,
                                const GenConfig& gen, const LearnerConfig& learner_config,
                                const PretrainConfig& pretrain, std::uint64_t seed) {
  pretrain.validate();
  learner_config.validate();
  if (dataset.num_images() == 0) throw std::invalid_argument("pretrain: empty dataset");
  const int channels = dataset.images.front().channels;

  // The pretraining corpus is a signature-jittered source set (the
  // domain-shift stand-in) plus the train-pool images; the reward images
  // ride along purely for early stopping.
  std::vector<Image> images;
  std::vector<LabelMap> labels;
  if (pretrain.source_images > 0) {
    GenConfig source = gen;
    source.num_images = pretrain.source_images;
    source.signature_jitter = pretrain.signature_jitter;
    source.seed = derive_seed(seed, "source");
    SceneDataset shifted = generate_scenes(source);
    images = std::move(shifted.images);
    labels = std::move(shifted.labels);
  }
  const int labeled_images = pretrain.source_images + static_cast<int>(splits.train_pool.size());
  for (int img : splits.train_pool) {
    images.push_back(dataset.images[static_cast<std::size_t>(img)]);
    labels.push_back(dataset.labels[static_cast<std::size_t>(img)]);
  }
  std::vector<int> reward_idx;
  for (int img : splits.reward) {
    reward_idx.push_back(static_cast<int>(images.size()));
    images.push_back(dataset.images[static_cast<std::size_t>(img)]);
    labels.push_back(dataset.labels[static_cast<std::size_t>(img)]);
  }
  SceneDataset combined(std::move(images), std::move(labels), dataset.num_classes,
                        dataset.region_height, dataset.region_width);

  std::vector<RegionId> labeled;
  for (int img = 0; img < labeled_images; ++img) {
    auto regs = image_regions(combined, img);
    labeled.insert(labeled.end(), regs.begin(), regs.end());
  }

  Learner learner(learner_config, dataset.num_classes, channels, derive_seed(seed, "learner"));
  if (pretrain.max_epochs > 0 && !labeled.empty())
    learner.train_to_convergence(combined, labeled, reward_idx, pretrain.patience,
                                 pretrain.max_epochs);
  learner.capture_initial();
  return learner;
}

namespace {

struct PolicyFlavor {
  FeatureVariant features;
  bool full_image;
  auto operator<=>(const PolicyFlavor&) const = default;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const SceneDataset& dataset,
                                std::ostream* progress) {
  if (config.variants.empty()) throw std::invalid_argument("experiment: no variants");
  if (config.seeds.empty()) throw std::invalid_argument("experiment: no seeds");
  for (std::size_t i = 0; i < config.variants.size(); ++i)
    for (std::size_t j = i + 1; j < config.variants.size(); ++j)
      if (config.variants[i].label == config.variants[j].label)
        throw std::invalid_argument("experiment: duplicate variant label " +
                                    config.variants[i].label);

  const Splits splits = split_dataset(dataset, config.splits, derive_seed(config.gen.seed, "splits"));
  std::mutex progress_mutex;
  auto report = [&](const std::string& line) {
    if (progress == nullptr) return;
    std::lock_guard<std::mutex> lock(progress_mutex);
    (*progress) << line << '\n' << std::flush;
  };

  report("pretraining the shared initial learner");
  const Learner theta0 = make_pretrained_learner(dataset, splits, config.gen, config.learner,
                                                 config.pretrain,
                                                 derive_seed(config.gen.seed, "pretrain"));
  report("initial learner ready");

  const int rpi = dataset.regions_per_image();
  bool any_full = false;
  std::vector<PolicyFlavor> flavors;
  for (const ExperimentVariant& v : config.variants) {
    if (v.full_image) any_full = true;
    if (v.method != AcquisitionMethod::kPolicy) continue;
    PolicyFlavor f{v.features, v.full_image};
    if (std::find(flavors.begin(), flavors.end(), f) == flavors.end()) flavors.push_back(f);
  }

  SceneDataset full_dataset;
  if (any_full) {
    const Image& first = dataset.images.front();
    full_dataset = with_region_dims(dataset, first.height, first.width);
  }

  AcquisitionSettings full_settings;
  full_settings.regions_per_round = 1;
  full_settings.patience = config.acquisition.patience;
  full_settings.max_epochs = config.acquisition.max_epochs;
  for (int b : config.acquisition.budgets)
    if (b % rpi == 0) full_settings.budgets.push_back(b / rpi);
  const int full_train_budget = std::max(
      1, static_cast<int>(std::llround(static_cast<double>(config.train_budget) / rpi)));

  ExperimentResult result;
  result.runs.resize(config.variants.size() * config.seeds.size());
  // One seed is one task: it trains whatever policies its variants need and
  // then runs every acquisition trajectory for that seed.
  parallel_for(config.seeds.size(), config.jobs, [&](std::size_t si) {
    const std::uint64_t seed = config.seeds[si];
    std::map<PolicyFlavor, Agent> agents;
    for (const PolicyFlavor& flavor : flavors) {
      FeatureConfig fc = config.features;
      fc.variant = flavor.features;
      AgentConfig ac = config.agent;
      const SceneDataset& ds = flavor.full_image ? full_dataset : dataset;
      int budget = config.train_budget;
      if (flavor.full_image) {
        ac.subactions = 1;
        budget = full_train_budget;
      }
      TrainPolicyResult trained =
          train_policy(ds, splits, theta0, ac, fc, config.episodes, budget, seed);
      agents.emplace(flavor, std::move(trained.agent));
      report("seed " + std::to_string(seed) + ": policy trained (" +
             std::string(feature_variant_name(flavor.features)) +
             (flavor.full_image ? ", full image)" : ")"));
    }

    for (std::size_t vi = 0; vi < config.variants.size(); ++vi) {
      const ExperimentVariant& v = config.variants[vi];
      AcquisitionScorer scorer;
      scorer.method = v.method;
      scorer.pool_size = v.pool_size;
      scorer.mc_passes = v.mc_passes;
      scorer.features = config.features;
      scorer.features.variant = v.features;
      if (v.method == AcquisitionMethod::kPolicy)
        scorer.policy = &agents.at(PolicyFlavor{v.features, v.full_image});

      const SceneDataset& ds = v.full_image ? full_dataset : dataset;
      const AcquisitionSettings& settings = v.full_image ? full_settings : config.acquisition;
      AcquisitionRun run = run_acquisition(scorer, ds, splits, theta0, settings, seed);
      if (v.full_image)
        for (BudgetResult& b : run.budgets) b.budget *= rpi;
      result.runs[vi * config.seeds.size() + si] = VariantRun{v.label, std::move(run)};
      report("seed " + std::to_string(seed) + ": " + v.label + " done");
    }
  });
  return result;
}

}  // namespace alseg
