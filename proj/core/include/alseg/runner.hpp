#pragma once

#include <alseg/baselines.hpp>
#include <alseg/dataset.hpp>
#include <alseg/featurize.hpp>
#include <alseg/learner.hpp>
#include <alseg/metrics.hpp>
#include <alseg/policy.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace alseg {

// Mean-IoU values are snapped to a 2^-40 grid before differencing so that
// per-step rewards telescope exactly: summing them over an episode
// reproduces quantize(end) - quantize(start) in double arithmetic.
double quantize_miou(double miou);
double reward_from_mious(double before, double after);
double compute_reward(const Learner& before, const Learner& after, const SceneDataset& dataset,
                      std::span<const int> reward_images);

// Steps an episode with this budget takes: full steps of K plus one short
// remainder step when K does not divide the budget.
int episode_step_count(int budget, int regions_per_step);

struct StepLog {
  int step = 0;
  double epsilon = 0.0;
  double reward = 0.0;
  std::optional<double> loss;  // absent while the replay buffer warms up
  std::vector<RegionId> selected;
};

struct EpisodeLog {
  std::vector<StepLog> steps;
  double cumulative_reward = 0.0;
  double miou_start = 0.0;  // quantized mIoU on the reward set at theta_0
  double miou_end = 0.0;
};

// One policy-training episode over the train-pool regions: the learner
// restarts from theta_0, each step labels K regions chosen epsilon-greedily
// from disjoint candidate pools, trains one step on them, and banks K
// decomposed transitions plus one agent update. Ends when `budget` regions
// are labeled; a final short step handles budgets not divisible by K.
// `global_step` advances once per step and drives the epsilon schedule.
EpisodeLog run_training_episode(const SceneDataset& dataset, const Splits& splits,
                                Learner& learner, Agent& agent, const FeatureConfig& features,
                                int budget, std::int64_t& global_step, std::uint64_t episode_seed);

struct TrainPolicyResult {
  Agent agent;                        // snapshot with the best episode reward
  std::vector<EpisodeLog> episodes;
  int best_episode = -1;
  std::int64_t steps = 0;
};

// Runs `episodes` training episodes against one shared agent and replay
// buffer; keeps the agent snapshot from the best-cumulative-reward episode.
// An epsilon schedule with decay_steps 0 is resolved to half the total
// steps here.
TrainPolicyResult train_policy(const SceneDataset& dataset, const Splits& splits,
                               const Learner& theta0, const AgentConfig& agent_config,
                               const FeatureConfig& features, int episodes, int budget,
                               std::uint64_t seed);

struct BudgetResult {
  int budget = 0;
  std::vector<RegionId> labeled;          // snapshot of the trajectory
  IouReport holdout;                      // after convergence training
  double miou = 0.0;
  double label_entropy = 0.0;             // of the revealed ground-truth pixels
  std::vector<double> class_frequencies;  // same pixels, normalized
  int epochs = 0;
};

struct AcquisitionRun {
  AcquisitionMethod method = AcquisitionMethod::kUniform;
  std::uint64_t seed = 0;
  std::vector<BudgetResult> budgets;
};

struct AcquisitionSettings {
  std::vector<int> budgets;    // ascending region counts; 0 evaluates theta_0
  int regions_per_round = 8;   // K
  int patience = 10;
  int max_epochs = 200;
};

// One acquisition trajectory on the eval-pool regions: label K per round
// with the scorer, one learner step per round; snapshot the labeled set at
// each requested budget. Each snapshot then restarts from theta_0, trains
// to convergence (early stopping on the reward images), and is scored on
// the held-out images.
AcquisitionRun run_acquisition(const AcquisitionScorer& scorer, const SceneDataset& dataset,
                               const Splits& splits, const Learner& theta0,
                               const AcquisitionSettings& settings, std::uint64_t seed);

struct CompareResult {
  std::vector<AcquisitionRun> runs;  // variant-major, then seed
};

// run_acquisition for every (variant, seed) pair; runs are independent and
// execute on up to `jobs` threads with deterministic, order-stable results.
CompareResult compare_methods(std::span<const AcquisitionScorer> variants,
                              std::span<const std::uint64_t> seeds,
                              const SceneDataset& dataset, const Splits& splits,
                              const Learner& theta0, const AcquisitionSettings& settings,
                              int jobs);

struct PretrainConfig {
  int source_images = 30;         // domain-shifted images backing theta_0
  double signature_jitter = 0.35; // how far the source class signatures drift
  int patience = 5;
  int max_epochs = 60;

  void validate() const;
  bool operator==(const PretrainConfig&) const = default;
};

// theta_0: a learner trained to convergence on a signature-jittered source
// set plus the train-pool labels, early-stopped on the reward images, with
// the result frozen as its initial snapshot.
Learner make_pretrained_learner(const SceneDataset& dataset, const Splits& splits,
                                const GenConfig& gen, const LearnerConfig& learner_config,
                                const PretrainConfig& pretrain, std::uint64_t seed);

// One line of the method comparison. Policy variants may re-featurize
// (ablations) or switch to whole-image labeling; those train their own
// agent per seed.
struct ExperimentVariant {
  std::string label;  // report name, unique within a run
  AcquisitionMethod method = AcquisitionMethod::kUniform;
  int pool_size = 500;
  int mc_passes = 20;
  FeatureVariant features = FeatureVariant::kThreePoolKl;
  bool full_image = false;  // label whole images; budgets stay region-denominated
};

struct ExperimentConfig {
  GenConfig gen;
  SplitSizes splits;
  LearnerConfig learner;
  PretrainConfig pretrain;
  FeatureConfig features;
  AgentConfig agent;
  int episodes = 40;
  int train_budget = 64;
  AcquisitionSettings acquisition;
  std::vector<ExperimentVariant> variants;
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
};

struct VariantRun {
  std::string label;
  AcquisitionRun run;
};

struct ExperimentResult {
  std::vector<VariantRun> runs;  // variant-major, then seed order
};

// The full comparison pipeline: build theta_0 once, then per seed train
// whatever policies the variants call for and run every acquisition
// trajectory. Seeds execute on up to `jobs` threads. `progress`, when
// non-null, receives one line per finished unit. Full-image variants are
// evaluated only at budgets divisible by the per-image region count.
ExperimentResult run_experiment(const ExperimentConfig& config, const SceneDataset& dataset,
                                std::ostream* progress);

}  // namespace alseg
