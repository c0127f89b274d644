#pragma once

#include <alseg/runner.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace alseg {

// JSON-facing description of one comparison variant.
struct VariantSpec {
  std::string label;
  std::string method = "uniform";  // uniform | entropy | bald | dqn
  int pool_size = 500;
  int mc_passes = 20;
  std::string features = "three_pool_kl";  // max_pool | three_pool | three_pool_kl
  bool full_image = false;
};

// Root configuration consumed by every CLI command; commands read the
// sections they need. Unknown keys anywhere are an error.
struct RunConfig {
  std::string name = "run";
  GenConfig gen;
  SplitSizes splits;
  LearnerConfig learner;
  PretrainConfig pretrain;
  FeatureConfig features;
  AgentConfig agent;
  int episodes = 40;
  int train_budget = 64;
  std::vector<int> eval_budgets{32, 64};
  int eval_regions_per_round = 8;
  int patience = 10;
  int max_epochs = 200;
  std::vector<VariantSpec> variants;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int jobs = 1;
  std::string dataset_dir;  // when set, load instead of generating

  void validate() const;
};

FeatureVariant parse_feature_variant(const std::string& name);
std::string feature_variant_name(FeatureVariant v);

// Strict parse: every key must be recognized; errors carry the offending
// key path.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& config, const std::filesystem::path& path);

// Translation into the runner's experiment plan.
ExperimentConfig to_experiment_config(const RunConfig& config);

// Pinned presets; the shipped configs/*.json mirror these.
RunConfig benchmark_preset();
RunConfig camvid_analog_preset();
RunConfig cityscapes_analog_preset();

}  // namespace alseg
