#include "alseg/config.hpp"
#include "alseg/dataset.hpp"
#include "alseg/report.hpp"
#include "alseg/rng.hpp"
#include "alseg/runner.hpp"
#include "alseg/version.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

namespace fs = std::filesystem;

namespace {

// ALSEG_OUT_ROOT anchors default output locations; unset means cwd.
fs::path out_root() {
  const char* env = std::getenv("ALSEG_OUT_ROOT");
  return env && *env ? fs::path(env) : fs::path(".");
}

alseg::SceneDataset obtain_dataset(const alseg::RunConfig& config) {
  if (!config.dataset_dir.empty()) return alseg::load_dataset(config.dataset_dir);
  return alseg::generate_scenes(config.gen);
}

struct Args {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int jobs = 0;
  bool has_jobs = false;
  std::string run_dir;
};

int cmd_gen(const Args& args) {
  alseg::RunConfig config = alseg::load_run_config(args.config_path);
  if (args.has_seed) config.gen.seed = args.seed;
  config.validate();
  fs::path dir = !args.out.empty()    ? fs::path(args.out)
                 : !config.dataset_dir.empty() ? fs::path(config.dataset_dir)
                                               : out_root() / "datasets" / config.name;
  alseg::SceneDataset dataset = alseg::generate_scenes(config.gen);
  alseg::save_dataset(dataset, dir);
  std::cout << "dataset: " << dir.string() << " (" << dataset.images.size() << " images, "
            << dataset.num_classes << " classes)\n";
  return 0;
}

int cmd_train_policy(const Args& args) {
  alseg::RunConfig config = alseg::load_run_config(args.config_path);
  config.validate();
  std::uint64_t run_seed = args.has_seed ? args.seed : config.seeds.front();
  alseg::SceneDataset dataset = obtain_dataset(config);
  alseg::Splits splits =
      alseg::split_dataset(dataset, config.splits, alseg::derive_seed(config.gen.seed, "splits"));
  alseg::Learner theta0 =
      alseg::make_pretrained_learner(dataset, splits, config.gen, config.learner, config.pretrain,
                                     alseg::derive_seed(config.gen.seed, "pretrain"));
  alseg::TrainPolicyResult result =
      alseg::train_policy(dataset, splits, theta0, config.agent, config.features, config.episodes,
                          config.train_budget, run_seed);
  fs::path dir = !args.out.empty()
                     ? fs::path(args.out)
                     : out_root() / "runs" / (config.name + "-policy-" + std::to_string(run_seed));
  alseg::write_training_run_dir(dir, config, result);
  std::cout << "policy run: " << dir.string() << " (best episode " << result.best_episode
            << ")\n";
  return 0;
}

int cmd_compare(const Args& args) {
  alseg::RunConfig config = alseg::load_run_config(args.config_path);
  if (args.has_seed) config.gen.seed = args.seed;
  if (args.has_jobs) config.jobs = args.jobs;
  config.validate();
  alseg::SceneDataset dataset = obtain_dataset(config);
  alseg::ExperimentConfig experiment = alseg::to_experiment_config(config);
  alseg::ExperimentResult result = alseg::run_experiment(experiment, dataset, &std::cerr);
  fs::path dir = !args.out.empty() ? fs::path(args.out) : out_root() / "runs" / config.name;
  alseg::write_run_dir(dir, config, result);
  std::cout << "run: " << dir.string() << "\n";
  return 0;
}

int cmd_report(const Args& args) {
  alseg::render_run_dir(args.run_dir);
  std::cout << "report: " << args.run_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"active-learning-for-segmentation workbench"};
  app.set_version_flag("--version", std::string(alseg::kVersion));
  app.require_subcommand(1);

  Args args;

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic scene dataset");
  gen->add_option("--config", args.config_path, "run config (JSON)")->required();
  CLI::Option* gen_seed = gen->add_option("--seed", args.seed, "override the generation seed");
  gen->add_option("--out", args.out, "dataset directory to write");

  CLI::App* train = app.add_subcommand("train-policy", "train the acquisition policy");
  train->add_option("--config", args.config_path, "run config (JSON)")->required();
  CLI::Option* train_seed = train->add_option("--seed", args.seed, "policy training seed");
  train->add_option("--out", args.out, "run directory to write");

  CLI::App* compare = app.add_subcommand("compare", "run the acquisition-method comparison");
  compare->add_option("--config", args.config_path, "run config (JSON)")->required();
  CLI::Option* cmp_seed = compare->add_option("--seed", args.seed, "override the generation seed");
  compare->add_option("--out", args.out, "run directory to write");
  CLI::Option* cmp_jobs = compare->add_option("--jobs", args.jobs, "worker threads for seeds");

  CLI::App* report = app.add_subcommand("report", "regenerate CSVs and plots from a manifest");
  report->add_option("dir", args.run_dir, "run directory containing manifest.json")->required();

  CLI11_PARSE(app, argc, argv);

  args.has_seed = gen_seed->count() > 0 || train_seed->count() > 0 || cmp_seed->count() > 0;
  args.has_jobs = cmp_jobs->count() > 0;

  try {
    if (gen->parsed()) return cmd_gen(args);
    if (train->parsed()) return cmd_train_policy(args);
    if (compare->parsed()) return cmd_compare(args);
    if (report->parsed()) return cmd_report(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
