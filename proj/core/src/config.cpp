#include "alseg/config.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace alseg {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("config: " + msg); }

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Tracks which keys a section consumed so leftovers can be rejected with
// their full path.
class Section {
 public:
  Section(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_ + " must be an object");
  }

  const json* find(const std::string& key) {
    seen_.push_back(key);
    auto it = j_->find(key);
    return it == j_->end() ? nullptr : &*it;
  }

  std::string key_path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        fail("unknown key " + join(path_, it.key()));
  }

 private:
  const json* j_;
  std::string path_;
  std::vector<std::string> seen_;
};

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path + " must be an integer");
  return j.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  fail(path + " must be a nonnegative integer");
}

double get_double(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path + " must be a number");
  return j.get<double>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path + " must be a boolean");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path + " must be a string");
  return j.get<std::string>();
}

template <typename T, typename Get>
std::vector<T> get_list(const json& j, const std::string& path, Get get) {
  if (!j.is_array()) fail(path + " must be an array");
  std::vector<T> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(get(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

nn::SgdConfig parse_sgd(const json& j, const std::string& path) {
  Section sec(j, path);
  nn::SgdConfig out;
  if (const json* p = sec.find("learning_rate")) out.learning_rate = get_double(*p, sec.key_path("learning_rate"));
  if (const json* p = sec.find("momentum")) out.momentum = get_double(*p, sec.key_path("momentum"));
  if (const json* p = sec.find("weight_decay")) out.weight_decay = get_double(*p, sec.key_path("weight_decay"));
  sec.finish();
  return out;
}

json sgd_json(const nn::SgdConfig& sgd) {
  return json{{"learning_rate", sgd.learning_rate},
              {"momentum", sgd.momentum},
              {"weight_decay", sgd.weight_decay}};
}

GenConfig parse_gen(const json& j, const std::string& path) {
  Section sec(j, path);
  GenConfig out;
  if (const json* p = sec.find("num_images")) out.num_images = get_int(*p, sec.key_path("num_images"));
  if (const json* p = sec.find("height")) out.height = get_int(*p, sec.key_path("height"));
  if (const json* p = sec.find("width")) out.width = get_int(*p, sec.key_path("width"));
  if (const json* p = sec.find("channels")) out.channels = get_int(*p, sec.key_path("channels"));
  if (const json* p = sec.find("num_classes")) out.num_classes = get_int(*p, sec.key_path("num_classes"));
  if (const json* p = sec.find("rare_class_frequencies"))
    out.rare_class_frequencies = get_list<double>(*p, sec.key_path("rare_class_frequencies"), get_double);
  if (const json* p = sec.find("object_size_range")) {
    auto v = get_list<int>(*p, sec.key_path("object_size_range"), get_int);
    if (v.size() != 2) fail(sec.key_path("object_size_range") + " must hold exactly two integers");
    out.object_size_range = {v[0], v[1]};
  }
  if (const json* p = sec.find("noise_sigma")) out.noise_sigma = get_double(*p, sec.key_path("noise_sigma"));
  if (const json* p = sec.find("signature_overlap")) out.signature_overlap = get_double(*p, sec.key_path("signature_overlap"));
  if (const json* p = sec.find("signature_jitter")) out.signature_jitter = get_double(*p, sec.key_path("signature_jitter"));
  if (const json* p = sec.find("region_height")) out.region_height = get_int(*p, sec.key_path("region_height"));
  if (const json* p = sec.find("region_width")) out.region_width = get_int(*p, sec.key_path("region_width"));
  if (const json* p = sec.find("seed")) out.seed = get_u64(*p, sec.key_path("seed"));
  if (const json* p = sec.find("signature_seed")) out.signature_seed = get_u64(*p, sec.key_path("signature_seed"));
  sec.finish();
  return out;
}

json gen_json(const GenConfig& g) {
  return json{{"num_images", g.num_images},
              {"height", g.height},
              {"width", g.width},
              {"channels", g.channels},
              {"num_classes", g.num_classes},
              {"rare_class_frequencies", g.rare_class_frequencies},
              {"object_size_range", {g.object_size_range[0], g.object_size_range[1]}},
              {"noise_sigma", g.noise_sigma},
              {"signature_overlap", g.signature_overlap},
              {"signature_jitter", g.signature_jitter},
              {"region_height", g.region_height},
              {"region_width", g.region_width},
              {"seed", g.seed},
              {"signature_seed", g.signature_seed}};
}

SplitSizes parse_splits(const json& j, const std::string& path) {
  Section sec(j, path);
  SplitSizes out;
  if (const json* p = sec.find("train_pool")) out.train_pool = get_int(*p, sec.key_path("train_pool"));
  if (const json* p = sec.find("eval_pool")) out.eval_pool = get_int(*p, sec.key_path("eval_pool"));
  if (const json* p = sec.find("reward")) out.reward = get_int(*p, sec.key_path("reward"));
  if (const json* p = sec.find("state")) out.state = get_int(*p, sec.key_path("state"));
  sec.finish();
  return out;
}

LearnerConfig parse_learner(const json& j, const std::string& path) {
  Section sec(j, path);
  LearnerConfig out;
  if (const json* p = sec.find("window_radius")) out.window_radius = get_int(*p, sec.key_path("window_radius"));
  if (const json* p = sec.find("hidden_dims")) out.hidden_dims = get_list<int>(*p, sec.key_path("hidden_dims"), get_int);
  if (const json* p = sec.find("dropout_rate")) out.dropout_rate = get_double(*p, sec.key_path("dropout_rate"));
  if (const json* p = sec.find("sgd")) out.sgd = parse_sgd(*p, sec.key_path("sgd"));
  if (const json* p = sec.find("batch_size")) out.batch_size = get_int(*p, sec.key_path("batch_size"));
  if (const json* p = sec.find("replay_labeled")) out.replay_labeled = get_bool(*p, sec.key_path("replay_labeled"));
  sec.finish();
  return out;
}

PretrainConfig parse_pretrain(const json& j, const std::string& path) {
  Section sec(j, path);
  PretrainConfig out;
  if (const json* p = sec.find("source_images")) out.source_images = get_int(*p, sec.key_path("source_images"));
  if (const json* p = sec.find("signature_jitter")) out.signature_jitter = get_double(*p, sec.key_path("signature_jitter"));
  if (const json* p = sec.find("patience")) out.patience = get_int(*p, sec.key_path("patience"));
  if (const json* p = sec.find("max_epochs")) out.max_epochs = get_int(*p, sec.key_path("max_epochs"));
  sec.finish();
  return out;
}

FeatureConfig parse_features(const json& j, const std::string& path) {
  Section sec(j, path);
  FeatureConfig out;
  if (const json* p = sec.find("variant"))
    out.variant = parse_feature_variant(get_string(*p, sec.key_path("variant")));
  if (const json* p = sec.find("pooled_grid")) out.pooled_grid = get_int(*p, sec.key_path("pooled_grid"));
  if (const json* p = sec.find("kl_bin_edges")) out.kl_bin_edges = get_list<double>(*p, sec.key_path("kl_bin_edges"), get_double);
  if (const json* p = sec.find("kl_smoothing")) out.kl_smoothing = get_double(*p, sec.key_path("kl_smoothing"));
  if (const json* p = sec.find("unlabeled_sample_size")) out.unlabeled_sample_size = get_int(*p, sec.key_path("unlabeled_sample_size"));
  sec.finish();
  return out;
}

json features_json(const FeatureConfig& f) {
  return json{{"variant", feature_variant_name(f.variant)},
              {"pooled_grid", f.pooled_grid},
              {"kl_bin_edges", f.kl_bin_edges},
              {"kl_smoothing", f.kl_smoothing},
              {"unlabeled_sample_size", f.unlabeled_sample_size}};
}

AgentConfig parse_agent(const json& j, const std::string& path) {
  Section sec(j, path);
  AgentConfig out;
  if (const json* p = sec.find("gamma")) out.gamma = get_double(*p, sec.key_path("gamma"));
  if (const json* p = sec.find("epsilon")) {
    Section eps(*p, sec.key_path("epsilon"));
    if (const json* q = eps.find("start")) out.epsilon.start = get_double(*q, eps.key_path("start"));
    if (const json* q = eps.find("end")) out.epsilon.end = get_double(*q, eps.key_path("end"));
    if (const json* q = eps.find("decay_steps")) out.epsilon.decay_steps = get_int(*q, eps.key_path("decay_steps"));
    eps.finish();
  }
  if (const json* p = sec.find("subactions")) out.subactions = get_int(*p, sec.key_path("subactions"));
  if (const json* p = sec.find("pool_size")) out.pool_size = get_int(*p, sec.key_path("pool_size"));
  if (const json* p = sec.find("replay_capacity")) out.replay_capacity = get_int(*p, sec.key_path("replay_capacity"));
  if (const json* p = sec.find("batch_size")) out.batch_size = get_int(*p, sec.key_path("batch_size"));
  if (const json* p = sec.find("target_sync_period")) out.target_sync_period = get_int(*p, sec.key_path("target_sync_period"));
  if (const json* p = sec.find("sgd")) out.sgd = parse_sgd(*p, sec.key_path("sgd"));
  if (const json* p = sec.find("layout")) {
    Section lay(*p, sec.key_path("layout"));
    if (const json* q = lay.find("state_widths")) out.layout.state_widths = get_list<int>(*q, lay.key_path("state_widths"), get_int);
    if (const json* q = lay.find("action_widths")) out.layout.action_widths = get_list<int>(*q, lay.key_path("action_widths"), get_int);
    if (const json* q = lay.find("fusion_width")) out.layout.fusion_width = get_int(*q, lay.key_path("fusion_width"));
    lay.finish();
  }
  if (const json* p = sec.find("use_batch_norm")) out.use_batch_norm = get_bool(*p, sec.key_path("use_batch_norm"));
  sec.finish();
  return out;
}

json agent_json(const AgentConfig& a) {
  return json{{"gamma", a.gamma},
              {"epsilon",
               {{"start", a.epsilon.start},
                {"end", a.epsilon.end},
                {"decay_steps", a.epsilon.decay_steps}}},
              {"subactions", a.subactions},
              {"pool_size", a.pool_size},
              {"replay_capacity", a.replay_capacity},
              {"batch_size", a.batch_size},
              {"target_sync_period", a.target_sync_period},
              {"sgd", sgd_json(a.sgd)},
              {"layout",
               {{"state_widths", a.layout.state_widths},
                {"action_widths", a.layout.action_widths},
                {"fusion_width", a.layout.fusion_width}}},
              {"use_batch_norm", a.use_batch_norm}};
}

VariantSpec parse_variant(const json& j, const std::string& path) {
  Section sec(j, path);
  VariantSpec out;
  if (const json* p = sec.find("label")) out.label = get_string(*p, sec.key_path("label"));
  if (const json* p = sec.find("method")) out.method = get_string(*p, sec.key_path("method"));
  if (const json* p = sec.find("pool_size")) out.pool_size = get_int(*p, sec.key_path("pool_size"));
  if (const json* p = sec.find("mc_passes")) out.mc_passes = get_int(*p, sec.key_path("mc_passes"));
  if (const json* p = sec.find("features")) out.features = get_string(*p, sec.key_path("features"));
  if (const json* p = sec.find("full_image")) out.full_image = get_bool(*p, sec.key_path("full_image"));
  sec.finish();
  if (out.label.empty()) fail(path + ".label must not be empty");
  return out;
}

}  // namespace

FeatureVariant parse_feature_variant(const std::string& name) {
  if (name == "max_pool") return FeatureVariant::kMaxPool;
  if (name == "three_pool") return FeatureVariant::kThreePool;
  if (name == "three_pool_kl") return FeatureVariant::kThreePoolKl;
  throw std::invalid_argument("unknown feature variant: " + name);
}

std::string feature_variant_name(FeatureVariant v) {
  switch (v) {
    case FeatureVariant::kMaxPool: return "max_pool";
    case FeatureVariant::kThreePool: return "three_pool";
    case FeatureVariant::kThreePoolKl: return "three_pool_kl";
  }
  throw std::invalid_argument("unknown feature variant");
}

void RunConfig::validate() const {
  if (name.empty()) throw std::invalid_argument("config: name must not be empty");
  gen.validate();
  learner.validate();
  pretrain.validate();
  features.validate();
  agent.validate();
  if (splits.train_pool < 1 || splits.eval_pool < 1 || splits.reward < 1 || splits.state < 1)
    throw std::invalid_argument("config: every split needs at least one image");
  if (episodes < 0) throw std::invalid_argument("config: episodes must be >= 0");
  if (train_budget < 1) throw std::invalid_argument("config: train_budget must be >= 1");
  for (std::size_t i = 0; i < eval_budgets.size(); ++i) {
    if (eval_budgets[i] < 0) throw std::invalid_argument("config: eval budgets must be >= 0");
    if (i > 0 && eval_budgets[i] <= eval_budgets[i - 1])
      throw std::invalid_argument("config: eval budgets must be strictly ascending");
  }
  if (eval_regions_per_round < 1)
    throw std::invalid_argument("config: eval_regions_per_round must be >= 1");
  if (patience < 0 || max_epochs < 0)
    throw std::invalid_argument("config: negative training limits");
  if (seeds.empty()) throw std::invalid_argument("config: seeds must not be empty");
  if (jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
  for (std::size_t i = 0; i < variants.size(); ++i) {
    parse_method(variants[i].method);
    parse_feature_variant(variants[i].features);
    if (variants[i].pool_size < 1)
      throw std::invalid_argument("config: variant pool_size must be >= 1");
    if (variants[i].label.empty())
      throw std::invalid_argument("config: variant label must not be empty");
    for (std::size_t k = i + 1; k < variants.size(); ++k)
      if (variants[i].label == variants[k].label)
        throw std::invalid_argument("config: duplicate variant label " + variants[i].label);
  }
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  Section sec(j, "");
  RunConfig out;
  if (const json* p = sec.find("name")) out.name = get_string(*p, "name");
  if (const json* p = sec.find("gen")) out.gen = parse_gen(*p, "gen");
  if (const json* p = sec.find("splits")) out.splits = parse_splits(*p, "splits");
  if (const json* p = sec.find("learner")) out.learner = parse_learner(*p, "learner");
  if (const json* p = sec.find("pretrain")) out.pretrain = parse_pretrain(*p, "pretrain");
  if (const json* p = sec.find("features")) out.features = parse_features(*p, "features");
  if (const json* p = sec.find("agent")) out.agent = parse_agent(*p, "agent");
  if (const json* p = sec.find("episodes")) out.episodes = get_int(*p, "episodes");
  if (const json* p = sec.find("train_budget")) out.train_budget = get_int(*p, "train_budget");
  if (const json* p = sec.find("eval_budgets")) out.eval_budgets = get_list<int>(*p, "eval_budgets", get_int);
  if (const json* p = sec.find("eval_regions_per_round")) out.eval_regions_per_round = get_int(*p, "eval_regions_per_round");
  if (const json* p = sec.find("patience")) out.patience = get_int(*p, "patience");
  if (const json* p = sec.find("max_epochs")) out.max_epochs = get_int(*p, "max_epochs");
  if (const json* p = sec.find("variants")) {
    if (!p->is_array()) fail("variants must be an array");
    out.variants.clear();
    for (std::size_t i = 0; i < p->size(); ++i)
      out.variants.push_back(parse_variant((*p)[i], "variants[" + std::to_string(i) + "]"));
  }
  if (const json* p = sec.find("seeds")) out.seeds = get_list<std::uint64_t>(*p, "seeds", get_u64);
  if (const json* p = sec.find("jobs")) out.jobs = get_int(*p, "jobs");
  if (const json* p = sec.find("dataset_dir")) out.dataset_dir = get_string(*p, "dataset_dir");
  sec.finish();
  return out;
}

nlohmann::json to_json(const RunConfig& config) {
  json variants = json::array();
  for (const VariantSpec& v : config.variants)
    variants.push_back(json{{"label", v.label},
                            {"method", v.method},
                            {"pool_size", v.pool_size},
                            {"mc_passes", v.mc_passes},
                            {"features", v.features},
                            {"full_image", v.full_image}});
  return json{{"name", config.name},
              {"gen", gen_json(config.gen)},
              {"splits",
               {{"train_pool", config.splits.train_pool},
                {"eval_pool", config.splits.eval_pool},
                {"reward", config.splits.reward},
                {"state", config.splits.state}}},
              {"learner",
               {{"window_radius", config.learner.window_radius},
                {"hidden_dims", config.learner.hidden_dims},
                {"dropout_rate", config.learner.dropout_rate},
                {"sgd", sgd_json(config.learner.sgd)},
                {"batch_size", config.learner.batch_size},
                {"replay_labeled", config.learner.replay_labeled}}},
              {"pretrain",
               {{"source_images", config.pretrain.source_images},
                {"signature_jitter", config.pretrain.signature_jitter},
                {"patience", config.pretrain.patience},
                {"max_epochs", config.pretrain.max_epochs}}},
              {"features", features_json(config.features)},
              {"agent", agent_json(config.agent)},
              {"episodes", config.episodes},
              {"train_budget", config.train_budget},
              {"eval_budgets", config.eval_budgets},
              {"eval_regions_per_round", config.eval_regions_per_round},
              {"patience", config.patience},
              {"max_epochs", config.max_epochs},
              {"variants", variants},
              {"seeds", config.seeds},
              {"jobs", config.jobs},
              {"dataset_dir", config.dataset_dir}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << to_json(config).dump(2) << '\n';
}

ExperimentConfig to_experiment_config(const RunConfig& config) {
  config.validate();
  ExperimentConfig out;
  out.gen = config.gen;
  out.splits = config.splits;
  out.learner = config.learner;
  out.pretrain = config.pretrain;
  out.features = config.features;
  out.agent = config.agent;
  out.episodes = config.episodes;
  out.train_budget = config.train_budget;
  out.acquisition.budgets = config.eval_budgets;
  out.acquisition.regions_per_round = config.eval_regions_per_round;
  out.acquisition.patience = config.patience;
  out.acquisition.max_epochs = config.max_epochs;
  for (const VariantSpec& v : config.variants)
    out.variants.push_back(ExperimentVariant{v.label, parse_method(v.method), v.pool_size,
                                             v.mc_passes, parse_feature_variant(v.features),
                                             v.full_image});
  out.seeds = config.seeds;
  out.jobs = config.jobs;
  return out;
}

RunConfig benchmark_preset() {
  RunConfig c;
  c.name = "benchmark";
  c.gen.num_images = 200;
  c.gen.height = 48;
  c.gen.width = 48;
  c.gen.channels = 4;
  c.gen.num_classes = 8;
  c.gen.rare_class_frequencies = {0.01, 0.01};
  c.gen.object_size_range = {4, 9};
  c.gen.noise_sigma = 0.5;
  c.gen.signature_overlap = 0.3;
  c.gen.region_height = 8;
  c.gen.region_width = 8;
  c.gen.seed = 42;
  c.gen.signature_seed = 1000;
  c.splits = {12, 60, 16, 4};
  c.learner.window_radius = 1;
  c.learner.hidden_dims = {64};
  c.learner.dropout_rate = 0.25;
  c.learner.sgd = {1e-3, 0.9, 1e-4};
  c.learner.batch_size = 256;
  c.pretrain = {30, 0.35, 5, 60};
  c.features.variant = FeatureVariant::kThreePoolKl;
  c.agent.gamma = 0.99;
  c.agent.epsilon = {1.0, 0.05, 0};
  c.agent.subactions = 8;
  c.agent.pool_size = 10;
  c.agent.replay_capacity = 600;
  c.agent.batch_size = 16;
  c.agent.target_sync_period = 100;
  c.agent.sgd = {1e-3, 0.9, 1e-3};
  c.episodes = 40;
  c.train_budget = 64;
  c.eval_budgets = {32, 64, 108};
  c.eval_regions_per_round = 8;
  c.patience = 10;
  c.max_epochs = 200;
  c.variants = {
      {"dqn", "dqn", 10, 20, "three_pool_kl", false},
      {"uniform", "uniform", 500, 20, "three_pool_kl", false},
      {"entropy", "entropy", 200, 20, "three_pool_kl", false},
      {"dqn_max_pool", "dqn", 10, 20, "max_pool", false},
      {"dqn_full_image", "dqn", 10, 20, "three_pool_kl", true},
  };
  c.seeds = {1, 2, 3, 4, 5};
  c.jobs = 1;
  return c;
}

RunConfig camvid_analog_preset() {
  RunConfig c;
  c.name = "camvid_analog";
  c.gen.num_images = 160;
  c.gen.height = 72;
  c.gen.width = 72;
  c.gen.channels = 4;
  c.gen.num_classes = 11;
  c.gen.rare_class_frequencies = {0.01, 0.01, 0.02};
  c.gen.object_size_range = {4, 9};
  c.gen.noise_sigma = 0.5;
  c.gen.signature_overlap = 0.3;
  c.gen.region_height = 8;
  c.gen.region_width = 8;
  c.gen.seed = 42;
  c.gen.signature_seed = 1000;
  // 100 policy-training pool images plus a 10-image state set.
  c.splits = {100, 32, 12, 10};
  c.learner.window_radius = 1;
  c.learner.hidden_dims = {64};
  c.learner.dropout_rate = 0.25;
  c.learner.sgd = {1e-3, 0.9, 1e-4};
  c.learner.batch_size = 256;
  c.pretrain = {30, 0.35, 5, 60};
  c.features.variant = FeatureVariant::kThreePoolKl;
  c.agent.gamma = 0.99;
  c.agent.epsilon = {1.0, 0.05, 0};
  c.agent.subactions = 24;
  c.agent.pool_size = 10;
  c.agent.replay_capacity = 600;
  c.agent.batch_size = 16;
  c.agent.target_sync_period = 100;
  c.agent.sgd = {1e-3, 0.9, 1e-3};
  c.episodes = 50;
  c.train_budget = 240;
  c.eval_budgets = {120, 250, 500};
  c.eval_regions_per_round = 24;
  c.patience = 10;
  c.max_epochs = 200;
  c.variants = {
      {"dqn", "dqn", 10, 20, "three_pool_kl", false},
      {"uniform", "uniform", 500, 20, "three_pool_kl", false},
      {"entropy", "entropy", 200, 20, "three_pool_kl", false},
      {"bald", "bald", 200, 20, "three_pool_kl", false},
  };
  c.seeds = {1, 2, 3, 4, 5};
  c.jobs = 1;
  return c;
}

RunConfig cityscapes_analog_preset() {
  RunConfig c;
  c.name = "cityscapes_analog";
  c.gen.num_images = 160;
  c.gen.height = 128;
  c.gen.width = 128;
  c.gen.channels = 4;
  c.gen.num_classes = 19;
  c.gen.rare_class_frequencies = {0.005, 0.005, 0.01, 0.01};
  c.gen.object_size_range = {4, 9};
  c.gen.noise_sigma = 0.5;
  c.gen.signature_overlap = 0.3;
  c.gen.region_height = 8;
  c.gen.region_width = 8;
  c.gen.seed = 42;
  c.gen.signature_seed = 1000;
  c.splits = {24, 80, 16, 6};
  c.learner.window_radius = 1;
  c.learner.hidden_dims = {64};
  c.learner.dropout_rate = 0.25;
  c.learner.sgd = {1e-3, 0.9, 1e-4};
  c.learner.batch_size = 256;
  c.pretrain = {30, 0.35, 5, 60};
  c.features.variant = FeatureVariant::kThreePoolKl;
  c.agent.gamma = 0.99;
  c.agent.epsilon = {1.0, 0.05, 0};
  c.agent.subactions = 256;
  c.agent.pool_size = 100;
  c.agent.replay_capacity = 3200;
  c.agent.batch_size = 16;
  c.agent.target_sync_period = 100;
  c.agent.sgd = {1e-4, 0.9, 1e-3};
  c.episodes = 40;
  c.train_budget = 3072;
  c.eval_budgets = {3072, 6144, 12288};
  c.eval_regions_per_round = 256;
  c.patience = 10;
  c.max_epochs = 200;
  c.variants = {
      {"dqn", "dqn", 100, 20, "three_pool_kl", false},
      {"uniform", "uniform", 500, 20, "three_pool_kl", false},
      {"entropy", "entropy", 200, 20, "three_pool_kl", false},
      {"bald", "bald", 200, 20, "three_pool_kl", false},
  };
  c.seeds = {1, 2, 3, 4, 5};
  c.jobs = 1;
  return c;
}

}  // namespace alseg
