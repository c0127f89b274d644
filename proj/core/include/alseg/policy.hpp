#pragma once

#include <alseg/featurize.hpp>
#include <alseg/nn.hpp>

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace alseg {

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  // Linear decay over this many policy-training steps, then constant.
  // 0 means "resolve from the run setup" (half the total steps).
  std::int64_t decay_steps = 0;

  double at(std::int64_t step) const;
  bool operator==(const EpsilonSchedule&) const = default;
};

// Hidden widths of the Q-network. The reference shape is a 4-layer state
// path and a 3-layer action path; tests shrink this freely.
struct QNetLayout {
  std::vector<int> state_widths{64, 64, 32, 32};
  std::vector<int> action_widths{32, 32, 32};
  int fusion_width = 32;

  void validate() const;
  bool operator==(const QNetLayout&) const = default;
};

struct AgentConfig {
  double gamma = 0.99;
  EpsilonSchedule epsilon;
  int subactions = 8;   // K regions labeled per step
  int pool_size = 10;   // N candidates per sub-action
  int replay_capacity = 600;
  int batch_size = 16;
  int target_sync_period = 100;
  nn::SgdConfig sgd{1e-3, 0.9, 1e-3};
  QNetLayout layout;
  bool use_batch_norm = true;

  void validate() const;
  bool operator==(const AgentConfig&) const = default;
};

// Gated two-path Q-network. Each path layer is BatchNorm -> ReLU -> FC; the
// state path reads s, the action path reads the non-KL action blocks, the
// fused pair passes one more such layer and a scalar head. The head's score
// is multiplied by sigmoid(affine(KL blocks)); without KL blocks the gate
// is identically 1. Layers are public: tests rig stubs and run
// finite-difference checks through them.
class QNet {
 public:
  struct Path {
    std::vector<nn::BatchNorm> norms;
    std::vector<nn::Linear> fcs;
  };

  QNet() = default;
  QNet(int state_dim, int action_dim, int kl_dim, const QNetLayout& layout,
       bool use_batch_norm, std::mt19937_64& rng);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }  // includes the KL blocks
  int kl_dim() const { return kl_dim_; }
  int action_core_dim() const { return action_dim_ - kl_dim_; }

  // Inference mode: batch norm on running stats, deterministic.
  double forward(std::span<const double> state, std::span<const double> action) const;
  nn::Vec forward_batch(const nn::Mat& states, const nn::Mat& actions) const;
  // Scores one pool against a shared state.
  nn::Vec score_pool(std::span<const double> state, const CandidatePool& pool) const;

  // Training-mode loss (batch statistics) without any parameter or
  // running-stat change; the surface finite-difference checks probe.
  double training_loss(const nn::Mat& states, const nn::Mat& actions,
                       const nn::Vec& targets) const;
  // One SGD-momentum step on mean squared error against fixed targets;
  // returns the pre-step loss and updates BN running stats.
  double train_step(const nn::Mat& states, const nn::Mat& actions, const nn::Vec& targets,
                    const nn::SgdConfig& sgd);

  void sync_from(const QNet& other);
  bool operator==(const QNet& other) const;

  void save(std::ostream& out) const;
  static QNet load(std::istream& in);

  Path state_path;
  Path action_path;
  nn::BatchNorm fusion_norm;
  nn::Linear fusion_fc;
  nn::Linear head;  // fusion width -> 1, no activation after
  nn::Linear gate;  // kl_dim -> 1, through a sigmoid
  bool use_batch_norm = true;

 private:
  struct ForwardCache;
  void forward_training(const nn::Mat& states, const nn::Mat& actions, ForwardCache& cache,
                        nn::Vec& q) const;

  int state_dim_ = 0;
  int action_dim_ = 0;
  int kl_dim_ = 0;
};

// Applies fn to every trainable parameter in a fixed order (weights, biases,
// BN gamma/beta; running statistics excluded).
void visit_params(QNet& net, const nn::ParamVisitor& fn);

// One decomposed experience tuple for sub-action slot k. The next-state
// fields are the featurized situation the episode actually reached at t+1;
// terminal transitions carry neither.
struct Transition {
  std::shared_ptr<const StateFeatures> state;
  ActionFeatures chosen;
  double reward = 0.0;
  std::shared_ptr<const StateFeatures> next_state;      // null iff terminal
  std::shared_ptr<const CandidatePool> next_pool;       // null iff terminal
  bool terminal = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Oldest first.
  const Transition& at(std::size_t i) const { return items_[i]; }
  // Uniform with replacement.
  std::vector<std::size_t> sample_indices(int n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

// Per transition: terminal -> r; otherwise the next action is chosen by the
// TARGET net's argmax over next_pool and evaluated with the ONLINE net
// (the reverse of the conventional double-DQN pairing, kept as designed):
// y = r + gamma * Q_online(s', argmax_a Q_target(s', a)).
std::vector<double> td_targets(std::span<const Transition* const> batch, const QNet& online,
                               const QNet& target, double gamma);

// Samples a batch, regresses the online net onto fixed TD targets, one SGD
// step. Empty optional when the buffer holds fewer than batch_size items.
std::optional<double> dqn_update(QNet& online, const QNet& target, const ReplayBuffer& buffer,
                                 const AgentConfig& config, std::mt19937_64& rng);

// Online/target nets, replay, and the update counter driving target syncs.
class Agent {
 public:
  Agent(AgentConfig config, const FeatureConfig& features, int num_classes, int state_regions,
        std::uint64_t seed);

  const AgentConfig& config() const { return config_; }
  AgentConfig& config() { return config_; }
  const QNet& online() const { return online_; }
  QNet& online() { return online_; }
  const QNet& target() const { return target_; }
  ReplayBuffer& replay() { return replay_; }
  const ReplayBuffer& replay() const { return replay_; }
  std::int64_t updates() const { return updates_; }

  // Index of the chosen candidate per pool: with probability epsilon a
  // uniform pick, otherwise the Q argmax (ties to the lowest pool index).
  std::vector<int> select_subactions(const StateFeatures& state,
                                     std::span<const CandidatePool> pools, double epsilon,
                                     std::mt19937_64& rng) const;

  void push(Transition t) { replay_.push(std::move(t)); }
  // One dqn_update plus target-sync bookkeeping.
  std::optional<double> update(std::mt19937_64& rng);
  void sync_target() { target_.sync_from(online_); }

  void save_checkpoint(const std::filesystem::path& path) const;
  // Refuses checkpoints whose feature dimensions disagree with the given
  // featurization.
  static Agent load_checkpoint(const std::filesystem::path& path,
                               const FeatureConfig& features, int num_classes,
                               int state_regions);

 private:
  AgentConfig config_;
  QNet online_;
  QNet target_;
  ReplayBuffer replay_;
  std::int64_t updates_ = 0;
};

}  // namespace alseg
