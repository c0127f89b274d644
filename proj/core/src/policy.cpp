#include "alseg/policy.hpp"

#include "alseg/rng.hpp"
#include "alseg/version.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace alseg {

namespace {

constexpr char kMagic[] = "ALSEGPOL";

void write_string(std::ostream& out, const std::string& s) {
  auto n = static_cast<std::uint64_t>(s.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || n > (1u << 20)) throw std::runtime_error("corrupt string field");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("corrupt string field");
  return s;
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("corrupt checkpoint field");
  return v;
}

void write_linear(std::ostream& out, const nn::Linear& l) {
  nn::serialize(out, l.weight);
  nn::serialize(out, l.bias);
  nn::serialize(out, l.weight_vel);
  nn::serialize(out, l.bias_vel);
}

void read_linear(std::istream& in, nn::Linear& l) {
  nn::deserialize(in, l.weight);
  nn::deserialize(in, l.bias);
  nn::deserialize(in, l.weight_vel);
  nn::deserialize(in, l.bias_vel);
}

void write_norm(std::ostream& out, const nn::BatchNorm& b) {
  nn::serialize(out, b.gamma);
  nn::serialize(out, b.beta);
  nn::serialize(out, b.running_mean);
  nn::serialize(out, b.running_var);
  nn::serialize(out, b.gamma_vel);
  nn::serialize(out, b.beta_vel);
  write_pod(out, b.momentum);
  write_pod(out, b.eps);
}

void read_norm(std::istream& in, nn::BatchNorm& b) {
  nn::deserialize(in, b.gamma);
  nn::deserialize(in, b.beta);
  nn::deserialize(in, b.running_mean);
  nn::deserialize(in, b.running_var);
  nn::deserialize(in, b.gamma_vel);
  nn::deserialize(in, b.beta_vel);
  b.momentum = read_pod<double>(in);
  b.eps = read_pod<double>(in);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

namespace policy_impl {

struct PathCache {
  std::vector<nn::Mat> input;
  std::vector<nn::BatchNorm::Cache> bn;
  std::vector<nn::Mat> norm_out;
  std::vector<nn::Mat> relu_out;
};

struct PathGrads {
  std::vector<nn::Mat> gw;
  std::vector<nn::Vec> gb;
  std::vector<nn::Vec> ggamma;
  std::vector<nn::Vec> gbeta;
};

}  // namespace policy_impl

using policy_impl::PathCache;
using policy_impl::PathGrads;

struct QNet::ForwardCache {
  PathCache s, a;
  nn::Mat fused_in;
  nn::BatchNorm::Cache fusion_bn;
  nn::Mat fusion_norm_out;
  nn::Mat fusion_relu;
  nn::Mat fusion_out;
  nn::Mat kl;
  Eigen::RowVectorXd score;
  Eigen::RowVectorXd gate_val;
};

namespace {

nn::Mat path_eval(const QNet::Path& path, bool use_bn, nn::Mat x) {
  for (std::size_t i = 0; i < path.fcs.size(); ++i) {
    if (use_bn) x = path.norms[i].forward_eval(x);
    x = path.fcs[i].forward(nn::relu(x));
  }
  return x;
}

nn::Mat path_train(const QNet::Path& path, bool use_bn, const nn::Mat& x, PathCache& cache) {
  nn::Mat cur = x;
  cache.input.resize(path.fcs.size());
  cache.bn.resize(path.fcs.size());
  cache.norm_out.resize(path.fcs.size());
  cache.relu_out.resize(path.fcs.size());
  for (std::size_t i = 0; i < path.fcs.size(); ++i) {
    cache.input[i] = cur;
    cache.norm_out[i] = use_bn ? path.norms[i].forward_train(cur, cache.bn[i]) : cur;
    cache.relu_out[i] = nn::relu(cache.norm_out[i]);
    cur = path.fcs[i].forward(cache.relu_out[i]);
  }
  return cur;
}

nn::Mat path_backward(QNet::Path& path, bool use_bn, const PathCache& cache, nn::Mat grad,
                      PathGrads& grads) {
  const std::size_t n = path.fcs.size();
  grads.gw.resize(n);
  grads.gb.resize(n);
  grads.ggamma.assign(n, nn::Vec());
  grads.gbeta.assign(n, nn::Vec());
  for (std::size_t i = n; i-- > 0;) {
    grad = path.fcs[i].backward(cache.relu_out[i], grad, grads.gw[i], grads.gb[i]);
    grad = nn::relu_backward(cache.norm_out[i], grad);
    if (use_bn) grad = path.norms[i].backward(cache.bn[i], grad, grads.ggamma[i], grads.gbeta[i]);
  }
  return grad;
}

void path_step(QNet::Path& path, bool use_bn, const PathCache& cache, const PathGrads& grads,
               const nn::SgdConfig& sgd) {
  for (std::size_t i = 0; i < path.fcs.size(); ++i) {
    path.fcs[i].sgd_step(grads.gw[i], grads.gb[i], sgd);
    if (use_bn) {
      path.norms[i].sgd_step(grads.ggamma[i], grads.gbeta[i], sgd);
      path.norms[i].update_running(cache.bn[i]);
    }
  }
}

}  // namespace

double EpsilonSchedule::at(std::int64_t step) const {
  if (step < 0) throw std::invalid_argument("epsilon: negative step");
  if (decay_steps <= 0 || step >= decay_steps) return end;
  return start + (end - start) * (static_cast<double>(step) / static_cast<double>(decay_steps));
}

void QNetLayout::validate() const {
  if (state_widths.empty() || action_widths.empty())
    throw std::invalid_argument("qnet: both paths need at least one layer");
  for (int w : state_widths)
    if (w <= 0) throw std::invalid_argument("qnet: state widths must be positive");
  for (int w : action_widths)
    if (w <= 0) throw std::invalid_argument("qnet: action widths must be positive");
  if (fusion_width <= 0) throw std::invalid_argument("qnet: fusion width must be positive");
}

void AgentConfig::validate() const {
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("agent: gamma must be in [0,1]");
  if (epsilon.start < 0.0 || epsilon.start > 1.0 || epsilon.end < 0.0 || epsilon.end > 1.0)
    throw std::invalid_argument("agent: epsilon must be in [0,1]");
  if (epsilon.decay_steps < 0) throw std::invalid_argument("agent: negative epsilon decay");
  if (subactions < 1) throw std::invalid_argument("agent: subactions must be >= 1");
  if (pool_size < 1) throw std::invalid_argument("agent: pool size must be >= 1");
  if (replay_capacity < 1) throw std::invalid_argument("agent: replay capacity must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("agent: batch size must be >= 1");
  if (target_sync_period < 1) throw std::invalid_argument("agent: sync period must be >= 1");
  if (sgd.learning_rate < 0.0) throw std::invalid_argument("agent: learning rate must be >= 0");
  if (sgd.momentum < 0.0 || sgd.momentum >= 1.0)
    throw std::invalid_argument("agent: momentum must be in [0,1)");
  if (sgd.weight_decay < 0.0) throw std::invalid_argument("agent: weight decay must be >= 0");
  layout.validate();
}

QNet::QNet(int state_dim, int action_dim, int kl_dim, const QNetLayout& layout,
           bool batch_norm, std::mt19937_64& rng)
    : use_batch_norm(batch_norm), state_dim_(state_dim), action_dim_(action_dim),
      kl_dim_(kl_dim) {
  layout.validate();
  if (state_dim < 1) throw std::invalid_argument("qnet: state dimension must be positive");
  if (kl_dim < 0 || action_dim - kl_dim < 1)
    throw std::invalid_argument("qnet: action dimensions inconsistent");

  auto build = [&rng](Path& path, int in, const std::vector<int>& widths) {
    for (int w : widths) {
      path.norms.emplace_back(in);
      path.fcs.emplace_back(in, w, rng);
      in = w;
    }
    return in;
  };
  int s_out = build(state_path, state_dim, layout.state_widths);
  int a_out = build(action_path, action_dim - kl_dim, layout.action_widths);
  fusion_norm = nn::BatchNorm(s_out + a_out);
  fusion_fc = nn::Linear(s_out + a_out, layout.fusion_width, rng);
  head = nn::Linear(layout.fusion_width, 1, rng);
  if (kl_dim > 0) gate = nn::Linear(kl_dim, 1, rng);
}

nn::Vec QNet::forward_batch(const nn::Mat& states, const nn::Mat& actions) const {
  if (states.rows() != state_dim_ || actions.rows() != action_dim_ ||
      states.cols() != actions.cols())
    throw std::invalid_argument("qnet: feature dimensions mismatch");
  nn::Mat s_out = path_eval(state_path, use_batch_norm, states);
  nn::Mat a_out = path_eval(action_path, use_batch_norm, actions.topRows(action_dim_ - kl_dim_));
  nn::Mat fused(s_out.rows() + a_out.rows(), s_out.cols());
  fused << s_out, a_out;
  if (use_batch_norm) fused = fusion_norm.forward_eval(fused);
  nn::Mat fusion_out = fusion_fc.forward(nn::relu(fused));
  nn::Mat score = head.forward(fusion_out);  // 1 x B
  nn::Vec q(states.cols());
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    double g = 1.0;
    if (kl_dim_ > 0)
      g = sigmoid((gate.weight * actions.col(j).tail(kl_dim_))(0) + gate.bias(0));
    q(j) = score(0, j) * g;
  }
  return q;
}

double QNet::forward(std::span<const double> state, std::span<const double> action) const {
  if (static_cast<int>(state.size()) != state_dim_ ||
      static_cast<int>(action.size()) != action_dim_)
    throw std::invalid_argument("qnet: feature dimensions mismatch");
  nn::Mat s = Eigen::Map<const nn::Vec>(state.data(), state_dim_);
  nn::Mat a = Eigen::Map<const nn::Vec>(action.data(), action_dim_);
  return forward_batch(s, a)(0);
}

nn::Vec QNet::score_pool(std::span<const double> state, const CandidatePool& pool) const {
  if (pool.empty()) throw std::invalid_argument("qnet: empty pool");
  if (static_cast<int>(state.size()) != state_dim_)
    throw std::invalid_argument("qnet: state dimension mismatch");
  nn::Mat states(state_dim_, static_cast<Eigen::Index>(pool.size()));
  nn::Mat actions(action_dim_, static_cast<Eigen::Index>(pool.size()));
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (static_cast<int>(pool[j].values.size()) != action_dim_)
      throw std::invalid_argument("qnet: action dimension mismatch");
    states.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const nn::Vec>(state.data(), state_dim_);
    actions.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const nn::Vec>(pool[j].values.data(), action_dim_);
  }
  return forward_batch(states, actions);
}

void QNet::forward_training(const nn::Mat& states, const nn::Mat& actions, ForwardCache& cache,
                            nn::Vec& q) const {
  if (states.rows() != state_dim_ || actions.rows() != action_dim_ ||
      states.cols() != actions.cols())
    throw std::invalid_argument("qnet: feature dimensions mismatch");
  nn::Mat s_out = path_train(state_path, use_batch_norm, states, cache.s);
  nn::Mat a_out =
      path_train(action_path, use_batch_norm, actions.topRows(action_dim_ - kl_dim_), cache.a);
  cache.fused_in.resize(s_out.rows() + a_out.rows(), s_out.cols());
  cache.fused_in << s_out, a_out;
  cache.fusion_norm_out = use_batch_norm
                              ? fusion_norm.forward_train(cache.fused_in, cache.fusion_bn)
                              : cache.fused_in;
  cache.fusion_relu = nn::relu(cache.fusion_norm_out);
  cache.fusion_out = fusion_fc.forward(cache.fusion_relu);
  cache.score = head.forward(cache.fusion_out).row(0);
  cache.gate_val.resize(states.cols());
  if (kl_dim_ > 0) {
    cache.kl = actions.bottomRows(kl_dim_);
    for (Eigen::Index j = 0; j < states.cols(); ++j)
      cache.gate_val(j) = sigmoid((gate.weight * cache.kl.col(j))(0) + gate.bias(0));
  } else {
    cache.gate_val.setOnes();
  }
  q = (cache.score.array() * cache.gate_val.array()).matrix().transpose();
}

double QNet::training_loss(const nn::Mat& states, const nn::Mat& actions,
                           const nn::Vec& targets) const {
  if (targets.size() != states.cols())
    throw std::invalid_argument("qnet: target count mismatch");
  ForwardCache cache;
  nn::Vec q;
  forward_training(states, actions, cache, q);
  return (q - targets).squaredNorm() / static_cast<double>(q.size());
}

double QNet::train_step(const nn::Mat& states, const nn::Mat& actions, const nn::Vec& targets,
                        const nn::SgdConfig& sgd) {
  if (targets.size() != states.cols())
    throw std::invalid_argument("qnet: target count mismatch");
  ForwardCache cache;
  nn::Vec q;
  forward_training(states, actions, cache, q);
  const auto batch = static_cast<double>(q.size());
  double loss = (q - targets).squaredNorm() / batch;

  nn::Vec dq = 2.0 * (q - targets) / batch;
  nn::Mat dscore = (dq.transpose().array() * cache.gate_val.array()).matrix();
  nn::Mat gw_head, gw_fusion, gw_gate;
  nn::Vec gb_head, gb_fusion, gb_gate;
  nn::Mat d_fusion_out = head.backward(cache.fusion_out, dscore, gw_head, gb_head);
  nn::Mat d_fusion_relu =
      fusion_fc.backward(cache.fusion_relu, d_fusion_out, gw_fusion, gb_fusion);
  nn::Mat d_fusion_norm = nn::relu_backward(cache.fusion_norm_out, d_fusion_relu);
  nn::Vec ggamma_fusion, gbeta_fusion;
  nn::Mat d_fused = use_batch_norm
                        ? fusion_norm.backward(cache.fusion_bn, d_fusion_norm, ggamma_fusion,
                                               gbeta_fusion)
                        : d_fusion_norm;

  const bool has_gate = kl_dim_ > 0;
  if (has_gate) {
    nn::Mat d_gate_pre = (dq.transpose().array() * cache.score.array() *
                          cache.gate_val.array() * (1.0 - cache.gate_val.array()))
                             .matrix();
    gate.backward(cache.kl, d_gate_pre, gw_gate, gb_gate);
  }

  const int s_rows = state_path.fcs.back().out_dim();
  PathGrads sg, ag;
  path_backward(state_path, use_batch_norm, cache.s, d_fused.topRows(s_rows), sg);
  path_backward(action_path, use_batch_norm, cache.a,
                d_fused.bottomRows(d_fused.rows() - s_rows), ag);

  head.sgd_step(gw_head, gb_head, sgd);
  fusion_fc.sgd_step(gw_fusion, gb_fusion, sgd);
  if (use_batch_norm) {
    fusion_norm.sgd_step(ggamma_fusion, gbeta_fusion, sgd);
    fusion_norm.update_running(cache.fusion_bn);
  }
  if (has_gate) gate.sgd_step(gw_gate, gb_gate, sgd);
  path_step(state_path, use_batch_norm, cache.s, sg, sgd);
  path_step(action_path, use_batch_norm, cache.a, ag, sgd);
  return loss;
}

void QNet::sync_from(const QNet& other) {
  if (other.state_dim_ != state_dim_ || other.action_dim_ != action_dim_ ||
      other.kl_dim_ != kl_dim_)
    throw std::invalid_argument("qnet sync: dimension mismatch");
  state_path = other.state_path;
  action_path = other.action_path;
  fusion_norm = other.fusion_norm;
  fusion_fc = other.fusion_fc;
  head = other.head;
  gate = other.gate;
  use_batch_norm = other.use_batch_norm;
}

bool QNet::operator==(const QNet& other) const {
  auto path_eq = [](const Path& a, const Path& b) {
    if (a.fcs.size() != b.fcs.size() || a.norms.size() != b.norms.size()) return false;
    for (std::size_t i = 0; i < a.fcs.size(); ++i)
      if (!nn::exact_equal(a.fcs[i], b.fcs[i]) || !nn::exact_equal(a.norms[i], b.norms[i]))
        return false;
    return true;
  };
  return state_dim_ == other.state_dim_ && action_dim_ == other.action_dim_ &&
         kl_dim_ == other.kl_dim_ && use_batch_norm == other.use_batch_norm &&
         path_eq(state_path, other.state_path) && path_eq(action_path, other.action_path) &&
         nn::exact_equal(fusion_norm, other.fusion_norm) &&
         nn::exact_equal(fusion_fc, other.fusion_fc) && nn::exact_equal(head, other.head) &&
         (kl_dim_ == 0 || nn::exact_equal(gate, other.gate));
}

void QNet::save(std::ostream& out) const {
  write_pod(out, state_dim_);
  write_pod(out, action_dim_);
  write_pod(out, kl_dim_);
  write_pod(out, static_cast<std::uint8_t>(use_batch_norm));
  auto write_path = [&out](const Path& p) {
    write_pod(out, static_cast<std::int32_t>(p.fcs.size()));
    for (std::size_t i = 0; i < p.fcs.size(); ++i) {
      write_norm(out, p.norms[i]);
      write_linear(out, p.fcs[i]);
    }
  };
  write_path(state_path);
  write_path(action_path);
  write_norm(out, fusion_norm);
  write_linear(out, fusion_fc);
  write_linear(out, head);
  if (kl_dim_ > 0) write_linear(out, gate);
}

QNet QNet::load(std::istream& in) {
  QNet net;
  net.state_dim_ = read_pod<int>(in);
  net.action_dim_ = read_pod<int>(in);
  net.kl_dim_ = read_pod<int>(in);
  net.use_batch_norm = read_pod<std::uint8_t>(in) != 0;
  auto read_path = [&in](Path& p) {
    auto n = read_pod<std::int32_t>(in);
    if (n < 1 || n > 64) throw std::runtime_error("corrupt qnet path");
    p.norms.resize(static_cast<std::size_t>(n));
    p.fcs.resize(static_cast<std::size_t>(n));
    for (std::int32_t i = 0; i < n; ++i) {
      read_norm(in, p.norms[static_cast<std::size_t>(i)]);
      read_linear(in, p.fcs[static_cast<std::size_t>(i)]);
    }
  };
  read_path(net.state_path);
  read_path(net.action_path);
  read_norm(in, net.fusion_norm);
  read_linear(in, net.fusion_fc);
  read_linear(in, net.head);
  if (net.kl_dim_ > 0) read_linear(in, net.gate);
  return net;
}

void visit_params(QNet& net, const nn::ParamVisitor& fn) {
  auto visit_mat = [&fn](nn::Mat& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) fn(m.data()[i]);
  };
  auto visit_vec = [&fn](nn::Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) fn(v.data()[i]);
  };
  auto visit_path = [&](QNet::Path& p) {
    for (std::size_t i = 0; i < p.fcs.size(); ++i) {
      visit_vec(p.norms[i].gamma);
      visit_vec(p.norms[i].beta);
      visit_mat(p.fcs[i].weight);
      visit_vec(p.fcs[i].bias);
    }
  };
  visit_path(net.state_path);
  visit_path(net.action_path);
  visit_vec(net.fusion_norm.gamma);
  visit_vec(net.fusion_norm.beta);
  visit_mat(net.fusion_fc.weight);
  visit_vec(net.fusion_fc.bias);
  visit_mat(net.head.weight);
  visit_vec(net.head.bias);
  if (net.kl_dim() > 0) {
    visit_mat(net.gate.weight);
    visit_vec(net.gate.bias);
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("replay: zero capacity");
}

void ReplayBuffer::push(Transition t) {
  if (!t.terminal && (t.next_state == nullptr || t.next_pool == nullptr || t.next_pool->empty()))
    throw std::invalid_argument("replay: non-terminal transition needs a next pool");
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<std::size_t> ReplayBuffer::sample_indices(int n, std::mt19937_64& rng) const {
  if (n < 1) throw std::invalid_argument("replay: sample size must be positive");
  if (items_.empty()) throw std::invalid_argument("replay: empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<std::size_t> out(static_cast<std::size_t>(n));
  for (auto& i : out) i = pick(rng);
  return out;
}

std::vector<double> td_targets(std::span<const Transition* const> batch, const QNet& online,
                               const QNet& target, double gamma) {
  if (batch.empty()) throw std::invalid_argument("td_targets: empty batch");
  std::vector<double> y;
  y.reserve(batch.size());
  for (const Transition* t : batch) {
    if (t->terminal) {
      y.push_back(t->reward);
      continue;
    }
    if (!t->next_state || !t->next_pool || t->next_pool->empty())
      throw std::invalid_argument("td_targets: non-terminal transition without next pool");
    // Select with the target net, evaluate with the online net.
    nn::Vec scores = target.score_pool(t->next_state->values, *t->next_pool);
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < scores.size(); ++j)
      if (scores(j) > scores(best)) best = j;
    double q = online.forward(t->next_state->values,
                              (*t->next_pool)[static_cast<std::size_t>(best)].values);
    y.push_back(t->reward + gamma * q);
  }
  return y;
}

std::optional<double> dqn_update(QNet& online, const QNet& target, const ReplayBuffer& buffer,
                                 const AgentConfig& config, std::mt19937_64& rng) {
  if (buffer.size() < static_cast<std::size_t>(config.batch_size)) return std::nullopt;
  std::vector<std::size_t> idx = buffer.sample_indices(config.batch_size, rng);
  std::vector<const Transition*> batch;
  batch.reserve(idx.size());
  for (std::size_t i : idx) batch.push_back(&buffer.at(i));
  std::vector<double> targets = td_targets(batch, online, target, config.gamma);

  nn::Mat states(online.state_dim(), static_cast<Eigen::Index>(batch.size()));
  nn::Mat actions(online.action_dim(), static_cast<Eigen::Index>(batch.size()));
  nn::Vec y(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const Transition& t = *batch[j];
    if (static_cast<int>(t.state->values.size()) != online.state_dim() ||
        static_cast<int>(t.chosen.values.size()) != online.action_dim())
      throw std::invalid_argument("dqn_update: transition feature dimensions mismatch");
    states.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const nn::Vec>(t.state->values.data(), online.state_dim());
    actions.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const nn::Vec>(t.chosen.values.data(), online.action_dim());
    y(static_cast<Eigen::Index>(j)) = targets[j];
  }
  return online.train_step(states, actions, y, config.sgd);
}

Agent::Agent(AgentConfig config, const FeatureConfig& features, int num_classes,
             int state_regions, std::uint64_t seed)
    : config_(std::move(config)), replay_(1) {
  config_.validate();
  features.validate();
  if (num_classes < 2 || state_regions < 1)
    throw std::invalid_argument("agent: bad feature dimensions");
  auto rng = make_rng(derive_seed(seed, "qnet"));
  online_ = QNet(features.state_dim(num_classes, state_regions),
                 features.action_dim(num_classes), features.kl_dim(), config_.layout,
                 config_.use_batch_norm, rng);
  target_ = online_;
  replay_ = ReplayBuffer(static_cast<std::size_t>(config_.replay_capacity));
}

std::vector<int> Agent::select_subactions(const StateFeatures& state,
                                          std::span<const CandidatePool> pools, double epsilon,
                                          std::mt19937_64& rng) const {
  if (pools.empty()) throw std::invalid_argument("select: no pools");
  if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("select: epsilon out of range");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> chosen;
  chosen.reserve(pools.size());
  for (const CandidatePool& pool : pools) {
    if (pool.empty()) throw std::invalid_argument("select: empty pool");
    if (unif(rng) < epsilon) {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(pool.size()) - 1);
      chosen.push_back(pick(rng));
      continue;
    }
    nn::Vec scores = online_.score_pool(state.values, pool);
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < scores.size(); ++j)
      if (scores(j) > scores(best)) best = j;
    chosen.push_back(static_cast<int>(best));
  }
  return chosen;
}

std::optional<double> Agent::update(std::mt19937_64& rng) {
  auto loss = dqn_update(online_, target_, replay_, config_, rng);
  if (loss) {
    ++updates_;
    if (updates_ % config_.target_sync_period == 0) sync_target();
  }
  return loss;
}

void Agent::save_checkpoint(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic - 1);
  write_string(out, std::string(kVersion));
  write_pod(out, config_.gamma);
  write_pod(out, config_.epsilon.start);
  write_pod(out, config_.epsilon.end);
  write_pod(out, config_.epsilon.decay_steps);
  write_pod(out, config_.subactions);
  write_pod(out, config_.pool_size);
  write_pod(out, config_.replay_capacity);
  write_pod(out, config_.batch_size);
  write_pod(out, config_.target_sync_period);
  write_pod(out, config_.sgd.learning_rate);
  write_pod(out, config_.sgd.momentum);
  write_pod(out, config_.sgd.weight_decay);
  auto write_widths = [&out](const std::vector<int>& w) {
    write_pod(out, static_cast<std::int32_t>(w.size()));
    for (int v : w) write_pod(out, v);
  };
  write_widths(config_.layout.state_widths);
  write_widths(config_.layout.action_widths);
  write_pod(out, config_.layout.fusion_width);
  write_pod(out, static_cast<std::uint8_t>(config_.use_batch_norm));
  write_pod(out, updates_);
  online_.save(out);
  target_.save(out);
  if (!out) throw std::runtime_error("agent checkpoint write failed");
}

Agent Agent::load_checkpoint(const std::filesystem::path& path, const FeatureConfig& features,
                             int num_classes, int state_regions) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  char magic[sizeof kMagic - 1];
  in.read(magic, sizeof magic);
  if (!in || std::string_view(magic, sizeof magic) != kMagic)
    throw std::runtime_error("not a policy checkpoint");
  if (read_string(in) != kVersion) throw std::runtime_error("policy checkpoint version mismatch");
  AgentConfig cfg;
  cfg.gamma = read_pod<double>(in);
  cfg.epsilon.start = read_pod<double>(in);
  cfg.epsilon.end = read_pod<double>(in);
  cfg.epsilon.decay_steps = read_pod<std::int64_t>(in);
  cfg.subactions = read_pod<int>(in);
  cfg.pool_size = read_pod<int>(in);
  cfg.replay_capacity = read_pod<int>(in);
  cfg.batch_size = read_pod<int>(in);
  cfg.target_sync_period = read_pod<int>(in);
  cfg.sgd.learning_rate = read_pod<double>(in);
  cfg.sgd.momentum = read_pod<double>(in);
  cfg.sgd.weight_decay = read_pod<double>(in);
  auto read_widths = [&in]() {
    auto n = read_pod<std::int32_t>(in);
    if (n < 1 || n > 64) throw std::runtime_error("corrupt policy checkpoint");
    std::vector<int> w(static_cast<std::size_t>(n));
    for (auto& v : w) v = read_pod<int>(in);
    return w;
  };
  cfg.layout.state_widths = read_widths();
  cfg.layout.action_widths = read_widths();
  cfg.layout.fusion_width = read_pod<int>(in);
  cfg.use_batch_norm = read_pod<std::uint8_t>(in) != 0;
  auto updates = read_pod<std::int64_t>(in);

  Agent agent(cfg, features, num_classes, state_regions, 0);
  agent.online_ = QNet::load(in);
  agent.target_ = QNet::load(in);
  agent.updates_ = updates;
  if (agent.online_.state_dim() != features.state_dim(num_classes, state_regions) ||
      agent.online_.action_dim() != features.action_dim(num_classes) ||
      agent.online_.kl_dim() != features.kl_dim())
    throw std::runtime_error("policy checkpoint feature dimensions mismatch");
  return agent;
}

}  // namespace alseg
