#include "alseg/learner.hpp"

#include "alseg/rng.hpp"
#include "alseg/version.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace alseg {

namespace {

constexpr char kMagic[] = "ALSEGLRN";

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

void write_rng(std::ostream& out, const std::mt19937_64& rng) {
  std::ostringstream ss;
  ss << rng;
  write_string(out, ss.str());
}

std::mt19937_64 read_rng(std::istream& in) {
  std::istringstream ss(read_string(in));
  std::mt19937_64 rng;
  ss >> rng;
  if (!ss) throw std::runtime_error("corrupt rng state");
  return rng;
}

void write_linear(std::ostream& out, const nn::Linear& l) {
  nn::serialize(out, l.weight);
  nn::serialize(out, l.bias);
  nn::serialize(out, l.weight_vel);
  nn::serialize(out, l.bias_vel);
}

nn::Linear read_linear(std::istream& in) {
  nn::Linear l;
  nn::deserialize(in, l.weight);
  nn::deserialize(in, l.bias);
  nn::deserialize(in, l.weight_vel);
  nn::deserialize(in, l.bias_vel);
  return l;
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

nn::BatchNorm read_norm(std::istream& in) {
  nn::BatchNorm b;
  nn::deserialize(in, b.gamma);
  nn::deserialize(in, b.beta);
  nn::deserialize(in, b.running_mean);
  nn::deserialize(in, b.running_var);
  nn::deserialize(in, b.gamma_vel);
  nn::deserialize(in, b.beta_vel);
  b.momentum = read_pod<double>(in);
  b.eps = read_pod<double>(in);
  return b;
}

void visit_mat(nn::Mat& m, const nn::ParamVisitor& fn) {
  for (Eigen::Index i = 0; i < m.size(); ++i) fn(m.data()[i]);
}
void visit_vec(nn::Vec& v, const nn::ParamVisitor& fn) {
  for (Eigen::Index i = 0; i < v.size(); ++i) fn(v.data()[i]);
}

}  // namespace

LabelMap argmax_map(const PredictionMap& pred) {
  LabelMap out(pred.height, pred.width);
  for (int y = 0; y < pred.height; ++y)
    for (int x = 0; x < pred.width; ++x) {
      int best = 0;
      double best_p = pred.at(y, x, 0);
      for (int c = 1; c < pred.num_classes; ++c)
        if (pred.at(y, x, c) > best_p) {
          best_p = pred.at(y, x, c);
          best = c;
        }
      out.at(y, x) = static_cast<std::uint8_t>(best);
    }
  return out;
}

void LearnerConfig::validate() const {
  if (window_radius < 0) throw std::invalid_argument("learner: window_radius must be >= 0");
  if (hidden_dims.empty()) throw std::invalid_argument("learner: need at least one hidden layer");
  for (int d : hidden_dims)
    if (d <= 0) throw std::invalid_argument("learner: hidden sizes must be positive");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw std::invalid_argument("learner: dropout must be in [0,1)");
  if (sgd.learning_rate < 0.0) throw std::invalid_argument("learner: learning rate must be >= 0");
  if (sgd.momentum < 0.0 || sgd.momentum >= 1.0)
    throw std::invalid_argument("learner: momentum must be in [0,1)");
  if (sgd.weight_decay < 0.0) throw std::invalid_argument("learner: weight decay must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("learner: batch size must be positive");
}

bool Learner::State::operator==(const State& other) const {
  if (hidden.size() != other.hidden.size() || norms.size() != other.norms.size()) return false;
  for (std::size_t i = 0; i < hidden.size(); ++i)
    if (!nn::exact_equal(hidden[i], other.hidden[i])) return false;
  for (std::size_t i = 0; i < norms.size(); ++i)
    if (!nn::exact_equal(norms[i], other.norms[i])) return false;
  return nn::exact_equal(output, other.output) && rng == other.rng;
}

Learner::Learner(LearnerConfig config, int num_classes, int channels, std::uint64_t seed)
    : config_(std::move(config)), num_classes_(num_classes), channels_(channels) {
  config_.validate();
  if (num_classes_ < 2) throw std::invalid_argument("learner: need at least 2 classes");
  if (channels_ < 1) throw std::invalid_argument("learner: need at least one channel");
  state_.rng = make_rng(derive_seed(seed, "learner"));
  int in = input_dim();
  for (int width : config_.hidden_dims) {
    state_.hidden.emplace_back(in, width, state_.rng);
    state_.norms.emplace_back(width);
    in = width;
  }
  state_.output = nn::Linear(in, num_classes_, state_.rng);
  initial_ = state_;
}

int Learner::input_dim() const {
  int side = 2 * config_.window_radius + 1;
  return side * side * channels_;
}

void Learner::fill_features(const Image& image, int y, int x, nn::Mat& out,
                            Eigen::Index col) const {
  int r = config_.window_radius;
  Eigen::Index row = 0;
  for (int dy = -r; dy <= r; ++dy) {
    int yy = std::clamp(y + dy, 0, image.height - 1);
    for (int dx = -r; dx <= r; ++dx) {
      int xx = std::clamp(x + dx, 0, image.width - 1);
      for (int c = 0; c < channels_; ++c) out(row++, col) = image.at(yy, xx, c);
    }
  }
}

void Learner::gather_pixels(std::span<const std::pair<PatchView, LabelPatchView>> regions,
                            nn::Mat& x, std::vector<int>& targets) const {
  std::size_t pixels = 0;
  for (const auto& [patch, lab] : regions) {
    if (patch.image == nullptr || lab.labels == nullptr)
      throw std::invalid_argument("learner: null patch");
    if (patch.image->channels != channels_)
      throw std::invalid_argument("learner: channel count mismatch");
    for (int dy = 0; dy < lab.height; ++dy)
      for (int dx = 0; dx < lab.width; ++dx)
        if (lab.at(dy, dx) != kVoidLabel) ++pixels;
  }
  if (pixels == 0) throw std::invalid_argument("learner: every pixel is void");
  x.resize(input_dim(), static_cast<Eigen::Index>(pixels));
  targets.clear();
  targets.reserve(pixels);
  Eigen::Index col = 0;
  for (const auto& [patch, lab] : regions)
    for (int dy = 0; dy < lab.height; ++dy)
      for (int dx = 0; dx < lab.width; ++dx) {
        std::uint8_t v = lab.at(dy, dx);
        if (v == kVoidLabel) continue;
        if (v >= num_classes_) throw std::invalid_argument("learner: label id out of range");
        fill_features(*patch.image, patch.y0 + dy, patch.x0 + dx, x, col);
        targets.push_back(v);
        ++col;
      }
}

nn::Mat Learner::hidden_eval(const nn::Mat& x) const {
  nn::Mat h = x;
  for (std::size_t i = 0; i < state_.hidden.size(); ++i)
    h = nn::relu(state_.norms[i].forward_eval(state_.hidden[i].forward(h)));
  return h;
}

nn::Mat Learner::probs_from_hidden(const nn::Mat& h) const {
  return nn::softmax(state_.output.forward(h));
}

PredictionMap Learner::predict(const Image& image) const {
  if (image.channels != channels_) throw std::invalid_argument("predict: channel mismatch");
  nn::Mat x(input_dim(), static_cast<Eigen::Index>(image.height) * image.width);
  Eigen::Index col = 0;
  for (int y = 0; y < image.height; ++y)
    for (int xx = 0; xx < image.width; ++xx) fill_features(image, y, xx, x, col++);
  nn::Mat probs = probs_from_hidden(hidden_eval(x));
  PredictionMap out(image.height, image.width, num_classes_);
  col = 0;
  for (int y = 0; y < image.height; ++y)
    for (int xx = 0; xx < image.width; ++xx, ++col)
      for (int c = 0; c < num_classes_; ++c) out.at(y, xx, c) = probs(c, col);
  return out;
}

std::vector<PredictionMap> Learner::predict_mc_dropout(const Image& image, int passes,
                                                       std::uint64_t seed) const {
  if (passes < 1) throw std::invalid_argument("predict_mc_dropout: passes must be >= 1");
  if (image.channels != channels_) throw std::invalid_argument("predict_mc_dropout: channel mismatch");
  if (config_.dropout_rate == 0.0)
    return std::vector<PredictionMap>(static_cast<std::size_t>(passes), predict(image));

  nn::Mat x(input_dim(), static_cast<Eigen::Index>(image.height) * image.width);
  Eigen::Index col = 0;
  for (int y = 0; y < image.height; ++y)
    for (int xx = 0; xx < image.width; ++xx) fill_features(image, y, xx, x, col++);
  nn::Mat h = hidden_eval(x);

  auto rng = make_rng(derive_seed(seed, "mc-dropout"));
  std::vector<PredictionMap> out;
  out.reserve(passes);
  for (int p = 0; p < passes; ++p) {
    nn::Mat mask = nn::dropout_mask(h.rows(), h.cols(), config_.dropout_rate, rng);
    nn::Mat probs = probs_from_hidden(h.cwiseProduct(mask));
    PredictionMap map(image.height, image.width, num_classes_);
    col = 0;
    for (int y = 0; y < image.height; ++y)
      for (int xx = 0; xx < image.width; ++xx, ++col)
        for (int c = 0; c < num_classes_; ++c) map.at(y, xx, c) = probs(c, col);
    out.push_back(std::move(map));
  }
  return out;
}

double Learner::train_batch(const nn::Mat& x, const std::vector<int>& targets) {
  const std::size_t layers = state_.hidden.size();
  std::vector<nn::Mat> lin_in(layers);
  std::vector<nn::Mat> bn_out(layers);
  std::vector<nn::Mat> relu_out(layers);
  std::vector<nn::BatchNorm::Cache> caches(layers);

  nn::Mat cur = x;
  for (std::size_t i = 0; i < layers; ++i) {
    lin_in[i] = cur;
    nn::Mat z = state_.hidden[i].forward(cur);
    bn_out[i] = state_.norms[i].forward_train(z, caches[i]);
    relu_out[i] = nn::relu(bn_out[i]);
    cur = relu_out[i];
  }
  nn::Mat mask;
  nn::Mat dropped = cur;
  if (config_.dropout_rate > 0.0) {
    mask = nn::dropout_mask(cur.rows(), cur.cols(), config_.dropout_rate, state_.rng);
    dropped = cur.cwiseProduct(mask);
  }
  nn::Mat probs = nn::softmax(state_.output.forward(dropped));
  double loss = nn::cross_entropy(probs, targets);

  nn::Mat dlogits = nn::cross_entropy_logit_grad(probs, targets);
  nn::Mat gw_out;
  nn::Vec gb_out;
  nn::Mat grad = state_.output.backward(dropped, dlogits, gw_out, gb_out);
  if (config_.dropout_rate > 0.0) grad = grad.cwiseProduct(mask);

  std::vector<nn::Mat> gw(layers);
  std::vector<nn::Vec> gb(layers);
  std::vector<nn::Vec> ggamma(layers);
  std::vector<nn::Vec> gbeta(layers);
  for (std::size_t i = layers; i-- > 0;) {
    grad = nn::relu_backward(bn_out[i], grad);
    grad = state_.norms[i].backward(caches[i], grad, ggamma[i], gbeta[i]);
    grad = state_.hidden[i].backward(lin_in[i], grad, gw[i], gb[i]);
  }

  state_.output.sgd_step(gw_out, gb_out, config_.sgd);
  for (std::size_t i = 0; i < layers; ++i) {
    state_.hidden[i].sgd_step(gw[i], gb[i], config_.sgd);
    state_.norms[i].sgd_step(ggamma[i], gbeta[i], config_.sgd);
    state_.norms[i].update_running(caches[i]);
  }
  return loss;
}

double Learner::loss_batch(const nn::Mat& x, const std::vector<int>& targets) const {
  nn::Mat cur = x;
  nn::BatchNorm::Cache cache;
  for (std::size_t i = 0; i < state_.hidden.size(); ++i)
    cur = nn::relu(state_.norms[i].forward_train(state_.hidden[i].forward(cur), cache));
  return nn::cross_entropy(nn::softmax(state_.output.forward(cur)), targets);
}

double Learner::train_step(std::span<const std::pair<PatchView, LabelPatchView>> regions) {
  nn::Mat x;
  std::vector<int> targets;
  gather_pixels(regions, x, targets);
  return train_batch(x, targets);
}

double Learner::train_step(const SceneDataset& dataset, std::span<const RegionId> regions) {
  std::vector<std::pair<PatchView, LabelPatchView>> patches;
  patches.reserve(regions.size());
  for (const RegionId& r : regions) patches.push_back(region_pixels(dataset, r));
  return train_step(patches);
}

double Learner::training_loss(
    std::span<const std::pair<PatchView, LabelPatchView>> regions) const {
  nn::Mat x;
  std::vector<int> targets;
  gather_pixels(regions, x, targets);
  return loss_batch(x, targets);
}

Learner::FitResult Learner::train_to_convergence(const SceneDataset& dataset,
                                                 std::span<const RegionId> labeled,
                                                 std::span<const int> reward_images,
                                                 int patience, int max_epochs) {
  if (labeled.empty()) throw std::invalid_argument("train_to_convergence: empty labeled set");
  if (reward_images.empty())
    throw std::invalid_argument("train_to_convergence: no reward images");
  if (patience < 0 || max_epochs < 1)
    throw std::invalid_argument("train_to_convergence: bad stopping parameters");

  nn::Mat x;
  std::vector<int> targets;
  {
    std::vector<std::pair<PatchView, LabelPatchView>> patches;
    patches.reserve(labeled.size());
    for (const RegionId& r : labeled) patches.push_back(region_pixels(dataset, r));
    gather_pixels(patches, x, targets);
  }
  const auto n = static_cast<std::size_t>(x.cols());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  FitResult result;
  double best = -1.0;
  State best_state = state_;
  int since_improve = 0;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), state_.rng);
    for (std::size_t start = 0; start < n; start += config_.batch_size) {
      std::size_t stop = std::min(n, start + config_.batch_size);
      nn::Mat bx(x.rows(), static_cast<Eigen::Index>(stop - start));
      std::vector<int> bt(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        bx.col(static_cast<Eigen::Index>(i - start)) =
            x.col(static_cast<Eigen::Index>(order[i]));
        bt[i - start] = targets[order[i]];
      }
      train_batch(bx, bt);
    }
    ++result.epochs;
    double miou = evaluate_miou(*this, dataset, reward_images);
    if (miou > best) {
      best = miou;
      best_state = state_;
      since_improve = 0;
    } else {
      ++since_improve;
    }
    if (since_improve >= patience) break;
  }
  state_ = best_state;
  result.best_miou = best;
  return result;
}

void Learner::reset_to_initial() { state_ = initial_; }
void Learner::capture_initial() { initial_ = state_; }

bool Learner::operator==(const Learner& other) const {
  return config_ == other.config_ && num_classes_ == other.num_classes_ &&
         channels_ == other.channels_ && state_ == other.state_ && initial_ == other.initial_;
}

void Learner::visit_params(const nn::ParamVisitor& fn) {
  for (auto& l : state_.hidden) {
    visit_mat(l.weight, fn);
    visit_vec(l.bias, fn);
  }
  for (auto& b : state_.norms) {
    visit_vec(b.gamma, fn);
    visit_vec(b.beta, fn);
  }
  visit_mat(state_.output.weight, fn);
  visit_vec(state_.output.bias, fn);
}

void Learner::save(std::ostream& out) const {
  out.write(kMagic, sizeof kMagic - 1);
  write_string(out, std::string(kVersion));
  write_pod(out, config_.window_radius);
  write_pod(out, static_cast<std::int32_t>(config_.hidden_dims.size()));
  for (int d : config_.hidden_dims) write_pod(out, d);
  write_pod(out, config_.dropout_rate);
  write_pod(out, config_.sgd.learning_rate);
  write_pod(out, config_.sgd.momentum);
  write_pod(out, config_.sgd.weight_decay);
  write_pod(out, config_.batch_size);
  write_pod(out, config_.replay_labeled);
  write_pod(out, num_classes_);
  write_pod(out, channels_);
  for (const State* s : {&state_, &initial_}) {
    for (const auto& l : s->hidden) write_linear(out, l);
    for (const auto& b : s->norms) write_norm(out, b);
    write_linear(out, s->output);
    write_rng(out, s->rng);
  }
  if (!out) throw std::runtime_error("learner checkpoint write failed");
}

Learner Learner::load(std::istream& in) {
  char magic[sizeof kMagic - 1];
  in.read(magic, sizeof magic);
  if (!in || std::string_view(magic, sizeof magic) != kMagic)
    throw std::runtime_error("not a learner checkpoint");
  if (read_string(in) != kVersion) throw std::runtime_error("learner checkpoint version mismatch");
  LearnerConfig cfg;
  cfg.window_radius = read_pod<int>(in);
  auto n_hidden = read_pod<std::int32_t>(in);
  if (n_hidden < 1 || n_hidden > 64) throw std::runtime_error("corrupt learner checkpoint");
  cfg.hidden_dims.clear();
  for (std::int32_t i = 0; i < n_hidden; ++i) cfg.hidden_dims.push_back(read_pod<int>(in));
  cfg.dropout_rate = read_pod<double>(in);
  cfg.sgd.learning_rate = read_pod<double>(in);
  cfg.sgd.momentum = read_pod<double>(in);
  cfg.sgd.weight_decay = read_pod<double>(in);
  cfg.batch_size = read_pod<int>(in);
  cfg.replay_labeled = read_pod<bool>(in);
  int classes = read_pod<int>(in);
  int channels = read_pod<int>(in);
  Learner learner(cfg, classes, channels, 0);
  for (State* s : {&learner.state_, &learner.initial_}) {
    for (auto& l : s->hidden) l = read_linear(in);
    for (auto& b : s->norms) b = read_norm(in);
    s->output = read_linear(in);
    s->rng = read_rng(in);
  }
  if (learner.state_.hidden.front().in_dim() != learner.input_dim() ||
      learner.state_.output.out_dim() != classes)
    throw std::runtime_error("learner checkpoint architecture mismatch");
  return learner;
}

void Learner::save_checkpoint(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save(out);
}

Learner Learner::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return load(in);
}

IouReport evaluate(const Learner& learner, const SceneDataset& dataset,
                   std::span<const int> image_indices) {
  if (image_indices.empty()) throw std::invalid_argument("evaluate: no images");
  ConfusionMatrix conf(dataset.num_classes);
  for (int i : image_indices) {
    if (i < 0 || i >= dataset.num_images())
      throw std::invalid_argument("evaluate: image index out of range");
    accumulate(conf, argmax_map(learner.predict(dataset.images[i])), dataset.labels[i]);
  }
  return mean_iou(conf);
}

double evaluate_miou(const Learner& learner, const SceneDataset& dataset,
                     std::span<const int> image_indices) {
  return evaluate(learner, dataset, image_indices).mean;
}

}  // namespace alseg
