#include "alseg/nn.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace alseg::nn {

Linear::Linear(int in, int out, std::mt19937_64& rng) {
  if (in <= 0 || out <= 0) throw std::invalid_argument("linear: dimensions must be positive");
  weight.resize(out, in);
  std::normal_distribution<double> init(0.0, std::sqrt(2.0 / in));
  for (Eigen::Index j = 0; j < weight.cols(); ++j)
    for (Eigen::Index i = 0; i < weight.rows(); ++i) weight(i, j) = init(rng);
  bias = Vec::Zero(out);
  weight_vel = Mat::Zero(out, in);
  bias_vel = Vec::Zero(out);
}

Mat Linear::backward(const Mat& x, const Mat& grad_out, Mat& grad_w, Vec& grad_b) const {
  grad_w = grad_out * x.transpose();
  grad_b = grad_out.rowwise().sum();
  return weight.transpose() * grad_out;
}

void Linear::sgd_step(const Mat& grad_w, const Vec& grad_b, const SgdConfig& cfg) {
  // Weight decay applies to the weight matrix only.
  weight_vel = cfg.momentum * weight_vel + grad_w + cfg.weight_decay * weight;
  bias_vel = cfg.momentum * bias_vel + grad_b;
  weight -= cfg.learning_rate * weight_vel;
  bias -= cfg.learning_rate * bias_vel;
}

BatchNorm::BatchNorm(int dim) {
  if (dim <= 0) throw std::invalid_argument("batchnorm: dimension must be positive");
  gamma = Vec::Ones(dim);
  beta = Vec::Zero(dim);
  running_mean = Vec::Zero(dim);
  running_var = Vec::Ones(dim);
  gamma_vel = Vec::Zero(dim);
  beta_vel = Vec::Zero(dim);
}

Mat BatchNorm::forward_train(const Mat& x, Cache& cache) const {
  cache.mean = x.rowwise().mean();
  Mat centered = x.colwise() - cache.mean;
  cache.var = centered.array().square().rowwise().mean();
  cache.inv_std = (cache.var.array() + eps).rsqrt();
  cache.x_hat = centered.array().colwise() * cache.inv_std.array();
  return (cache.x_hat.array().colwise() * gamma.array()).colwise() + beta.array();
}

Mat BatchNorm::forward_eval(const Mat& x) const {
  Vec inv = (running_var.array() + eps).rsqrt();
  Mat x_hat = (x.colwise() - running_mean).array().colwise() * inv.array();
  return (x_hat.array().colwise() * gamma.array()).colwise() + beta.array();
}

Mat BatchNorm::backward(const Cache& cache, const Mat& grad_out, Vec& grad_gamma,
                        Vec& grad_beta) const {
  grad_gamma = (grad_out.array() * cache.x_hat.array()).rowwise().sum();
  grad_beta = grad_out.rowwise().sum();
  const double m = static_cast<double>(grad_out.cols());
  Mat dx_hat = grad_out.array().colwise() * gamma.array();
  Vec sum_dx = dx_hat.rowwise().sum();
  Vec sum_dx_xhat = (dx_hat.array() * cache.x_hat.array()).rowwise().sum();
  Mat dx = m * dx_hat;
  dx.colwise() -= sum_dx;
  dx -= (cache.x_hat.array().colwise() * sum_dx_xhat.array()).matrix();
  return (dx.array().colwise() * (cache.inv_std.array() / m)).matrix();
}

void BatchNorm::update_running(const Cache& cache) {
  running_mean = (1.0 - momentum) * running_mean + momentum * cache.mean;
  running_var = (1.0 - momentum) * running_var + momentum * cache.var;
}

void BatchNorm::sgd_step(const Vec& grad_gamma, const Vec& grad_beta, const SgdConfig& cfg) {
  gamma_vel = cfg.momentum * gamma_vel + grad_gamma;
  beta_vel = cfg.momentum * beta_vel + grad_beta;
  gamma -= cfg.learning_rate * gamma_vel;
  beta -= cfg.learning_rate * beta_vel;
}

Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
  Mat mask(rows, cols);
  if (rate == 0.0) {
    mask.setOnes();
    return mask;
  }
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = keep(rng) ? scale : 0.0;
  return mask;
}

Mat softmax(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    Vec col = logits.col(j);
    double mx = col.maxCoeff();
    Vec e = (col.array() - mx).exp();
    out.col(j) = e / e.sum();
  }
  return out;
}

double cross_entropy(const Mat& probs, const std::vector<int>& targets) {
  if (static_cast<Eigen::Index>(targets.size()) != probs.cols())
    throw std::invalid_argument("cross_entropy: target count mismatch");
  if (targets.empty()) throw std::invalid_argument("cross_entropy: empty batch");
  double loss = 0.0;
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    int t = targets[static_cast<std::size_t>(j)];
    if (t < 0 || t >= probs.rows()) throw std::invalid_argument("cross_entropy: bad target");
    loss -= std::log(probs(t, j));
  }
  return loss / static_cast<double>(probs.cols());
}

Mat cross_entropy_logit_grad(const Mat& probs, const std::vector<int>& targets) {
  Mat grad = probs;
  const double inv = 1.0 / static_cast<double>(probs.cols());
  for (Eigen::Index j = 0; j < probs.cols(); ++j)
    grad(targets[static_cast<std::size_t>(j)], j) -= 1.0;
  return grad * inv;
}

bool exact_equal(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

bool exact_equal(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

bool exact_equal(const Linear& a, const Linear& b) {
  return exact_equal(a.weight, b.weight) && exact_equal(a.bias, b.bias) &&
         exact_equal(a.weight_vel, b.weight_vel) && exact_equal(a.bias_vel, b.bias_vel);
}

bool exact_equal(const BatchNorm& a, const BatchNorm& b) {
  return exact_equal(a.gamma, b.gamma) && exact_equal(a.beta, b.beta) &&
         exact_equal(a.running_mean, b.running_mean) && exact_equal(a.running_var, b.running_var) &&
         exact_equal(a.gamma_vel, b.gamma_vel) && exact_equal(a.beta_vel, b.beta_vel) &&
         a.momentum == b.momentum && a.eps == b.eps;
}

void serialize(std::ostream& out, const Mat& m) {
  std::int64_t rows = m.rows(), cols = m.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

void serialize(std::ostream& out, const Vec& v) {
  std::int64_t rows = v.size(), cols = 1;
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
}

namespace {
void read_dims(std::istream& in, std::int64_t& rows, std::int64_t& cols) {
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in || rows < 0 || cols < 0 || rows > (1 << 28) || cols > (1 << 28))
    throw std::runtime_error("corrupt tensor header");
}
}  // namespace

void deserialize(std::istream& in, Mat& m) {
  std::int64_t rows, cols;
  read_dims(in, rows, cols);
  m.resize(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw std::runtime_error("corrupt tensor payload");
}

void deserialize(std::istream& in, Vec& v) {
  std::int64_t rows, cols;
  read_dims(in, rows, cols);
  if (cols != 1) throw std::runtime_error("corrupt vector header");
  v.resize(rows);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double) * v.size()));
  if (!in) throw std::runtime_error("corrupt tensor payload");
}

}  // namespace alseg::nn
