#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <vector>

namespace alseg::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct SgdConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 0.0;

  bool operator==(const SgdConfig&) const = default;
};

// Fully-connected layer with SGD-momentum state. Activations are laid out as
// (features x batch) columns.
struct Linear {
  Mat weight;  // out x in
  Vec bias;
  Mat weight_vel;
  Vec bias_vel;

  Linear() = default;
  Linear(int in, int out, std::mt19937_64& rng);

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }

  Mat forward(const Mat& x) const { return (weight * x).colwise() + bias; }
  // Returns grad wrt x; writes parameter grads to grad_w / grad_b.
  Mat backward(const Mat& x, const Mat& grad_out, Mat& grad_w, Vec& grad_b) const;
  void sgd_step(const Mat& grad_w, const Vec& grad_b, const SgdConfig& cfg);
};

// Per-feature batch normalization. Training-mode forward is const (batch
// stats go to the cache); running statistics are updated explicitly so loss
// evaluation stays a pure function of (params, batch).
struct BatchNorm {
  Vec gamma;
  Vec beta;
  Vec running_mean;
  Vec running_var;
  Vec gamma_vel;
  Vec beta_vel;
  double momentum = 0.1;
  double eps = 1e-5;

  struct Cache {
    Vec mean;
    Vec var;  // biased
    Vec inv_std;
    Mat x_hat;
  };

  BatchNorm() = default;
  explicit BatchNorm(int dim);

  Mat forward_train(const Mat& x, Cache& cache) const;
  Mat forward_eval(const Mat& x) const;
  Mat backward(const Cache& cache, const Mat& grad_out, Vec& grad_gamma, Vec& grad_beta) const;
  void update_running(const Cache& cache);
  void sgd_step(const Vec& grad_gamma, const Vec& grad_beta, const SgdConfig& cfg);
};

inline Mat relu(const Mat& x) { return x.cwiseMax(0.0); }
inline Mat relu_backward(const Mat& x, const Mat& grad_out) {
  return (x.array() > 0.0).cast<double>() * grad_out.array();
}

// Inverted dropout: mask entries are 0 or 1/(1-rate).
Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng);

// Column-wise softmax.
Mat softmax(const Mat& logits);
// Mean cross-entropy over columns; targets are class ids per column.
double cross_entropy(const Mat& probs, const std::vector<int>& targets);
// Gradient of mean cross-entropy wrt logits given softmax output.
Mat cross_entropy_logit_grad(const Mat& probs, const std::vector<int>& targets);

// Parameter visitation used by checkpointing and finite-difference tests.
using ParamVisitor = std::function<void(double&)>;

// Bitwise equality (Eigen's operator== is coefficient-wise).
bool exact_equal(const Mat& a, const Mat& b);
bool exact_equal(const Vec& a, const Vec& b);
bool exact_equal(const Linear& a, const Linear& b);
bool exact_equal(const BatchNorm& a, const BatchNorm& b);

void serialize(std::ostream& out, const Mat& m);
void serialize(std::ostream& out, const Vec& v);
void deserialize(std::istream& in, Mat& m);
void deserialize(std::istream& in, Vec& v);

}  // namespace alseg::nn
