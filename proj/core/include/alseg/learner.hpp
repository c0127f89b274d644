#pragma once

#include <alseg/dataset.hpp>
#include <alseg/image.hpp>
#include <alseg/metrics.hpp>
#include <alseg/nn.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace alseg {

// Per-pixel class probabilities, row-major H x W x C. Each pixel's
// probabilities sum to 1.
struct PredictionMap {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<double> data;

  PredictionMap() = default;
  PredictionMap(int h, int w, int c)
      : height(h), width(w), num_classes(c),
        data(static_cast<std::size_t>(h) * w * c, 0.0) {}

  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * num_classes + c];
  }
  double& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * num_classes + c];
  }
  bool operator==(const PredictionMap&) const = default;
};

// Per-pixel argmax; ties go to the smallest class id.
LabelMap argmax_map(const PredictionMap& pred);

struct LearnerConfig {
  int window_radius = 1;  // pixel features span a (2r+1)^2 window
  std::vector<int> hidden_dims{64};
  double dropout_rate = 0.25;
  nn::SgdConfig sgd{1e-3, 0.9, 1e-4};
  int batch_size = 256;
  // Per-round updates train on every labeled region instead of only the
  // newly added ones.
  bool replay_labeled = false;

  void validate() const;
  bool operator==(const LearnerConfig&) const = default;
};

// Pixel classifier: MLP over the raw channel values of a local window
// (clamped at image edges), Linear -> BatchNorm -> ReLU per hidden layer,
// dropout before the output layer, softmax output. Trained with
// SGD-momentum on cross-entropy; VOID-labeled pixels never contribute.
class Learner {
 public:
  Learner(LearnerConfig config, int num_classes, int channels, std::uint64_t seed);

  const LearnerConfig& config() const { return config_; }
  int num_classes() const { return num_classes_; }
  int channels() const { return channels_; }
  int input_dim() const;

  // Deterministic inference: dropout off, batch norm on running stats.
  PredictionMap predict(const Image& image) const;
  // Dropout active with independent masks per pass; seeded, does not touch
  // the learner's own rng. rate 0 degenerates to `passes` copies of predict.
  std::vector<PredictionMap> predict_mc_dropout(const Image& image, int passes,
                                                std::uint64_t seed) const;

  // One SGD step over all non-VOID pixels of the given regions; returns the
  // pre-step loss. Throws if every pixel is VOID (params untouched).
  double train_step(std::span<const std::pair<PatchView, LabelPatchView>> regions);
  double train_step(const SceneDataset& dataset, std::span<const RegionId> regions);

  // The loss train_step would report, evaluated without dropout and without
  // touching parameters, running stats, or the rng. With dropout rate 0 this
  // is exactly train_step's surface; finite-difference checks probe it.
  double training_loss(std::span<const std::pair<PatchView, LabelPatchView>> regions) const;

  // Applies fn to every trainable parameter in a fixed order.
  void visit_params(const nn::ParamVisitor& fn);

  struct FitResult {
    double best_miou = 0.0;
    int epochs = 0;
  };
  // Epochs of shuffled pixel mini-batches over `labeled`; after each epoch
  // the mean IoU on `reward_images` decides early stopping. The learner is
  // left holding the best-scoring parameters.
  FitResult train_to_convergence(const SceneDataset& dataset,
                                 std::span<const RegionId> labeled,
                                 std::span<const int> reward_images,
                                 int patience, int max_epochs);

  // Restores the exact state captured at construction (or at the last
  // capture_initial), including optimizer momentum, BN stats, and rng.
  void reset_to_initial();
  // Re-captures the current state as the initial snapshot. Used once after
  // pretraining to freeze the episode restart point.
  void capture_initial();

  bool operator==(const Learner& other) const;

  void save_checkpoint(const std::filesystem::path& path) const;
  static Learner load_checkpoint(const std::filesystem::path& path);
  void save(std::ostream& out) const;
  static Learner load(std::istream& in);

 private:
  struct State {
    std::vector<nn::Linear> hidden;
    std::vector<nn::BatchNorm> norms;
    nn::Linear output;
    std::mt19937_64 rng;
    bool operator==(const State& other) const;
  };

  void fill_features(const Image& image, int y, int x, nn::Mat& out, Eigen::Index col) const;
  void gather_pixels(std::span<const std::pair<PatchView, LabelPatchView>> regions, nn::Mat& x,
                     std::vector<int>& targets) const;
  nn::Mat hidden_eval(const nn::Mat& x) const;
  nn::Mat probs_from_hidden(const nn::Mat& h) const;
  double train_batch(const nn::Mat& x, const std::vector<int>& targets);
  double loss_batch(const nn::Mat& x, const std::vector<int>& targets) const;

  LearnerConfig config_;
  int num_classes_ = 0;
  int channels_ = 0;
  State state_;
  State initial_;
};

// Mean IoU of the learner's argmax predictions over the given images,
// against ground truth, VOID excluded.
IouReport evaluate(const Learner& learner, const SceneDataset& dataset,
                   std::span<const int> image_indices);
double evaluate_miou(const Learner& learner, const SceneDataset& dataset,
                     std::span<const int> image_indices);

}  // namespace alseg
