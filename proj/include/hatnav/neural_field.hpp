#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

#include "hatnav/geometry.hpp"
#include "hatnav/heightmap.hpp"
#include "hatnav/rng.hpp"

namespace hatnav {

struct FieldConfig {
  int fourier_bands = 6;
  std::vector<int> hidden_sizes{64, 64};
  double learning_rate = 1e-3;
  int batch_size = 256;
  std::uint64_t seed = 0;

  void validate() const;
  int input_dim() const { return 2 * (2 * fourier_bands + 1); }
};

enum class PlanMode { kHat, kFlat2d };

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// MLP from a Fourier-encoded normalized (x, y) to two logits: blocking and
/// ducking. Hidden layers use softplus so input gradients are continuous.
struct NeuralField {
  FieldConfig config;
  Rect2 world_rect;
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
  bool all_finite() const;
  /// World point to [-1, 1]^2 over world_rect.
  Vec2 normalize(const Vec2& p) const;
  Vec2 normalize_scale() const;
};

struct FieldSample {
  double p_block = 0.0;
  double p_duck = 0.0;
};

struct FieldGradient {
  Vec2 d_block = Vec2::Zero();
  Vec2 d_duck = Vec2::Zero();
};

struct TrainStats {
  std::vector<double> losses;  // one entry per optimization step
  double accuracy_block = 0.0;
  double accuracy_duck = 0.0;
};

NeuralField field_init(const FieldConfig& config, const Rect2& world_rect);

FieldSample field_forward(const NeuralField& field, const Vec2& p);

/// Gradient of both probabilities with respect to the world-space point.
FieldGradient field_input_grad(const NeuralField& field, const Vec2& p);

/// Batched evaluation: `points` is 2 x M (world). Fills probs (2 x M) and, if
/// requested, grads (4 x M: d_block/dx, d_block/dy, d_duck/dx, d_duck/dy).
void field_evaluate(const NeuralField& field, const Eigen::Matrix2Xd& points, Eigen::Matrix2Xd& probs,
                    Eigen::Matrix4Xd* grads);

/// Per-cell training targets for a mode.
struct FieldLabels {
  Eigen::Matrix2Xd positions;  // cell centers
  Eigen::Matrix2Xd targets;    // row 0 block, row 1 duck
};

FieldLabels make_labels(const TraversabilityGrid& grid, PlanMode mode);

/// Stateful trainer: owns the moment estimates and the shuffled batch order so
/// training can resume across planning iterations.
class FieldTrainer {
 public:
  FieldTrainer(NeuralField& field, FieldLabels labels);

  /// Runs `steps` minibatch updates; returns the mean loss of each step.
  std::vector<double> train(int steps);
  /// Mean summed-BCE over all labels.
  double full_loss() const;
  /// Fraction of cells where thresholded outputs match targets, per channel.
  std::array<double, 2> accuracy() const;

  const FieldLabels& labels() const { return labels_; }

 private:
  double step(const std::vector<std::size_t>& batch);
  std::vector<std::size_t> next_batch();

  NeuralField& field_;
  FieldLabels labels_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  long step_count_ = 0;
  std::vector<DenseLayer> m_;
  std::vector<DenseLayer> v_;
};

TrainStats field_train(NeuralField& field, const TraversabilityGrid& grid, PlanMode mode, int steps);

}  // namespace hatnav
