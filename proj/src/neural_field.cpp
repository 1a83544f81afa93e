#include "hatnav/neural_field.hpp"

#include <cmath>

#include "hatnav/error.hpp"

namespace hatnav {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Fourier features of normalized coordinates, one column per point.
Eigen::MatrixXd encode(const Eigen::Matrix2Xd& u, int bands) {
  const Eigen::Index m = u.cols();
  Eigen::MatrixXd features(2 * (2 * bands + 1), m);
  features.topRows<2>() = u;
  for (int k = 0; k < bands; ++k) {
    const double omega = std::ldexp(M_PI, k);
    for (int axis = 0; axis < 2; ++axis) {
      const Eigen::Index row = 2 + 4 * k + 2 * axis;
      for (Eigen::Index j = 0; j < m; ++j) {
        const double a = omega * u(axis, j);
        features(row, j) = std::sin(a);
        features(row + 1, j) = std::cos(a);
      }
    }
  }
  return features;
}

struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre;   // pre-activation per layer
  std::vector<Eigen::MatrixXd> post;  // post[0] = features, post[l+1] = activation of layer l
};

void forward(const NeuralField& field, const Eigen::Matrix2Xd& u, ForwardCache& cache) {
  const auto& layers = field.layers;
  cache.pre.resize(layers.size());
  cache.post.resize(layers.size() + 1);
  cache.post[0] = encode(u, field.config.fourier_bands);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    cache.pre[l] = (layers[l].weights * cache.post[l]).colwise() + layers[l].bias;
    if (l + 1 < layers.size()) {
      cache.post[l + 1] = cache.pre[l].unaryExpr([](double z) { return softplus(z); });
    } else {
      cache.post[l + 1] = cache.pre[l];
    }
  }
}

Eigen::Matrix2Xd normalize_batch(const NeuralField& field, const Eigen::Matrix2Xd& points) {
  const Vec2 scale = field.normalize_scale();
  Eigen::Matrix2Xd u = points.colwise() - field.world_rect.min;
  u.array().colwise() *= scale.array();
  u.array() -= 1.0;
  return u;
}

}  // namespace

void FieldConfig::validate() const {
  if (fourier_bands < 0) throw Error(ErrorCode::kInvalidConfig, "fourier_bands must be >= 0");
  if (fourier_bands > 30) throw Error(ErrorCode::kInvalidConfig, "fourier_bands is unreasonably large");
  for (int w : hidden_sizes) {
    if (w < 1) throw Error(ErrorCode::kInvalidConfig, "hidden layer widths must be >= 1");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidConfig, "learning_rate must be positive");
  }
  if (batch_size < 1) throw Error(ErrorCode::kInvalidConfig, "batch_size must be >= 1");
}

std::size_t NeuralField::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

bool NeuralField::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

Vec2 NeuralField::normalize_scale() const { return (2.0 / world_rect.extents().array()).matrix(); }

Vec2 NeuralField::normalize(const Vec2& p) const {
  return ((p - world_rect.min).array() * normalize_scale().array() - 1.0).matrix();
}

NeuralField field_init(const FieldConfig& config, const Rect2& world_rect) {
  config.validate();
  if (world_rect.degenerate() || !world_rect.min.allFinite() || !world_rect.max.allFinite()) {
    throw Error(ErrorCode::kInvalidConfig, "world rectangle must have positive finite extent");
  }
  NeuralField field;
  field.config = config;
  field.world_rect = world_rect;
  Rng rng(derive_seed(config.seed, "field-init"));
  int fan_in = config.input_dim();
  std::vector<int> widths = config.hidden_sizes;
  widths.push_back(2);
  for (int fan_out : widths) {
    DenseLayer layer;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    layer.weights.resize(fan_out, fan_in);
    // Row-major fill order so the stream does not depend on Eigen storage.
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
    }
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    field.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return field;
}

void field_evaluate(const NeuralField& field, const Eigen::Matrix2Xd& points, Eigen::Matrix2Xd& probs,
                    Eigen::Matrix4Xd* grads) {
  const Eigen::Index m = points.cols();
  const Eigen::Matrix2Xd u = normalize_batch(field, points);
  ForwardCache cache;
  forward(field, u, cache);
  const Eigen::MatrixXd& logits = cache.post.back();
  probs.resize(2, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    probs(0, j) = logistic(logits(0, j));
    probs(1, j) = logistic(logits(1, j));
  }
  if (grads == nullptr) return;

  grads->resize(4, m);
  const Vec2 scale = field.normalize_scale();
  const int bands = field.config.fourier_bands;
  const auto& layers = field.layers;
  for (int channel = 0; channel < 2; ++channel) {
    // delta: d logit_channel / d pre-activation, walked back to the features.
    Eigen::MatrixXd delta =
        layers.back().weights.row(channel).transpose().replicate(1, m);  // d logit / d post[L-1]
    for (std::size_t l = layers.size() - 1; l-- > 0;) {
      delta.array() *= cache.pre[l].unaryExpr([](double z) { return logistic(z); }).array();
      delta = layers[l].weights.transpose() * delta;
    }
    // delta is now d logit / d features (D x m); chain through the encoding.
    for (Eigen::Index j = 0; j < m; ++j) {
      double gx = delta(0, j);
      double gy = delta(1, j);
      for (int k = 0; k < bands; ++k) {
        const double omega = std::ldexp(M_PI, k);
        const Eigen::Index row = 2 + 4 * k;
        const double ax = omega * u(0, j);
        const double ay = omega * u(1, j);
        gx += omega * (delta(row, j) * std::cos(ax) - delta(row + 1, j) * std::sin(ax));
        gy += omega * (delta(row + 2, j) * std::cos(ay) - delta(row + 3, j) * std::sin(ay));
      }
      const double p = probs(channel, j);
      const double dp = p * (1.0 - p);
      (*grads)(2 * channel, j) = dp * gx * scale.x();
      (*grads)(2 * channel + 1, j) = dp * gy * scale.y();
    }
  }
}

FieldSample field_forward(const NeuralField& field, const Vec2& p) {
  Eigen::Matrix2Xd pts(2, 1);
  pts.col(0) = p;
  Eigen::Matrix2Xd probs;
  field_evaluate(field, pts, probs, nullptr);
  return {probs(0, 0), probs(1, 0)};
}

FieldGradient field_input_grad(const NeuralField& field, const Vec2& p) {
  Eigen::Matrix2Xd pts(2, 1);
  pts.col(0) = p;
  Eigen::Matrix2Xd probs;
  Eigen::Matrix4Xd grads;
  field_evaluate(field, pts, probs, &grads);
  return {Vec2(grads(0, 0), grads(1, 0)), Vec2(grads(2, 0), grads(3, 0))};
}

FieldLabels make_labels(const TraversabilityGrid& grid, PlanMode mode) {
  if (grid.size() == 0) throw Error(ErrorCode::kEmptyGrid, "traversability grid is empty");
  FieldLabels labels;
  const auto n = static_cast<Eigen::Index>(grid.size());
  labels.positions.resize(2, n);
  labels.targets.resize(2, n);
  const auto& d = grid.dims();
  for (int iy = 0; iy < d[1]; ++iy) {
    for (int ix = 0; ix < d[0]; ++ix) {
      const auto i = static_cast<Eigen::Index>(grid.linear({ix, iy}));
      const CellClass cls = grid.at({ix, iy}).cls;
      labels.positions.col(i) = grid.center({ix, iy});
      if (mode == PlanMode::kHat) {
        labels.targets(0, i) = cls == CellClass::kBlocked ? 1.0 : 0.0;
        labels.targets(1, i) = cls == CellClass::kDuck ? 1.0 : 0.0;
      } else {
        labels.targets(0, i) = cls == CellClass::kFree ? 0.0 : 1.0;
        labels.targets(1, i) = 0.0;
      }
    }
  }
  return labels;
}

FieldTrainer::FieldTrainer(NeuralField& field, FieldLabels labels)
    : field_(field), labels_(std::move(labels)), rng_(derive_seed(field.config.seed, "field-batches")) {
  if (labels_.positions.cols() == 0) throw Error(ErrorCode::kEmptyGrid, "no training labels");
  for (const auto& l : field_.layers) {
    m_.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  }
  v_ = m_;
  order_.resize(static_cast<std::size_t>(labels_.positions.cols()));
  cursor_ = order_.size();  // forces a shuffle on first use
}

std::vector<std::size_t> FieldTrainer::next_batch() {
  const std::size_t n = order_.size();
  const std::size_t b = std::min<std::size_t>(n, static_cast<std::size_t>(field_.config.batch_size));
  std::vector<std::size_t> batch;
  batch.reserve(b);
  while (batch.size() < b) {
    if (cursor_ >= n) {
      for (std::size_t i = 0; i < n; ++i) order_[i] = i;
      for (std::size_t i = n; i > 1; --i) std::swap(order_[i - 1], order_[rng_.below(i)]);
      cursor_ = 0;
    }
    batch.push_back(order_[cursor_++]);
  }
  return batch;
}

double FieldTrainer::step(const std::vector<std::size_t>& batch) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  Eigen::Matrix2Xd pts(2, b);
  Eigen::Matrix2Xd y(2, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    pts.col(j) = labels_.positions.col(static_cast<Eigen::Index>(batch[j]));
    y.col(j) = labels_.targets.col(static_cast<Eigen::Index>(batch[j]));
  }
  ForwardCache cache;
  forward(field_, normalize_batch(field_, pts), cache);
  const Eigen::MatrixXd& logits = cache.post.back();

  double loss = 0.0;
  Eigen::MatrixXd delta(2, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    for (int c = 0; c < 2; ++c) {
      const double z = logits(c, j);
      loss += softplus(z) - y(c, j) * z;
      delta(c, j) = (logistic(z) - y(c, j)) / static_cast<double>(b);
    }
  }
  loss /= static_cast<double>(b);

  ++step_count_;
  const double lr = field_.config.learning_rate;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step_count_));
  auto adam = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseAbs2();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEps);
  };
  for (std::size_t l = field_.layers.size(); l-- > 0;) {
    const Eigen::MatrixXd grad_w = delta * cache.post[l].transpose();
    const Eigen::VectorXd grad_b = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = field_.layers[l].weights.transpose() * delta;
      back.array() *= cache.pre[l - 1].unaryExpr([](double z) { return logistic(z); }).array();
      delta = std::move(back);
    }
    adam(field_.layers[l].weights, m_[l].weights, v_[l].weights, grad_w);
    adam(field_.layers[l].bias, m_[l].bias, v_[l].bias, grad_b);
  }
  return loss;
}

std::vector<double> FieldTrainer::train(int steps) {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "training needs at least one step");
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s) losses.push_back(step(next_batch()));
  return losses;
}

double FieldTrainer::full_loss() const {
  ForwardCache cache;
  forward(field_, normalize_batch(field_, labels_.positions), cache);
  const Eigen::MatrixXd& logits = cache.post.back();
  double loss = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    for (int c = 0; c < 2; ++c) loss += softplus(logits(c, j)) - labels_.targets(c, j) * logits(c, j);
  }
  return loss / static_cast<double>(logits.cols());
}

std::array<double, 2> FieldTrainer::accuracy() const {
  Eigen::Matrix2Xd probs;
  field_evaluate(field_, labels_.positions, probs, nullptr);
  std::array<double, 2> correct{0.0, 0.0};
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    for (int c = 0; c < 2; ++c) {
      if ((probs(c, j) >= 0.5) == (labels_.targets(c, j) >= 0.5)) correct[c] += 1.0;
    }
  }
  const auto n = static_cast<double>(probs.cols());
  return {correct[0] / n, correct[1] / n};
}

TrainStats field_train(NeuralField& field, const TraversabilityGrid& grid, PlanMode mode, int steps) {
  FieldTrainer trainer(field, make_labels(grid, mode));
  TrainStats stats;
  stats.losses = trainer.train(steps);
  const auto acc = trainer.accuracy();
  stats.accuracy_block = acc[0];
  stats.accuracy_duck = acc[1];
  return stats;
}

}  // namespace hatnav
