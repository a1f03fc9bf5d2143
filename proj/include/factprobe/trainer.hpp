#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "factprobe/embedding_store.hpp"
#include "factprobe/metrics.hpp"
#include "factprobe/probe_model.hpp"

namespace factprobe {

struct TrainConfig {
  int batch_size = 32;
  double peak_lr = 1e-3;
  int max_epochs = 20;
  int patience = 5;
  double warmup_ratio = 0.05;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 42;
  // Inverse-class-ratio loss weights; false trains with uniform weights.
  bool weighted_loss = true;

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// w_c = N / (3 * counts[c]). Throws InvalidArgument on a zero count.
Eigen::Vector3d class_weights(std::span<const std::size_t> counts);

template <typename Scalar>
struct LossAndGrad {
  double loss = 0.0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dlogits;
};

/// Single-sample weighted cross-entropy on a logit vector:
/// loss = -w_y log softmax(z)_y, gradient = w_y (softmax(z) - onehot(y)).
template <typename Derived>
std::pair<double, Eigen::VectorXd> weighted_cross_entropy(const Eigen::MatrixBase<Derived>& logits,
                                                          Label label,
                                                          const Eigen::Vector3d& weights) {
  const Eigen::VectorXd z = logits.template cast<double>();
  const double m = z.maxCoeff();
  const Eigen::VectorXd shifted = z.array() - m;
  const double log_norm = std::log(shifted.array().exp().sum());
  const int y = label_index(label);
  const double w = weights[y];
  Eigen::VectorXd grad = (shifted.array() - log_norm).exp();
  grad[y] -= 1.0;
  return {-w * (shifted[y] - log_norm), w * grad};
}

/// Batch loss as the weighted mean sum_i w_i l_i / sum_i w_i with its
/// gradient with respect to the logit matrix (n_classes x B).
template <typename Scalar>
LossAndGrad<Scalar> batch_weighted_cross_entropy(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& logits,
    std::span<const Label> labels, const Eigen::Vector3d& weights) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.cols()) {
    throw InvalidArgument("length mismatch");
  }
  LossAndGrad<Scalar> out;
  out.dlogits.resize(logits.rows(), logits.cols());
  double weight_sum = 0.0;
  double loss_sum = 0.0;
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    auto [loss, grad] = weighted_cross_entropy(logits.col(c), labels[c], weights);
    loss_sum += loss;
    weight_sum += weights[label_index(labels[c])];
    out.dlogits.col(c) = grad.template cast<Scalar>();
  }
  if (weight_sum > 0.0) {
    out.loss = loss_sum / weight_sum;
    out.dlogits /= static_cast<Scalar>(weight_sum);
  }
  return out;
}

/// Linear warmup over ceil(warmup_ratio * total_steps) steps, then cosine
/// decay to zero at total_steps.
double cosine_lr(std::int64_t step, std::int64_t total_steps, double warmup_ratio, double peak_lr);

std::int64_t warmup_steps(std::int64_t total_steps, double warmup_ratio);

/// First and second moments per parameter tensor.
template <typename Scalar>
struct AdamState {
  ProbeParams<Scalar> m;
  ProbeParams<Scalar> v;
  std::int64_t t = 0;

  static AdamState like(const ProbeParams<Scalar>& params) {
    AdamState s;
    s.m = params;
    s.m.for_each_tensor([](auto& x) { x.setZero(); });
    s.v = s.m;
    return s;
  }
};

namespace detail {

template <typename Scalar>
using FlatView = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>;

template <typename Scalar>
std::vector<FlatView<Scalar>> flat_views(ProbeParams<Scalar>& p) {
  std::vector<FlatView<Scalar>> out;
  p.for_each_tensor([&](auto& t) { out.emplace_back(t.data(), t.size()); });
  return out;
}

template <typename Scalar>
std::vector<Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>> flat_views(
    const ProbeParams<Scalar>& p) {
  std::vector<Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>> out;
  p.for_each_tensor([&](const auto& t) { out.emplace_back(t.data(), t.size()); });
  return out;
}

}  // namespace detail

/// One bias-corrected Adam update. Throws NumericError when a gradient
/// entry is not finite; params and state are left untouched in that case.
template <typename Scalar>
void adam_step(ProbeParams<Scalar>& params, const ProbeParams<Scalar>& grads,
               AdamState<Scalar>& state, double lr, const TrainConfig& cfg) {
  if (!grads.all_finite()) throw NumericError("non-finite gradient");
  auto p = detail::flat_views(params);
  auto g = detail::flat_views(grads);
  auto m = detail::flat_views(state.m);
  auto v = detail::flat_views(state.v);
  if (p.size() != g.size() || p.size() != m.size()) throw InvalidArgument("shape mismatch");

  ++state.t;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].size() != g[i].size()) throw InvalidArgument("shape mismatch");
    m[i] = Scalar(b1) * m[i] + Scalar(1.0 - b1) * g[i];
    v[i] = Scalar(b2) * v[i] + Scalar(1.0 - b2) * g[i].square();
    p[i] -= Scalar(lr) * (m[i] / Scalar(c1)) / ((v[i] / Scalar(c2)).sqrt() + Scalar(cfg.adam_eps));
  }
}

/// Patience-based stopping on strictly improving validation loss.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Records one epoch's loss; returns true when it is a new minimum.
  bool update(double val_loss) {
    if (val_loss < best_) {
      best_ = val_loss;
      bad_epochs_ = 0;
      return true;
    }
    ++bad_epochs_;
    return false;
  }

  bool should_stop() const { return bad_epochs_ >= patience_; }
  double best() const { return best_; }

 private:
  int patience_;
  int bad_epochs_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr_last = 0.0;
  bool improved = false;
};

struct TrainResult {
  ProbeParamsf best_params;
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<double> train_losses;
  std::vector<double> val_losses;
  std::vector<EpochRecord> log;
  bool stopped_early = false;
  bool diverged = false;
};

/// Validation loss of the f32 parameter snapshot taken after `epoch`.
using ValidationFn = std::function<double(const ProbeParamsf& params, int epoch)>;

/// The epoch loop with an arbitrary validation signal. Parameters are kept
/// in double; each epoch's snapshot is rounded to f32 before validation so
/// the returned best_params reproduce best_val_loss exactly.
TrainResult train_with_validator(const ProbeConfig& probe_config, const JoinedDataset& train_data,
                                 const TrainConfig& train_config, const ValidationFn& validate);

/// Standard run: validation loss is the weighted cross-entropy of the full
/// validation set in eval mode, using the training class weights.
TrainResult train(const ProbeConfig& probe_config, const JoinedDataset& train_data,
                  const JoinedDataset& val_data, const TrainConfig& train_config);

/// Weighted mean loss over a whole dataset in eval mode.
double dataset_loss(const ProbeParamsf& params, const JoinedDataset& data,
                    const Eigen::Vector3d& weights);

std::vector<Label> predict_dataset(const ProbeParamsf& params, const JoinedDataset& data);

EvalReport evaluate_probe(const ProbeParamsf& params, const JoinedDataset& data,
                          std::string model_id, std::string input_setup);

/// One JSON object per line: {epoch, train_loss, val_loss, lr_last, improved}.
std::string format_train_log(std::span<const EpochRecord> log);

}  // namespace factprobe
