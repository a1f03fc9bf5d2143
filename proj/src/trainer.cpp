#include "factprobe/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace factprobe {

namespace {

using Matrix = Eigen::MatrixXd;

// Columns `indices` of every setup, widened to double.
std::vector<Matrix> gather(const JoinedDataset& data, std::span<const std::size_t> indices) {
  std::vector<Matrix> out;
  out.reserve(data.num_setups());
  for (const auto& f : data.features) {
    Matrix m(f.rows(), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t c = 0; c < indices.size(); ++c) {
      m.col(static_cast<Eigen::Index>(c)) = f.col(static_cast<Eigen::Index>(indices[c])).cast<double>();
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Matrix> gather_range(const JoinedDataset& data, std::size_t begin, std::size_t end) {
  std::vector<Matrix> out;
  out.reserve(data.num_setups());
  const auto b = static_cast<Eigen::Index>(begin);
  const auto n = static_cast<Eigen::Index>(end - begin);
  for (const auto& f : data.features) out.push_back(f.middleCols(b, n).cast<double>());
  return out;
}

constexpr std::size_t kEvalChunk = 1024;

void check_dims(const ProbeConfig& config, const JoinedDataset& data, const char* what) {
  if (config.input_dims != data.dims) {
    throw InvalidArgument(std::string(what) + " dims do not match probe config");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size <= 0) throw InvalidArgument("batch_size must be positive");
  if (!(peak_lr > 0.0) || !std::isfinite(peak_lr)) throw InvalidArgument("peak_lr must be positive");
  if (max_epochs <= 0) throw InvalidArgument("max_epochs must be positive");
  if (patience <= 0) throw InvalidArgument("patience must be positive");
  if (!(warmup_ratio >= 0.0 && warmup_ratio <= 1.0)) throw InvalidArgument("warmup_ratio must be in [0, 1]");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw InvalidArgument("Adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw InvalidArgument("adam_eps must be positive");
}

Eigen::Vector3d class_weights(std::span<const std::size_t> counts) {
  if (counts.size() != kNumClasses) throw InvalidArgument("expected three class counts");
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  Eigen::Vector3d w;
  for (int c = 0; c < kNumClasses; ++c) {
    if (counts[c] == 0) {
      throw InvalidArgument("class " + std::string(to_string(label_from_index(c))) +
                            " has no training instances");
    }
    w[c] = total / (kNumClasses * static_cast<double>(counts[c]));
  }
  return w;
}

std::int64_t warmup_steps(std::int64_t total_steps, double warmup_ratio) {
  return static_cast<std::int64_t>(std::ceil(warmup_ratio * static_cast<double>(total_steps)));
}

double cosine_lr(std::int64_t step, std::int64_t total_steps, double warmup_ratio, double peak_lr) {
  if (total_steps < 1) throw InvalidArgument("total_steps must be >= 1");
  if (step < 0 || step > total_steps) throw InvalidArgument("step out of range");
  if (step == total_steps) return 0.0;
  const std::int64_t warm = warmup_steps(total_steps, warmup_ratio);
  if (step < warm) return peak_lr * static_cast<double>(step) / static_cast<double>(warm);
  const double progress =
      static_cast<double>(step - warm) / static_cast<double>(total_steps - warm);
  return peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double dataset_loss(const ProbeParamsf& params, const JoinedDataset& data,
                    const Eigen::Vector3d& weights) {
  const auto p = params.cast<double>();
  double loss_sum = 0.0;
  double weight_sum = 0.0;
  for (std::size_t begin = 0; begin < data.size(); begin += kEvalChunk) {
    const std::size_t end = std::min(data.size(), begin + kEvalChunk);
    const auto inputs = gather_range(data, begin, end);
    const Matrix logits = forward(p, std::span<const Matrix>(inputs), Mode::Eval, 0.0, nullptr);
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      const Label y = data.labels[begin + static_cast<std::size_t>(c)];
      loss_sum += weighted_cross_entropy(logits.col(c), y, weights).first;
      weight_sum += weights[label_index(y)];
    }
  }
  return weight_sum > 0.0 ? loss_sum / weight_sum : 0.0;
}

std::vector<Label> predict_dataset(const ProbeParamsf& params, const JoinedDataset& data) {
  const auto p = params.cast<double>();
  std::vector<Label> out;
  out.reserve(data.size());
  for (std::size_t begin = 0; begin < data.size(); begin += kEvalChunk) {
    const std::size_t end = std::min(data.size(), begin + kEvalChunk);
    const auto inputs = gather_range(data, begin, end);
    const auto preds = predict(p, std::span<const Matrix>(inputs));
    out.insert(out.end(), preds.begin(), preds.end());
  }
  return out;
}

EvalReport evaluate_probe(const ProbeParamsf& params, const JoinedDataset& data,
                          std::string model_id, std::string input_setup) {
  const auto preds = predict_dataset(params, data);
  return evaluate(std::move(model_id), std::move(input_setup), std::string(to_string(data.dataset)),
                  preds, data.labels);
}

TrainResult train_with_validator(const ProbeConfig& probe_config, const JoinedDataset& train_data,
                                 const TrainConfig& train_config, const ValidationFn& validate) {
  probe_config.validate();
  train_config.validate();
  check_dims(probe_config, train_data, "training data");
  if (train_data.size() == 0) throw InvalidArgument("empty training set");

  const Eigen::Vector3d weights = train_config.weighted_loss
                                      ? class_weights(train_data.class_counts())
                                      : Eigen::Vector3d::Ones().eval();
  const std::size_t n = train_data.size();
  const auto batch = static_cast<std::size_t>(train_config.batch_size);
  const std::size_t batches_per_epoch = (n + batch - 1) / batch;
  const auto total_steps = static_cast<std::int64_t>(train_config.max_epochs) *
                           static_cast<std::int64_t>(batches_per_epoch);

  auto params = init_probe<double>(probe_config);
  auto adam = AdamState<double>::like(params);
  Rng shuffle_rng(derive_seed(train_config.seed, 1));
  Rng dropout_rng(derive_seed(train_config.seed, 2));
  EarlyStopping stopper(train_config.patience);

  TrainResult result;
  result.best_params = params.cast<float>();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::int64_t step = 0;

  for (int epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    shuffle(std::span(order), shuffle_rng);
    double loss_sum = 0.0;
    double weight_sum = 0.0;
    double lr = 0.0;
    for (std::size_t begin = 0; begin < n; begin += batch) {
      const std::size_t end = std::min(n, begin + batch);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const auto inputs = gather(train_data, idx);
      std::vector<Label> labels;
      labels.reserve(idx.size());
      double batch_weight = 0.0;
      for (auto i : idx) {
        labels.push_back(train_data.labels[i]);
        batch_weight += weights[label_index(train_data.labels[i])];
      }

      ForwardCache<double> cache;
      const Matrix logits = forward(params, std::span<const Matrix>(inputs), Mode::Train,
                                    probe_config.dropout, &dropout_rng, &cache);
      const auto lg = batch_weighted_cross_entropy<double>(logits, labels, weights);
      if (!std::isfinite(lg.loss)) {
        result.diverged = true;
        break;
      }
      const auto grads = backward(params, cache, lg.dlogits);
      lr = cosine_lr(step, total_steps, train_config.warmup_ratio, train_config.peak_lr);
      try {
        adam_step(params, grads.params, adam, lr, train_config);
      } catch (const NumericError&) {
        result.diverged = true;
        break;
      }
      ++step;
      loss_sum += lg.loss * batch_weight;
      weight_sum += batch_weight;
    }
    if (result.diverged || !params.all_finite()) {
      result.diverged = true;
      break;
    }

    const ProbeParamsf snapshot = params.cast<float>();
    const double val_loss = validate(snapshot, epoch);
    if (!std::isfinite(val_loss)) {
      result.diverged = true;
      break;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / weight_sum;
    rec.val_loss = val_loss;
    rec.lr_last = lr;
    rec.improved = stopper.update(val_loss);
    if (rec.improved) {
      result.best_params = snapshot;
      result.best_epoch = epoch;
      result.best_val_loss = val_loss;
    }
    result.train_losses.push_back(rec.train_loss);
    result.val_losses.push_back(val_loss);
    result.log.push_back(rec);
    if (stopper.should_stop() && epoch < train_config.max_epochs) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

TrainResult train(const ProbeConfig& probe_config, const JoinedDataset& train_data,
                  const JoinedDataset& val_data, const TrainConfig& train_config) {
  check_dims(probe_config, val_data, "validation data");
  if (val_data.size() == 0) throw InvalidArgument("empty validation set");
  const Eigen::Vector3d weights = train_config.weighted_loss
                                      ? class_weights(train_data.class_counts())
                                      : Eigen::Vector3d::Ones().eval();
  return train_with_validator(probe_config, train_data, train_config,
                              [&](const ProbeParamsf& params, int) {
                                return dataset_loss(params, val_data, weights);
                              });
}

std::string format_train_log(std::span<const EpochRecord> log) {
  std::ostringstream out;
  for (const auto& r : log) {
    out << nlohmann::json{{"epoch", r.epoch},
                          {"train_loss", r.train_loss},
                          {"val_loss", r.val_loss},
                          {"lr_last", r.lr_last},
                          {"improved", r.improved}}
               .dump()
        << '\n';
  }
  return out.str();
}

}  // namespace factprobe
