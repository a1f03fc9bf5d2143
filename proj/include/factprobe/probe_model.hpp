#pragma once

// Feed-forward probing classifier over K pooled embeddings.
//
//   a_i    = dropout(relu(W_i x_i + b_i))      i = 1..K, each of size h
//   u      = [a_1; ...; a_K]                   concatenated in setup order
//   logits = V u + c
//
// K = 1 is the plain two-layer network. Samples are columns: a batch of B
// rows is presented as K matrices of shape input_dims[i] x B.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "factprobe/random.hpp"
#include "factprobe/types.hpp"

namespace factprobe {

struct ProbeConfig {
  std::vector<int> input_dims;
  int hidden_size = 128;
  int n_classes = kNumClasses;
  double dropout = 0.1;
  std::uint64_t seed = 42;

  int num_inputs() const { return static_cast<int>(input_dims.size()); }

  /// Throws InvalidArgument unless K >= 1, h > 0, every dim > 0 and
  /// 0 <= dropout < 1.
  void validate() const;

  friend bool operator==(const ProbeConfig&, const ProbeConfig&) = default;
};

/// Learned tensors. Declaration order (used by checkpoints and by
/// for_each_tensor) is W_1, b_1, ..., W_K, b_K, V, c.
template <typename Scalar>
struct ProbeParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Matrix> proj_weights;
  std::vector<Vector> proj_biases;
  Matrix out_weight;
  Vector out_bias;

  int num_inputs() const { return static_cast<int>(proj_weights.size()); }
  int hidden_size() const { return static_cast<int>(out_weight.cols()) / std::max(1, num_inputs()); }

  /// Zero tensors with the shapes implied by config.
  static ProbeParams zeros(const ProbeConfig& config) {
    ProbeParams p;
    const int h = config.hidden_size;
    for (int d : config.input_dims) {
      p.proj_weights.push_back(Matrix::Zero(h, d));
      p.proj_biases.push_back(Vector::Zero(h));
    }
    p.out_weight = Matrix::Zero(config.n_classes, h * config.num_inputs());
    p.out_bias = Vector::Zero(config.n_classes);
    return p;
  }

  template <typename F>
  void for_each_tensor(F&& f) {
    for (int i = 0; i < num_inputs(); ++i) {
      f(proj_weights[i]);
      f(proj_biases[i]);
    }
    f(out_weight);
    f(out_bias);
  }

  template <typename F>
  void for_each_tensor(F&& f) const {
    for (int i = 0; i < num_inputs(); ++i) {
      f(proj_weights[i]);
      f(proj_biases[i]);
    }
    f(out_weight);
    f(out_bias);
  }

  template <typename Other>
  ProbeParams<Other> cast() const {
    ProbeParams<Other> out;
    for (int i = 0; i < num_inputs(); ++i) {
      out.proj_weights.push_back(proj_weights[i].template cast<Other>());
      out.proj_biases.push_back(proj_biases[i].template cast<Other>());
    }
    out.out_weight = out_weight.template cast<Other>();
    out.out_bias = out_bias.template cast<Other>();
    return out;
  }

  bool all_finite() const {
    bool ok = true;
    for_each_tensor([&](const auto& t) { ok = ok && t.allFinite(); });
    return ok;
  }

  friend bool operator==(const ProbeParams& a, const ProbeParams& b) {
    if (a.num_inputs() != b.num_inputs()) return false;
    auto same = [](const auto& x, const auto& y) {
      return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
    };
    for (int i = 0; i < a.num_inputs(); ++i) {
      if (!same(a.proj_weights[i], b.proj_weights[i]) || !same(a.proj_biases[i], b.proj_biases[i])) {
        return false;
      }
    }
    return same(a.out_weight, b.out_weight) && same(a.out_bias, b.out_bias);
  }
};

using ProbeParamsf = ProbeParams<float>;
using ProbeParamsd = ProbeParams<double>;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases. Entries
/// are drawn row by row from Rng(config.seed) in declaration order.
template <typename Scalar>
ProbeParams<Scalar> init_probe(const ProbeConfig& config) {
  config.validate();
  auto p = ProbeParams<Scalar>::zeros(config);
  Rng rng(config.seed);
  auto fill = [&rng](auto& w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = static_cast<Scalar>(bound * (2.0 * uniform01(rng) - 1.0));
      }
    }
  };
  for (auto& w : p.proj_weights) fill(w);
  fill(p.out_weight);
  return p;
}

/// Number of learned scalars.
std::int64_t count_params(const ProbeConfig& config);

enum class Mode { Train, Eval };

/// Intermediate values of a forward pass. Masks (already scaled by
/// 1/(1-p)) are only recorded in train mode.
template <typename Scalar>
struct ForwardCache {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Mode mode = Mode::Eval;
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre_activations;
  std::vector<Matrix> activations;
  std::vector<Matrix> masks;
  Matrix concat;
  Matrix logits;
};

namespace detail {

template <typename Scalar, typename Derived>
void check_inputs(const ProbeParams<Scalar>& params, std::span<const Derived> inputs) {
  if (static_cast<int>(inputs.size()) != params.num_inputs()) {
    throw InvalidArgument("dimension mismatch: expected " + std::to_string(params.num_inputs()) +
                          " inputs, got " + std::to_string(inputs.size()));
  }
  const auto batch = inputs.empty() ? 0 : inputs.front().cols();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].rows() != params.proj_weights[i].cols()) {
      throw InvalidArgument("dimension mismatch at input " + std::to_string(i) + ": expected " +
                            std::to_string(params.proj_weights[i].cols()) + ", got " +
                            std::to_string(inputs[i].rows()));
    }
    if (inputs[i].cols() != batch) {
      throw InvalidArgument("dimension mismatch at input " + std::to_string(i) +
                            ": batch size differs");
    }
  }
}

}  // namespace detail

/// Batched forward pass; returns logits (n_classes x B). In train mode
/// `rng` drives inverted dropout with rate `dropout` and must be non-null.
/// The cache, when requested, is filled for backward().
template <typename Scalar>
typename ProbeParams<Scalar>::Matrix forward(
    const ProbeParams<Scalar>& params,
    std::span<const typename ProbeParams<Scalar>::Matrix> inputs, Mode mode, double dropout,
    Rng* rng, ForwardCache<Scalar>* cache = nullptr) {
  using Matrix = typename ProbeParams<Scalar>::Matrix;
  detail::check_inputs(params, inputs);
  const bool drop = mode == Mode::Train && dropout > 0.0;
  if (drop && rng == nullptr) throw InvalidArgument("train-mode dropout needs an rng");

  const int k = params.num_inputs();
  const Eigen::Index h = params.proj_weights.empty() ? 0 : params.proj_weights.front().rows();
  const Eigen::Index batch = inputs.front().cols();
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - dropout));

  Matrix concat(h * k, batch);
  if (cache) {
    *cache = ForwardCache<Scalar>{};
    cache->mode = mode;
  }
  for (int i = 0; i < k; ++i) {
    Matrix z = params.proj_weights[i] * inputs[i];
    z.colwise() += params.proj_biases[i];
    Matrix a = z.cwiseMax(Scalar(0));
    if (drop) {
      Matrix mask(h, batch);
      for (Eigen::Index c = 0; c < batch; ++c) {
        for (Eigen::Index r = 0; r < h; ++r) {
          mask(r, c) = uniform01(*rng) < dropout ? Scalar(0) : keep_scale;
        }
      }
      a = a.cwiseProduct(mask);
      if (cache) cache->masks.push_back(std::move(mask));
    } else if (cache && mode == Mode::Train) {
      cache->masks.push_back(Matrix::Constant(h, batch, Scalar(1)));
    }
    concat.middleRows(i * h, h) = a;
    if (cache) {
      cache->inputs.push_back(inputs[i]);
      cache->pre_activations.push_back(std::move(z));
      cache->activations.push_back(std::move(a));
    }
  }
  Matrix logits = params.out_weight * concat;
  logits.colwise() += params.out_bias;
  if (cache) {
    cache->concat = std::move(concat);
    cache->logits = logits;
  }
  return logits;
}

template <typename Scalar>
struct ProbeGradients {
  ProbeParams<Scalar> params;
  std::vector<typename ProbeParams<Scalar>::Matrix> inputs;
};

/// Reverse-mode gradients given dLoss/dlogits (n_classes x B). Requires a
/// train-mode cache; throws InvalidArgument("no gradient path") otherwise.
template <typename Scalar>
ProbeGradients<Scalar> backward(const ProbeParams<Scalar>& params, const ForwardCache<Scalar>& cache,
                                const typename ProbeParams<Scalar>::Matrix& dlogits) {
  using Matrix = typename ProbeParams<Scalar>::Matrix;
  if (cache.mode != Mode::Train) throw InvalidArgument("no gradient path");
  if (dlogits.rows() != cache.logits.rows() || dlogits.cols() != cache.logits.cols()) {
    throw InvalidArgument("upstream gradient shape mismatch");
  }
  const int k = params.num_inputs();
  const Eigen::Index h = params.proj_weights.front().rows();

  ProbeGradients<Scalar> g;
  g.params.out_weight = dlogits * cache.concat.transpose();
  g.params.out_bias = dlogits.rowwise().sum();
  const Matrix dconcat = params.out_weight.transpose() * dlogits;
  for (int i = 0; i < k; ++i) {
    Matrix dz = dconcat.middleRows(i * h, h).cwiseProduct(cache.masks[i]);
    dz = (cache.pre_activations[i].array() > Scalar(0)).select(dz, Scalar(0));
    g.params.proj_weights.push_back(dz * cache.inputs[i].transpose());
    g.params.proj_biases.push_back(dz.rowwise().sum());
    g.inputs.push_back(params.proj_weights[i].transpose() * dz);
  }
  return g;
}

/// Index of the largest entry; the lowest index wins ties.
template <typename Derived>
int argmax(const Eigen::DenseBase<Derived>& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = static_cast<int>(i);
  }
  return best;
}

template <typename Scalar>
std::vector<Label> predict(const ProbeParams<Scalar>& params,
                           std::span<const typename ProbeParams<Scalar>::Matrix> inputs) {
  const auto logits = forward(params, inputs, Mode::Eval, 0.0, nullptr);
  std::vector<Label> out;
  out.reserve(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index c = 0; c < logits.cols(); ++c) out.push_back(label_from_index(argmax(logits.col(c))));
  return out;
}

/// Single-row forward/predict. Each element of `row` is one setup vector.
template <typename Scalar>
typename ProbeParams<Scalar>::Vector forward_row(
    const ProbeParams<Scalar>& params, std::span<const typename ProbeParams<Scalar>::Vector> row) {
  std::vector<typename ProbeParams<Scalar>::Matrix> cols(row.begin(), row.end());
  return forward(params, std::span<const typename ProbeParams<Scalar>::Matrix>(cols), Mode::Eval,
                 0.0, nullptr);
}

template <typename Scalar>
Label predict_row(const ProbeParams<Scalar>& params,
                  std::span<const typename ProbeParams<Scalar>::Vector> row) {
  return label_from_index(argmax(forward_row(params, row)));
}

// Checkpoints: "PFCKPT01", u32 header length, JSON header
// {config, epoch, input_setups, seed, val_loss}, then every tensor in
// declaration order, row-major, f32 little-endian.

inline constexpr std::string_view kCheckpointMagic = "PFCKPT01";

struct Checkpoint {
  ProbeConfig config;
  ProbeParamsf params;
  int epoch = 0;
  double val_loss = 0.0;
  std::vector<InputSetup> setups;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void write_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace factprobe
