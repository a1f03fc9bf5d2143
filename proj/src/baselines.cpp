#include "factprobe/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <queue>

#include "factprobe/random.hpp"

namespace factprobe {

KnnModel knn_fit(const Eigen::MatrixXd& rows, std::vector<Label> labels, int k, KnnMetric metric) {
  if (static_cast<Eigen::Index>(labels.size()) != rows.cols()) {
    throw InvalidArgument("length mismatch");
  }
  if (k < 1 || k > rows.cols()) throw InvalidArgument("k must be in [1, number of rows]");
  return KnnModel{rows, std::move(labels), k, metric};
}

double knn_distance(KnnMetric metric, const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (metric == KnnMetric::Euclidean) return (a - b).norm();
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - a.dot(b) / (na * nb);
}

Label knn_predict(const KnnModel& model, const Eigen::Ref<const Eigen::VectorXd>& query) {
  if (query.size() != model.rows.rows()) throw InvalidArgument("dimension mismatch");
  using Entry = std::pair<double, Eigen::Index>;  // (distance, row); max-heap keeps the worst on top
  std::priority_queue<Entry> nearest;
  for (Eigen::Index i = 0; i < model.rows.cols(); ++i) {
    const Entry e{knn_distance(model.metric, model.rows.col(i), query), i};
    if (static_cast<int>(nearest.size()) < model.k) {
      nearest.push(e);
    } else if (e < nearest.top()) {
      nearest.pop();
      nearest.push(e);
    }
  }
  std::array<int, kNumClasses> votes{};
  std::array<double, kNumClasses> dist_sum{};
  while (!nearest.empty()) {
    const auto [d, i] = nearest.top();
    nearest.pop();
    const int c = label_index(model.labels[static_cast<std::size_t>(i)]);
    ++votes[c];
    dist_sum[c] += d;
  }
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && dist_sum[c] < dist_sum[best])) {
      best = c;
    }
  }
  return label_from_index(best);
}

double svm_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& rows,
                     std::span<const double> targets, double lambda) {
  const Eigen::VectorXd margins = ((w.transpose() * rows).array() + b).transpose();
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    hinge += std::max(0.0, 1.0 - targets[static_cast<std::size_t>(i)] * margins[i]);
  }
  const double n = std::max<double>(1.0, static_cast<double>(margins.size()));
  return 0.5 * lambda * (w.squaredNorm() + b * b) + hinge / n;
}

LinearSvmModel svm_train(const Eigen::MatrixXd& rows, std::span<const Label> labels,
                         const SvmOptions& options) {
  if (static_cast<Eigen::Index>(labels.size()) != rows.cols()) {
    throw InvalidArgument("length mismatch");
  }
  if (rows.cols() == 0) throw InvalidArgument("empty training set");
  if (!(options.lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (options.epochs < 1) throw InvalidArgument("epochs must be >= 1");

  const Eigen::Index dim = rows.rows();
  const auto n = static_cast<std::size_t>(rows.cols());
  const double lambda = options.lambda;
  const double radius = 1.0 / std::sqrt(lambda);

  // Row c of `w` is classifier c over [x; 1]; `avg` holds the running means.
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(kNumClasses, dim + 1);
  Eigen::MatrixXd avg = w;
  std::vector<std::array<double, kNumClasses>> targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < kNumClasses; ++c) targets[i][c] = label_index(labels[i]) == c ? 1.0 : -1.0;
  }
  std::array<std::vector<double>, kNumClasses> target_cols;
  for (int c = 0; c < kNumClasses; ++c) {
    for (std::size_t i = 0; i < n; ++i) target_cols[c].push_back(targets[i][c]);
  }

  LinearSvmModel model;
  model.options = options;
  Rng rng(options.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::VectorXd x(dim + 1);
  double t = 0.0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle(std::span(order), rng);
    for (auto i : order) {
      t += 1.0;
      const double eta = 1.0 / (lambda * t);
      x.head(dim) = rows.col(static_cast<Eigen::Index>(i));
      x[dim] = 1.0;
      for (int c = 0; c < kNumClasses; ++c) {
        const double y = targets[i][c];
        const bool violated = y * w.row(c).dot(x) < 1.0;
        w.row(c) *= 1.0 - eta * lambda;
        if (violated) w.row(c) += eta * y * x.transpose();
        const double norm = w.row(c).norm();
        if (norm > radius) w.row(c) *= radius / norm;
        avg.row(c) += (w.row(c) - avg.row(c)) / t;
      }
    }
    double objective = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
      objective += svm_objective(avg.row(c).head(dim).transpose(), avg(c, dim), rows,
                                 target_cols[c], lambda);
    }
    model.objective_trace.push_back(objective);
  }
  model.weights = avg.leftCols(dim);
  model.biases = avg.col(dim);
  return model;
}

Label svm_predict(const LinearSvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& query) {
  if (query.size() != model.weights.cols()) throw InvalidArgument("dimension mismatch");
  const Eigen::VectorXd scores = model.weights * query + model.biases;
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return label_from_index(best);
}

}  // namespace factprobe
