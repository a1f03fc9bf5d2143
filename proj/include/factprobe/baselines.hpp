#pragma once

// Non-neural baselines over the same (concatenated) embeddings: k-nearest
// neighbours and a one-vs-rest linear SVM.

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "factprobe/types.hpp"

namespace factprobe {

enum class KnnMetric { Euclidean, Cosine };

struct KnnModel {
  Eigen::MatrixXd rows;  // dim x n, one training row per column
  std::vector<Label> labels;
  int k = 7;
  KnnMetric metric = KnnMetric::Euclidean;
};

/// Stores the training rows. Throws InvalidArgument when k is not in
/// [1, number of rows].
KnnModel knn_fit(const Eigen::MatrixXd& rows, std::vector<Label> labels, int k = 7,
                 KnnMetric metric = KnnMetric::Euclidean);

/// Distance between two vectors under the model's metric. Cosine distance
/// is 1 - cos; a zero vector is at distance 1 from everything.
double knn_distance(KnnMetric metric, const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b);

/// Majority vote among the k nearest rows. Distance ties go to the lower
/// row index; vote ties to the smaller summed distance, then the lower class.
Label knn_predict(const KnnModel& model, const Eigen::Ref<const Eigen::VectorXd>& query);

struct SvmOptions {
  double lambda = 1e-3;
  int epochs = 100;
  std::uint64_t seed = 42;
};

struct LinearSvmModel {
  Eigen::MatrixXd weights;  // n_classes x dim, one row per one-vs-rest classifier
  Eigen::VectorXd biases;   // n_classes
  SvmOptions options;
  // Objective of each classifier's averaged iterate, summed over classes,
  // recorded after every epoch.
  std::vector<double> objective_trace;
};

/// One-vs-rest hinge-loss classifiers trained by seeded stochastic
/// subgradient descent (Pegasos step size 1/(lambda t)) on
/// lambda/2 ||w||^2 + mean hinge, returning averaged iterates. The bias is
/// an augmented constant feature.
LinearSvmModel svm_train(const Eigen::MatrixXd& rows, std::span<const Label> labels,
                         const SvmOptions& options = {});

/// lambda/2 (||w||^2 + b^2) + mean hinge for one binary classifier with
/// targets +1 / -1.
double svm_objective(const Eigen::VectorXd& w, double b, const Eigen::MatrixXd& rows,
                     std::span<const double> targets, double lambda);

Label svm_predict(const LinearSvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& query);

}  // namespace factprobe
