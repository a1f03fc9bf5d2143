#include <gtest/gtest.h>

#include "factprobe/baselines.hpp"
#include "test_support.hpp"

using namespace factprobe;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd columns(std::initializer_list<std::initializer_list<double>> pts) {
  const auto dim = static_cast<Eigen::Index>(pts.begin()->size());
  MatrixXd m(dim, static_cast<Eigen::Index>(pts.size()));
  Eigen::Index c = 0;
  for (const auto& p : pts) {
    Eigen::Index r = 0;
    for (double v : p) m(r++, c) = v;
    ++c;
  }
  return m;
}

// Two-class 2-d toy set and a separating line found by exhaustive search
// over directions and offsets. Returns the line's labels for every point,
// or nothing when no grid line separates the set.
std::optional<std::vector<Label>> margin_search(const MatrixXd& pts, const std::vector<Label>& labels) {
  for (int a = 0; a < 360; ++a) {
    const double th = a * std::numbers::pi / 180.0;
    const Eigen::Vector2d n(std::cos(th), std::sin(th));
    for (double off = -10; off <= 10; off += 0.05) {
      std::vector<Label> out;
      for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        out.push_back(n.dot(pts.col(i)) - off > 0.1 ? Label::Refuted
                      : n.dot(pts.col(i)) - off < -0.1 ? Label::Supported
                                                        : Label::NotEnoughInfo);
      }
      if (out == labels) return out;
    }
  }
  return std::nullopt;
}

}  // namespace

TEST(Knn, ExactMatchWithKOne) {
  const MatrixXd rows = columns({{0, 0}, {3, 1}, {-2, 4}});
  const auto model = knn_fit(rows, {Label::Supported, Label::NotEnoughInfo, Label::Refuted}, 1);
  EXPECT_EQ(knn_predict(model, rows.col(1)), Label::NotEnoughInfo);
  EXPECT_EQ(knn_predict(model, rows.col(2)), Label::Refuted);
}

TEST(Knn, SmallExample) {
  const MatrixXd rows = columns({{0, 0}, {0, 1}, {5, 5}});
  const std::vector labels{Label::Supported, Label::Supported, Label::Refuted};
  const auto model = knn_fit(rows, labels, 3);
  EXPECT_EQ(knn_predict(model, Eigen::Vector2d(0, 0.4)), Label::Supported);
  EXPECT_EQ(knn_predict(model, Eigen::Vector2d(0, 0.4)),
            factprobe::testing::knn_oracle(rows, labels, Eigen::Vector2d(0, 0.4), 3));
}

TEST(Knn, FullKGivesMajority) {
  Rng rng(1);
  const MatrixXd rows = factprobe::testing::random_matrix(3, 11, rng);
  std::vector<Label> labels(11, Label::Refuted);
  labels[0] = labels[4] = Label::Supported;
  labels[7] = Label::NotEnoughInfo;
  const auto model = knn_fit(rows, labels, 11);
  for (int q = 0; q < 10; ++q) {
    EXPECT_EQ(knn_predict(model, factprobe::testing::random_matrix(3, 1, rng, 10.0)), Label::Refuted);
  }
}

TEST(Knn, VoteTieGoesToSmallerSummedDistance) {
  const MatrixXd rows = columns({{1}, {-3}, {2}, {-4}});
  const std::vector labels{Label::Supported, Label::Refuted, Label::Supported, Label::Refuted};
  const auto model = knn_fit(rows, labels, 4);
  EXPECT_EQ(knn_predict(model, VectorXd::Constant(1, 0.0)), Label::Supported);
  EXPECT_EQ(knn_predict(model, VectorXd::Constant(1, -1.5)), Label::Refuted);
}

TEST(Knn, DistanceTieGoesToLowerIndex) {
  // Rows 0 and 1 are equidistant from the query; k = 1 must pick row 0.
  const MatrixXd rows = columns({{1}, {-1}});
  const auto model = knn_fit(rows, {Label::NotEnoughInfo, Label::Supported}, 1);
  EXPECT_EQ(knn_predict(model, VectorXd::Zero(1)), Label::NotEnoughInfo);
  const auto swapped = knn_fit(rows, {Label::Supported, Label::NotEnoughInfo}, 1);
  EXPECT_EQ(knn_predict(swapped, VectorXd::Zero(1)), Label::Supported);
}

TEST(Knn, MatchesSortOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto n = 50 + 100 * trial;
    const MatrixXd rows = factprobe::testing::random_matrix(6, n, rng);
    const auto labels = factprobe::testing::random_labels(static_cast<std::size_t>(n), rng);
    const auto model = knn_fit(rows, labels, 7);
    for (int q = 0; q < 40; ++q) {
      const VectorXd query = factprobe::testing::random_matrix(6, 1, rng);
      EXPECT_EQ(knn_predict(model, query), factprobe::testing::knn_oracle(rows, labels, query, 7));
    }
  }
}

TEST(Knn, ScaleInvariant) {
  Rng rng(22);
  const MatrixXd rows = factprobe::testing::random_matrix(4, 80, rng);
  const auto labels = factprobe::testing::random_labels(80, rng);
  const auto a = knn_fit(rows, labels, 7);
  const auto b = knn_fit(rows * 8.0, labels, 7);
  const auto c = knn_fit(rows, labels, 7, KnnMetric::Cosine);
  const auto d = knn_fit(rows * 0.25, labels, 7, KnnMetric::Cosine);
  for (int q = 0; q < 50; ++q) {
    const VectorXd query = factprobe::testing::random_matrix(4, 1, rng);
    EXPECT_EQ(knn_predict(a, query), knn_predict(b, query * 8.0));
    EXPECT_EQ(knn_predict(c, query), knn_predict(d, query * 0.25));
  }
}

TEST(Knn, CosineDistance) {
  EXPECT_NEAR(knn_distance(KnnMetric::Cosine, Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 3)), 1.0, 1e-15);
  EXPECT_NEAR(knn_distance(KnnMetric::Cosine, Eigen::Vector2d(1, 1), Eigen::Vector2d(2, 2)), 0.0, 1e-15);
  EXPECT_NEAR(knn_distance(KnnMetric::Cosine, Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 2)), 1.0, 1e-15);
  EXPECT_NEAR(knn_distance(KnnMetric::Euclidean, Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 4)), 5.0, 1e-15);
}

TEST(Knn, Errors) {
  const MatrixXd rows = columns({{0, 0}, {1, 1}});
  EXPECT_THROW(knn_fit(rows, {Label::Supported, Label::Refuted}, 3), InvalidArgument);
  EXPECT_THROW(knn_fit(rows, {Label::Supported, Label::Refuted}, 0), InvalidArgument);
  EXPECT_THROW(knn_fit(rows, {Label::Supported}, 1), InvalidArgument);
  const auto model = knn_fit(rows, {Label::Supported, Label::Refuted}, 1);
  EXPECT_THROW(knn_predict(model, Eigen::Vector3d::Zero()), InvalidArgument);
}

TEST(Svm, SeparableToySet) {
  const MatrixXd pts = columns({{0, 0}, {1, 0}, {0, 1}, {0.5, 0.5}, {3, 3}, {4, 3}, {3, 4}, {4, 4.5}});
  const std::vector labels{Label::Supported, Label::Supported, Label::Supported, Label::Supported,
                           Label::Refuted,   Label::Refuted,   Label::Refuted,   Label::Refuted};
  const auto oracle = margin_search(pts, labels);
  ASSERT_TRUE(oracle.has_value());
  const auto model = svm_train(pts, labels, {1e-2, 200, 3});
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    EXPECT_EQ(svm_predict(model, pts.col(i)), (*oracle)[static_cast<std::size_t>(i)]);
  }
}

TEST(Svm, SingleClass) {
  Rng rng(4);
  const MatrixXd rows = factprobe::testing::random_matrix(3, 20, rng);
  const std::vector<Label> labels(20, Label::NotEnoughInfo);
  const auto model = svm_train(rows, labels, {});
  for (int q = 0; q < 20; ++q) {
    EXPECT_EQ(svm_predict(model, factprobe::testing::random_matrix(3, 1, rng)), Label::NotEnoughInfo);
  }
}

TEST(Svm, PredictTieBreakAndOneHot) {
  LinearSvmModel m;
  m.weights = MatrixXd::Zero(3, 2);
  m.biases = VectorXd::Zero(3);
  EXPECT_EQ(svm_predict(m, Eigen::Vector2d(1, 2)), Label::Supported);
  m.weights(2, 0) = 1.0;
  EXPECT_EQ(svm_predict(m, Eigen::Vector2d(1, 2)), Label::NotEnoughInfo);
  EXPECT_THROW(svm_predict(m, Eigen::Vector3d(1, 2, 3)), InvalidArgument);
}

TEST(Svm, Deterministic) {
  Rng rng(5);
  const MatrixXd rows = factprobe::testing::random_matrix(4, 60, rng);
  const auto labels = factprobe::testing::random_labels(60, rng);
  const auto a = svm_train(rows, labels, {1e-3, 20, 9});
  const auto b = svm_train(rows, labels, {1e-3, 20, 9});
  const auto c = svm_train(rows, labels, {1e-3, 20, 10});
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.biases, b.biases);
  EXPECT_NE(a.weights, c.weights);
}

TEST(Svm, ObjectiveDecreasesOverEpochs) {
  // Averaged over seeds, the objective of the averaged iterate falls from the
  // early epochs to the late ones.
  const auto data = factprobe::testing::make_clusters({5}, 150, 2.0, 6);
  const MatrixXd rows = data.stacked().cast<double>();
  std::vector<double> mean(40, 0.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto model = svm_train(rows, data.labels, {1e-2, 40, seed});
    ASSERT_EQ(model.objective_trace.size(), 40u);
    for (std::size_t e = 0; e < 40; ++e) mean[e] += model.objective_trace[e] / 5.0;
  }
  EXPECT_LT(mean[39], mean[0]);
  EXPECT_LE(mean[39], mean[9] * (1 + 1e-3));
  for (std::size_t e = 10; e < 40; ++e) EXPECT_LE(mean[e], mean[e - 10] * (1 + 1e-2));
}

TEST(Svm, ObjectiveFormula) {
  const MatrixXd rows = columns({{1, 0}, {0, 2}});
  const std::vector<double> targets{1.0, -1.0};
  // w = (1, 1), b = 0.5: margins 1.5 and -2.5 -> hinge 0 and 3.5.
  EXPECT_DOUBLE_EQ(svm_objective(Eigen::Vector2d(1, 1), 0.5, rows, targets, 0.1),
                   0.05 * (2 + 0.25) + 3.5 / 2);
}

TEST(Svm, ClustersAccuracy) {
  const auto data = factprobe::testing::make_clusters({6}, 300, 3.0, 7);
  const MatrixXd rows = data.stacked().cast<double>();
  const auto model = svm_train(rows, data.labels, {});
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    correct += svm_predict(model, rows.col(static_cast<Eigen::Index>(i))) == data.labels[i];
  }
  EXPECT_GE(correct, data.size() * 95 / 100);
}
