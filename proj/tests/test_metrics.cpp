#include <gtest/gtest.h>

#include "factprobe/metrics.hpp"
#include "test_support.hpp"

using namespace factprobe;

namespace {

std::vector<Label> L(std::initializer_list<int> v) {
  std::vector<Label> out;
  for (int x : v) out.push_back(label_from_index(x));
  return out;
}

}  // namespace

TEST(Confusion, Examples) {
  EXPECT_EQ(confusion(L({0, 1, 2}), L({0, 1, 2})), ConfusionMatrix::Identity());
  EXPECT_EQ(confusion(L({}), L({})), ConfusionMatrix::Zero());
  ConfusionMatrix expected = ConfusionMatrix::Zero();
  expected(0, 0) = 1;
  expected(0, 1) = 1;
  expected(1, 1) = 1;
  expected(2, 2) = 1;
  EXPECT_EQ(confusion(L({0, 1, 1, 2}), L({0, 0, 1, 2})), expected);
  EXPECT_THROW(confusion(L({0}), L({0, 1})), InvalidArgument);
}

TEST(F1, Examples) {
  EXPECT_EQ(f1_per_class(ConfusionMatrix::Identity()), (ClassScores{1, 1, 1}));
  const auto f1 = f1_per_class(confusion(L({0, 1, 1, 2}), L({0, 0, 1, 2})));
  EXPECT_DOUBLE_EQ(f1[0], 2.0 / 3);
  EXPECT_DOUBLE_EQ(f1[1], 2.0 / 3);
  EXPECT_DOUBLE_EQ(f1[2], 1.0);
  EXPECT_NEAR(f1_macro(f1), 7.0 / 9, 1e-15);
  EXPECT_EQ(f1_per_class(confusion(L({0, 1}), L({0, 1})))[2], 0.0);
  EXPECT_EQ(f1_macro({1, 1, 1}), 1.0);
  EXPECT_EQ(f1_macro({0, 0, 0}), 0.0);
}

TEST(F1, MatchesPrecisionRecallOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(uniform_below(rng, trial < 190 ? 50 : 10000));
    const auto preds = factprobe::testing::random_labels(n, rng);
    const auto labels = factprobe::testing::random_labels(n, rng);
    const auto got = f1_per_class(confusion(preds, labels));
    const auto want = factprobe::testing::f1_oracle(preds, labels);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(got[static_cast<std::size_t>(c)], want[static_cast<std::size_t>(c)], 1e-12);
  }
}

TEST(F1, PermutationInvariant) {
  Rng rng(32);
  auto preds = factprobe::testing::random_labels(300, rng);
  auto labels = factprobe::testing::random_labels(300, rng);
  const double before = f1_macro(f1_per_class(confusion(preds, labels)));
  std::vector<std::size_t> perm(300);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(std::span(perm), rng);
  std::vector<Label> p2, l2;
  for (auto i : perm) {
    p2.push_back(preds[i]);
    l2.push_back(labels[i]);
  }
  EXPECT_EQ(f1_macro(f1_per_class(confusion(p2, l2))), before);
}

TEST(Format, HalfEven) {
  EXPECT_EQ(format_fixed_half_even(7.0 / 9), "0.778");
  EXPECT_EQ(format_fixed_half_even(0.5245), "0.524");
  EXPECT_EQ(format_fixed_half_even(0.5255), "0.526");
  EXPECT_EQ(format_fixed_half_even(0.7775), "0.778");
  EXPECT_EQ(format_fixed_half_even(1.0), "1.000");
  EXPECT_EQ(format_fixed_half_even(0.0), "0.000");
  EXPECT_EQ(format_fixed_half_even(0.9995), "1.000");
  EXPECT_EQ(format_fixed_half_even(2.0 / 3), "0.667");
  EXPECT_EQ(format_fixed_half_even(0.12, 1), "0.1");
}

TEST(Report, TextRowsInOrder) {
  const auto a = evaluate("Qwen-VL", "mm_claim", "mocheg", L({0, 1, 1, 2}), L({0, 0, 1, 2}));
  const auto b = evaluate("Idefics2", "input1", "mocheg", L({0, 1, 2}), L({0, 1, 2}), 4);
  EXPECT_NEAR(a.f1_macro, 7.0 / 9, 1e-15);
  EXPECT_EQ(a.instances, 4);
  EXPECT_EQ(b.skipped, 4);
  const std::vector rows{a, b};
  const auto text = report(rows, ReportFormat::Text);
  const auto qwen = text.find("Qwen-VL");
  const auto idefics = text.find("Idefics2");
  ASSERT_NE(qwen, std::string::npos);
  ASSERT_NE(idefics, std::string::npos);
  EXPECT_LT(qwen, idefics);
  EXPECT_NE(text.find("0.778"), std::string::npos);
  EXPECT_NE(text.find("F1-macro"), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(Report, RecordsRoundTrip) {
  const auto a = evaluate("Qwen-VL", "mm_claim", "factify2", L({0, 1, 1, 2, 2}), L({0, 0, 1, 2, 1}), 2);
  const std::vector rows{a};
  const auto records = report(rows, ReportFormat::Records);
  EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 1);
  const auto back = from_record(records.substr(0, records.size() - 1));
  EXPECT_EQ(back.model_id, a.model_id);
  EXPECT_EQ(back.f1, a.f1);
  EXPECT_EQ(back.f1_macro, a.f1_macro);
  EXPECT_EQ(back.confusion, a.confusion);
  EXPECT_EQ(back.skipped, 2);
  EXPECT_EQ(to_record(back), to_record(a));
}
