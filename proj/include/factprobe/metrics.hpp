#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "factprobe/types.hpp"

namespace factprobe {

/// Counts indexed [true][predicted].
using ConfusionMatrix = Eigen::Matrix<std::int64_t, kNumClasses, kNumClasses>;
using ClassScores = std::array<double, kNumClasses>;

ConfusionMatrix confusion(std::span<const Label> preds, std::span<const Label> labels);

/// F1_c = 2TP / (2TP + FP + FN); 0 when the denominator is 0.
ClassScores f1_per_class(const ConfusionMatrix& cm);

/// Unweighted mean over all three classes, present or not.
double f1_macro(const ClassScores& per_class);

struct EvalReport {
  std::string model_id;
  std::string input_setup;
  std::string dataset;
  ClassScores f1{};
  double f1_macro = 0.0;
  std::int64_t instances = 0;
  std::int64_t skipped = 0;
  ConfusionMatrix confusion = ConfusionMatrix::Zero();
};

EvalReport evaluate(std::string model_id, std::string input_setup, std::string dataset,
                    std::span<const Label> preds, std::span<const Label> labels,
                    std::int64_t skipped = 0);

/// Decimal rendering with `places` digits, ties to even on the shortest
/// round-trip decimal form of `value` (0.5245 -> "0.524", 0.7775 -> "0.778").
std::string format_fixed_half_even(double value, int places = 3);

enum class ReportFormat { Text, Records };

/// Table of results in the given order. Text renders an aligned table with
/// three decimals; Records renders one JSON object per line.
std::string report(std::span<const EvalReport> results, ReportFormat format);

std::string to_record(const EvalReport& r);
EvalReport from_record(std::string_view line);

}  // namespace factprobe
