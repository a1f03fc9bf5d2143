#include "factprobe/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "json.hpp"

namespace factprobe {

using nlohmann::json;

ConfusionMatrix confusion(std::span<const Label> preds, std::span<const Label> labels) {
  if (preds.size() != labels.size()) throw InvalidArgument("length mismatch");
  ConfusionMatrix cm = ConfusionMatrix::Zero();
  for (std::size_t i = 0; i < preds.size(); ++i) ++cm(label_index(labels[i]), label_index(preds[i]));
  return cm;
}

ClassScores f1_per_class(const ConfusionMatrix& cm) {
  ClassScores out{};
  for (int c = 0; c < kNumClasses; ++c) {
    const std::int64_t tp = cm(c, c);
    const std::int64_t fp = cm.col(c).sum() - tp;
    const std::int64_t fn = cm.row(c).sum() - tp;
    const std::int64_t denom = 2 * tp + fp + fn;
    out[c] = denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
  }
  return out;
}

double f1_macro(const ClassScores& per_class) {
  double sum = 0.0;
  for (double v : per_class) sum += v;
  return sum / kNumClasses;
}

EvalReport evaluate(std::string model_id, std::string input_setup, std::string dataset,
                    std::span<const Label> preds, std::span<const Label> labels,
                    std::int64_t skipped) {
  EvalReport r;
  r.model_id = std::move(model_id);
  r.input_setup = std::move(input_setup);
  r.dataset = std::move(dataset);
  r.confusion = confusion(preds, labels);
  r.f1 = f1_per_class(r.confusion);
  r.f1_macro = f1_macro(r.f1);
  r.instances = static_cast<std::int64_t>(labels.size());
  r.skipped = skipped;
  return r;
}

std::string format_fixed_half_even(double value, int places) {
  char buf[512];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  if (ec != std::errc{}) throw InvalidArgument("value not representable");
  std::string s(buf, end);

  const bool negative = !s.empty() && s.front() == '-';
  if (negative) s.erase(0, 1);
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    s.push_back('.');
    dot = s.size() - 1;
  }
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  const std::size_t int_len = dot;
  std::size_t keep = int_len + static_cast<std::size_t>(places);
  if (digits.size() < keep) digits.append(keep - digits.size(), '0');

  bool round_up = false;
  if (digits.size() > keep) {
    const char first = digits[keep];
    const bool rest_nonzero =
        std::any_of(digits.begin() + static_cast<std::ptrdiff_t>(keep) + 1, digits.end(),
                    [](char c) { return c != '0'; });
    if (first > '5' || (first == '5' && rest_nonzero)) {
      round_up = true;
    } else if (first == '5') {
      const char last = keep == 0 ? '0' : digits[keep - 1];
      round_up = ((last - '0') % 2) == 1;
    }
  }
  digits.resize(keep);
  std::size_t new_int_len = int_len;
  if (round_up) {
    int i = static_cast<int>(keep) - 1;
    for (; i >= 0; --i) {
      if (digits[static_cast<std::size_t>(i)] == '9') {
        digits[static_cast<std::size_t>(i)] = '0';
      } else {
        ++digits[static_cast<std::size_t>(i)];
        break;
      }
    }
    if (i < 0) {
      digits.insert(digits.begin(), '1');
      ++new_int_len;
    }
  }
  std::string out = digits.substr(0, new_int_len);
  if (out.empty()) out = "0";
  if (places > 0) out += "." + digits.substr(new_int_len);
  const bool all_zero = std::all_of(digits.begin(), digits.end(), [](char c) { return c == '0'; });
  if (negative && !all_zero) out.insert(out.begin(), '-');
  return out;
}

std::string to_record(const EvalReport& r) {
  json cm = json::array();
  for (int t = 0; t < kNumClasses; ++t) {
    json row = json::array();
    for (int p = 0; p < kNumClasses; ++p) row.push_back(r.confusion(t, p));
    cm.push_back(row);
  }
  return json{{"model", r.model_id},
              {"input", r.input_setup},
              {"dataset", r.dataset},
              {"support", r.f1[0]},
              {"refute", r.f1[1]},
              {"nei", r.f1[2]},
              {"f1_macro", r.f1_macro},
              {"instances", r.instances},
              {"skipped", r.skipped},
              {"confusion", cm}}
      .dump();
}

EvalReport from_record(std::string_view line) {
  try {
    const json j = json::parse(line);
    EvalReport r;
    r.model_id = j.at("model").get<std::string>();
    r.input_setup = j.at("input").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.f1 = {j.at("support").get<double>(), j.at("refute").get<double>(), j.at("nei").get<double>()};
    r.f1_macro = j.at("f1_macro").get<double>();
    r.instances = j.at("instances").get<std::int64_t>();
    r.skipped = j.value("skipped", std::int64_t{0});
    if (j.contains("confusion")) {
      const auto& cm = j.at("confusion");
      for (int t = 0; t < kNumClasses; ++t) {
        for (int p = 0; p < kNumClasses; ++p) r.confusion(t, p) = cm.at(t).at(p).get<std::int64_t>();
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report record: ") + e.what());
  }
}

std::string report(std::span<const EvalReport> results, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::Records) {
    for (const auto& r : results) out << to_record(r) << '\n';
    return out.str();
  }

  const std::vector<std::string> header = {"Model",  "Input",    "Dataset",   "Support", "Refute",
                                           "NEI",    "F1-macro", "Instances", "Skipped"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : results) {
    rows.push_back({r.model_id, r.input_setup, r.dataset, format_fixed_half_even(r.f1[0]),
                    format_fixed_half_even(r.f1[1]), format_fixed_half_even(r.f1[2]),
                    format_fixed_half_even(r.f1_macro), std::to_string(r.instances),
                    std::to_string(r.skipped)});
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  // Text columns left-aligned, numbers right-aligned.
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      const std::string pad(width[c] - row[c].size(), ' ');
      line += c < 3 ? row[c] + pad : pad + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  return out.str();
}

}  // namespace factprobe
