#include "factprobe/dataset_prep.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "factprobe/detail/binary_io.hpp"
#include "factprobe/random.hpp"
#include "json.hpp"

namespace factprobe {

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9));
}

}  // namespace

Label remap_factify2_label(std::string_view raw) {
  if (raw == "Support_Multimodal" || raw == "Support_Text") return Label::Supported;
  if (raw == "Refute") return Label::Refuted;
  if (raw == "Insufficient_Multimodal" || raw == "Insufficient_Text") return Label::NotEnoughInfo;
  throw InvalidArgument("unknown Factify2 label: " + std::string(raw));
}

Label parse_mocheg_label(std::string_view raw) {
  const auto l = ascii_lower(raw);
  if (l == "supported") return Label::Supported;
  if (l == "refuted") return Label::Refuted;
  if (l == "nei" || l == "not enough info" || l == "not_enough_info") return Label::NotEnoughInfo;
  throw InvalidArgument("unknown Mocheg label: " + std::string(raw));
}

std::vector<std::size_t> stratified_val_counts(std::span<const std::size_t> class_counts,
                                               double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("fraction must be in (0, 1)");
  std::vector<std::size_t> val(class_counts.size(), 0);
  std::size_t total = 0;
  std::size_t largest = 0;
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    const std::size_t n = class_counts[c];
    total += n;
    val[c] = std::min(n, round_half_up(fraction * static_cast<double>(n)));
    if (n >= 10) val[c] = std::max<std::size_t>(val[c], 1);
    if (n > class_counts[largest]) largest = c;
  }
  if (class_counts.empty()) return val;

  const auto target = static_cast<std::ptrdiff_t>(round_half_up(fraction * static_cast<double>(total)));
  std::ptrdiff_t sum = 0;
  for (auto v : val) sum += static_cast<std::ptrdiff_t>(v);
  const std::ptrdiff_t adjusted =
      std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(val[largest]) + (target - sum), 0,
                                 static_cast<std::ptrdiff_t>(class_counts[largest]));
  val[largest] = static_cast<std::size_t>(adjusted);
  return val;
}

SplitIndices stratified_split(std::span<const Label> labels, double fraction, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[label_index(labels[i])].push_back(i);

  std::array<std::size_t, kNumClasses> counts{};
  for (int c = 0; c < kNumClasses; ++c) counts[c] = members[c].size();
  const auto val_counts = stratified_val_counts(counts, fraction);

  Rng rng(seed);
  SplitIndices out;
  for (int c = 0; c < kNumClasses; ++c) {
    auto& m = members[c];
    shuffle(std::span(m), rng);
    out.val.insert(out.val.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(val_counts[c]));
    out.train.insert(out.train.end(), m.begin() + static_cast<std::ptrdiff_t>(val_counts[c]), m.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

std::pair<std::vector<ClaimInstance>, std::vector<ClaimInstance>> stratified_split(
    std::span<const ClaimInstance> instances, double fraction, std::uint64_t seed) {
  std::vector<Label> labels;
  labels.reserve(instances.size());
  for (const auto& inst : instances) labels.push_back(inst.label);
  const auto idx = stratified_split(std::span<const Label>(labels), fraction, seed);

  std::pair<std::vector<ClaimInstance>, std::vector<ClaimInstance>> out;
  for (auto i : idx.train) {
    out.first.push_back(instances[i]);
    out.first.back().split = Split::Train;
  }
  for (auto i : idx.val) {
    out.second.push_back(instances[i]);
    out.second.back().split = Split::Val;
  }
  return out;
}

std::string crop_evidence(std::string_view text, int max_words) {
  if (max_words < 1) throw InvalidArgument("max_words must be >= 1");
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  if (words.size() <= static_cast<std::size_t>(max_words)) return std::string(text);

  std::string out;
  for (int w = 0; w < max_words; ++w) {
    if (w > 0) out.push_back(' ');
    out.append(words[static_cast<std::size_t>(w)]);
  }
  return out;
}

std::optional<std::string> select_first_image(std::span<const std::string> refs) {
  if (refs.empty()) return std::nullopt;
  return refs.front();
}

Requirements requirements_for(std::span<const InputSetup> setups) {
  Requirements req;
  for (auto s : setups) {
    switch (s) {
      case InputSetup::MmClaim:
      case InputSetup::ClaimImage:
        req.claim_image = true;
        break;
      case InputSetup::MmEvidence:
      case InputSetup::EvidenceImage:
        req.evidence_image = true;
        break;
      case InputSetup::MmImage:
        req.claim_image = true;
        req.evidence_image = true;
        break;
      case InputSetup::MmText:
      case InputSetup::Claim:
      case InputSetup::EvidenceText:
        break;
    }
  }
  return req;
}

FilterResult filter_complete(std::span<const ClaimInstance> instances, const Requirements& req) {
  FilterResult out;
  for (const auto& inst : instances) {
    const bool has_claim_image = inst.claim_image_ref && !inst.claim_image_ref->empty();
    const bool has_evidence_image = select_first_image(inst.evidence_image_refs).has_value();
    const bool ok = (!req.evidence_text || !inst.evidence_text.empty()) &&
                    (!req.claim_image || has_claim_image) &&
                    (!req.evidence_image || has_evidence_image);
    if (ok) {
      out.kept.push_back(inst);
    } else {
      ++out.dropped;
    }
  }
  return out;
}

std::string render_prompt(std::string_view claim, std::string_view evidence) {
  constexpr std::string_view kClaimSlot = "{claim}";
  constexpr std::string_view kEvidenceSlot = "{evidence}";
  const auto tpl = kPromptTemplate;
  const auto c = tpl.find(kClaimSlot);
  const auto e = tpl.find(kEvidenceSlot);
  std::string out;
  out.reserve(tpl.size() + claim.size() + evidence.size());
  out.append(tpl.substr(0, c));
  out.append(claim);
  out.append(tpl.substr(c + kClaimSlot.size(), e - c - kClaimSlot.size()));
  out.append(evidence);
  out.append(tpl.substr(e + kEvidenceSlot.size()));
  return out;
}

std::optional<Label> parse_verdict(std::string_view response) {
  // NEI first so it wins a tie at equal positions.
  static constexpr std::array<std::pair<std::string_view, Label>, 3> kKeywords = {{
      {"not enough info", Label::NotEnoughInfo},
      {"supported", Label::Supported},
      {"refuted", Label::Refuted},
  }};
  const std::string lower = ascii_lower(response);
  std::optional<Label> best;
  std::size_t best_pos = std::string::npos;
  for (const auto& [keyword, label] : kKeywords) {
    const auto pos = lower.find(keyword);
    if (pos != std::string::npos && (best_pos == std::string::npos || pos < best_pos)) {
      best_pos = pos;
      best = label;
    }
  }
  return best;
}

std::string VerdictTally::format() const {
  const double pct = total == 0 ? 0.0 : 100.0 * static_cast<double>(parsed) / static_cast<double>(total);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%zu (%.1f%%)", parsed, pct);
  return buf;
}

std::vector<ClaimInstance> parse_instances(std::string_view jsonl) {
  using nlohmann::json;
  std::vector<ClaimInstance> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ClaimInstance inst;
      inst.instance_id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      inst.claim_text = j.at("claim").get<std::string>();
      inst.evidence_text = j.value("evidence", std::string{});
      if (j.contains("claim_image") && j.at("claim_image").is_string()) {
        inst.claim_image_ref = j.at("claim_image").get<std::string>();
      }
      if (j.contains("evidence_images")) {
        inst.evidence_image_refs = j.at("evidence_images").get<std::vector<std::string>>();
      }
      inst.raw_label = j.at("raw_label").get<std::string>();
      const auto dataset = parse_dataset_id(j.at("dataset").get<std::string>());
      const auto split = parse_split(j.at("split").get<std::string>());
      if (!dataset || !split) throw FormatError("unknown dataset or split");
      inst.dataset = *dataset;
      inst.split = *split;
      inst.label = inst.dataset == DatasetId::Factify2 ? remap_factify2_label(inst.raw_label)
                                                       : parse_mocheg_label(inst.raw_label);
      out.push_back(std::move(inst));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("metadata line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw FormatError("metadata line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ClaimInstance> read_instances(const std::string& path) {
  return parse_instances(detail::read_file(path));
}

}  // namespace factprobe
