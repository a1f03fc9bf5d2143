#pragma once

// Dataset conventions applied to normalized instance metadata: label
// remapping, validation splits, evidence cropping, image selection, the
// zero-shot prompt and verdict parsing.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factprobe/types.hpp"

namespace factprobe {

struct ClaimInstance {
  std::string instance_id;
  std::string claim_text;
  std::string evidence_text;
  std::optional<std::string> claim_image_ref;
  std::vector<std::string> evidence_image_refs;
  std::string raw_label;
  Label label = Label::Supported;
  DatasetId dataset = DatasetId::Mocheg;
  Split split = Split::Train;
};

/// Collapses the five Factify2 categories onto three classes.
Label remap_factify2_label(std::string_view raw);

/// Mocheg labels are used as they are ("supported", "refuted", "NEI" and
/// common spellings of the latter).
Label parse_mocheg_label(std::string_view raw);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Per-class validation counts for a stratified split: round-half-up of
/// fraction * count, at least one for classes with >= 10 members, and the
/// largest class absorbs the residual so the total equals
/// round-half-up(fraction * N).
std::vector<std::size_t> stratified_val_counts(std::span<const std::size_t> class_counts,
                                               double fraction);

/// Seeded stratified split over instance labels. Index lists are returned
/// in ascending order.
SplitIndices stratified_split(std::span<const Label> labels, double fraction, std::uint64_t seed);

/// Convenience overload over instances.
std::pair<std::vector<ClaimInstance>, std::vector<ClaimInstance>> stratified_split(
    std::span<const ClaimInstance> instances, double fraction, std::uint64_t seed);

inline constexpr int kEvidenceWordLimit = 768;

/// Keeps the first max_words whitespace-delimited words. Text within the
/// limit is returned unchanged.
std::string crop_evidence(std::string_view text, int max_words = kEvidenceWordLimit);

std::optional<std::string> select_first_image(std::span<const std::string> refs);

/// Which fields an instance needs for a set of input setups.
struct Requirements {
  bool evidence_text = true;
  bool claim_image = false;
  bool evidence_image = false;
};

Requirements requirements_for(std::span<const InputSetup> setups);

struct FilterResult {
  std::vector<ClaimInstance> kept;
  std::size_t dropped = 0;
};

FilterResult filter_complete(std::span<const ClaimInstance> instances, const Requirements& req);

/// Zero-shot prompt with "{claim}" and "{evidence}" slots.
inline constexpr std::string_view kPromptTemplate =
    "Assess the factuality of the following claim by \n"
    "considering evidence. Only answer \"supported\", \n"
    "\"refuted\" or \"not enough info\".\n"
    "Claim: {claim} \n"
    "Evidence: {evidence}";

std::string render_prompt(std::string_view claim, std::string_view evidence);

/// Earliest case-insensitive occurrence of "supported", "refuted" or
/// "not enough info"; nullopt when none occurs.
std::optional<Label> parse_verdict(std::string_view response);

/// Parsed-vs-total tally of zero-shot responses.
struct VerdictTally {
  std::size_t parsed = 0;
  std::size_t total = 0;

  void add(std::string_view response) {
    ++total;
    if (parse_verdict(response)) ++parsed;
  }

  /// "parsed (pct%)" with one decimal, e.g. "1617 (97.7%)".
  std::string format() const;
};

/// Reads one JSON object per line:
/// {id, claim, evidence, claim_image, evidence_images, raw_label, dataset, split}
std::vector<ClaimInstance> read_instances(const std::string& path);
std::vector<ClaimInstance> parse_instances(std::string_view jsonl);

}  // namespace factprobe
