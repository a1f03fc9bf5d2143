#include "factprobe/types.hpp"

#include <algorithm>

namespace factprobe {

namespace {

constexpr std::array<std::string_view, 8> kSetupNames = {
    "mm_claim", "mm_evidence", "mm_text",       "mm_image",
    "claim",    "claim_image", "evidence_text", "evidence_image",
};

}  // namespace

Label label_from_index(int index) {
  if (index < 0 || index >= kNumClasses) {
    throw InvalidArgument("label out of range: " + std::to_string(index));
  }
  return static_cast<Label>(index);
}

std::string_view to_string(Label l) {
  switch (l) {
    case Label::Supported:
      return "supported";
    case Label::Refuted:
      return "refuted";
    case Label::NotEnoughInfo:
      return "nei";
  }
  return "?";
}

std::string_view to_string(DatasetId d) {
  return d == DatasetId::Mocheg ? "mocheg" : "factify2";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "?";
}

std::string_view to_string(InputSetup s) { return kSetupNames[static_cast<std::size_t>(s)]; }

std::optional<DatasetId> parse_dataset_id(std::string_view s) {
  if (s == "mocheg") return DatasetId::Mocheg;
  if (s == "factify2") return DatasetId::Factify2;
  return std::nullopt;
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

std::optional<InputSetup> parse_input_setup(std::string_view s) {
  auto it = std::find(kSetupNames.begin(), kSetupNames.end(), s);
  if (it == kSetupNames.end()) return std::nullopt;
  return static_cast<InputSetup>(it - kSetupNames.begin());
}

}  // namespace factprobe
