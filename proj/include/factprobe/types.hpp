#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace factprobe {

inline constexpr int kNumClasses = 3;

/// Veracity class. The numeric values are the on-disk encoding.
enum class Label : std::uint8_t { Supported = 0, Refuted = 1, NotEnoughInfo = 2 };

enum class DatasetId { Mocheg, Factify2 };
enum class Split { Train, Val, Test };

/// One embedding source. Several of these make up an experiment's input list.
enum class InputSetup {
  MmClaim,
  MmEvidence,
  MmText,
  MmImage,
  Claim,
  ClaimImage,
  EvidenceText,
  EvidenceImage,
};

inline constexpr std::array<InputSetup, 8> kAllInputSetups = {
    InputSetup::MmClaim,    InputSetup::MmEvidence,   InputSetup::MmText,
    InputSetup::MmImage,    InputSetup::Claim,        InputSetup::ClaimImage,
    InputSetup::EvidenceText, InputSetup::EvidenceImage,
};

// Base error type. Subclasses let callers (the CLI) map failures to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Content is malformed or violates the declared schema.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Arguments violate an operation's preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

inline int label_index(Label l) { return static_cast<int>(l); }

Label label_from_index(int index);

std::string_view to_string(Label l);
std::string_view to_string(DatasetId d);
std::string_view to_string(Split s);
std::string_view to_string(InputSetup s);

std::optional<DatasetId> parse_dataset_id(std::string_view s);
std::optional<Split> parse_split(std::string_view s);
std::optional<InputSetup> parse_input_setup(std::string_view s);

}  // namespace factprobe
