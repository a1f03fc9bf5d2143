#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "factprobe/types.hpp"

namespace factprobe::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kMissingFile = 3,
  kSchemaViolation = 4,
  kInvalidArgument = 5,
  kDiverged = 6,
};

/// Named input-setup combinations. The setup order is the concatenation
/// order inside the probe.
struct Preset {
  std::string name;
  std::string display;  // as printed in reports, e.g. "mm_claim + mm_evidence"
  std::vector<InputSetup> setups;
};

const std::vector<Preset>& presets();
const Preset* find_preset(std::string_view name);

/// Entry point shared by the executable and the tests.
int dispatch(int argc, char** argv);
int dispatch(const std::vector<std::string>& args);

}  // namespace factprobe::cli
