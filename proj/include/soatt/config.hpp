#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "soatt/simulator.hpp"

namespace soatt {

/// Scenario file problem; `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& field,
              const std::string& message);
  std::string source;
  int line;
  std::string field;
};

/// Values that replace what the file says (used by sweeps).
struct ConfigOverrides {
  std::optional<int> count;  // only for generated layouts
  std::optional<CaStrategy> ca;
  std::optional<DeadlockStrategy> deadlock;
};

/// Parses a YAML scenario document with the sections `robots`, `gains`,
/// `strategy` and `sim`. Unknown keys are rejected. The result has been
/// validated.
ScenarioConfig parse_config(const std::string& text, const std::string& source = "<string>",
                            const ConfigOverrides& overrides = {});

/// Reads and parses a file; I/O failures raise std::system_error.
ScenarioConfig load_config(const std::filesystem::path& path,
                           const ConfigOverrides& overrides = {});

}  // namespace soatt
