#pragma once

// Command-line driver. Every command computes into memory first and writes
// its files (plus manifest.json) only once it has succeeded.

#include "ffent/config.hpp"

#include <map>
#include <string>
#include <vector>

namespace ffent::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { ok = 0, config_error = 1, numerical_error = 2, partial = 3 };

struct Output {
  std::map<std::string, std::string> files;
  nlohmann::json manifest;  // resolved parameters
  bool partial = false;
  std::vector<std::string> notes;  // one-line summaries for stdout
};

const std::vector<std::string>& commands();
const std::vector<std::string>& figure_panels();

/// Runs one non-figure command on a validated config.
Output execute(const std::string& command, const ExperimentConfig& config);

/// Runs a figure preset with built-in parameters.
Output figure(const std::string& panel, int workers);

int run(int argc, const char* const* argv);

}  // namespace ffent::cli
