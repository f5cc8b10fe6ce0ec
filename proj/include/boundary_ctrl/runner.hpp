#pragma once

// Experiment configuration and the batch commands behind the CLI.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "boundary_ctrl/types.hpp"

namespace bctrl::runner {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitCheckFailed = 2,
  kExitNotConverged = 3,
  kExitCertificationFailed = 4,
};

struct ExperimentConfig {
  double l = 2.0 * kPi;
  int N = 8;
  double a = 0.0;
  double c = 5.0;
  double tau = 0.25;
  double horizon = 50.0;
  double tolerance = 1e-6;
  std::int64_t Q = 1000000;
  std::uint64_t seed = 0;
  std::string initial = "eigenstate:0";
  std::string target = "eigenstate:1";
  double mu0 = 0.0;
  double mu1 = 0.0;
  double fidelity_target = 0.9;
  std::string freeze = "midpoint";   // left | midpoint
  std::string model = "boundary";    // boundary | auxiliary
  int starts = 8;
  int levels = 65;
  int substeps = 64;
  int trials = 100;
  double certify_horizon = 1.0;
  int certify_N = 8;
  bool certify_identical = false;
  bool certify_corrupt = false;  // test hook: corrupts the second propagator
  bool binary_dump = false;
  int max_rows = 2048;
};

/// Parses `key = value` text, or JSON when `json` is set. Unknown keys and
/// malformed values raise ConfigError naming the field.
ExperimentConfig parse_config(const std::string& text, bool json);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& config);
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);

/// Resolves `eigenstate:k`, `mode:n` or `vector: z0, z1, ...` (entries like
/// `0.6`, `0.8i`, `0.6+0.8i`); explicit vectors are normalized.
CVector resolve_state(const std::string& spec, const CMatrix& eigenvectors, int half_width,
                      const std::string& field);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::filesystem::path> envelope;
  std::optional<std::uint64_t> seed;
};

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  std::vector<std::filesystem::path> files;
};

RunResult run_command(const std::string& command, const ExperimentConfig& config,
                      const RunOptions& options);

/// CSV number formatting: shortest of 17 significant digits, '.' separator.
std::string format_double(double value);
/// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& contents);
std::string sha256_hex(const std::string& contents);

/// Envelope file: CSV with header `window,u`; zero rows means no control.
std::vector<double> read_envelope(const std::filesystem::path& path);

}  // namespace bctrl::runner
