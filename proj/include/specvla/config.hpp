#pragma once

// Run configuration: flat JSON keys, command-line overrides and validation.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specvla/action_space.hpp"
#include "specvla/draft_tree.hpp"
#include "specvla/verify_engine.hpp"

namespace specvla {

/// Process exit codes; config failures each get their own.
enum class ExitCode : int {
  kOk = 0,
  kRunFailed = 1,
  kMissingFile = 2,
  kMalformedJson = 3,
  kInvalidValue = 4,
  kIdentityViolation = 5,
  kUsage = 64,
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

enum class ReportFormat { kJson, kCsv, kTable };

struct RunConfig {
  int vocab_size = kDefaultVocabSize;
  DimensionBounds bounds;

  std::uint64_t seed = 0;
  double agreement_p = 0.5;
  double noise_sigma = 6.0;
  double verifier_sharpness = 4.0;

  TreeParams tree;  // top_k 8, depth 4, 50 nodes
  std::vector<int> relaxation_thresholds{0, 3, 5, 9};
  std::optional<std::array<int, kActionDims>> per_dimension_r;

  int episodes = 50;
  int target_length = 70;
  int success_tolerance = 5;
  int report_positions = 7;
  int threads = 1;

  double verify_latency_ms = 20.0;
  double draft_latency_ms = 1.0;
  bool measure_speedup = false;
  int measure_episodes = 2;

  ReportFormat format = ReportFormat::kTable;
  std::string output;  // empty: stdout

  /// Strict for r == 0, relaxed otherwise.
  std::vector<AcceptancePolicy> policies() const;

  /// Throws ConfigError(kInvalidValue) naming the first bad field.
  void validate() const;
};

/// Values given on the command line; each present field replaces the file value.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::vector<int> thresholds;  // replaces the sweep when non-empty
  std::optional<int> top_k;
  std::optional<int> depth;
  std::optional<int> max_nodes;
  std::optional<int> episodes;
  std::optional<int> length;
  std::optional<ReportFormat> format;
  std::optional<std::string> output;
};

/// Unknown keys and wrongly typed values are rejected. Does not validate ranges.
RunConfig config_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const RunConfig& config);

/// Reads and parses a config file; kMissingFile / kMalformedJson on failure.
RunConfig load_config_file(const std::string& path);

/// File (optional) then SPECDEC_SEED when the file sets no seed, then
/// overrides, then validation.
RunConfig parse_config(const std::optional<std::string>& path, const ConfigOverrides& overrides);

ReportFormat parse_format(const std::string& name);
std::string to_string(ReportFormat format);

}  // namespace specvla
