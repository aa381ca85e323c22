#pragma once

// Batch runner, acceptance statistics, success proxy and speedup estimates.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specvla/config.hpp"
#include "specvla/models.hpp"
#include "specvla/verify_engine.hpp"

namespace specvla {

/// Latencies in seconds.
struct CostModel {
  double verify_latency = 0.020;
  double draft_latency = 0.001;

  /// Throws ModelError unless both latencies are strictly positive.
  void validate() const;
};

/// Expected wall-clock ratio against greedy decoding:
/// T * verify / (verify + depth * draft).
double analytic_speedup(const CostModel& cost, int depth, double tokens_per_pass);

/// Token-deviation surrogate for task success: true iff every aligned pair
/// differs by at most tolerance_bins. Throws StructuralError unless the
/// sequences have equal length that is a multiple of 7.
bool success_proxy(std::span<const ActionToken> spec_tokens, std::span<const ActionToken> reference_tokens,
                   int tolerance_bins);

struct EpisodeStats {
  std::vector<VerifyOutcome> outcomes;
  std::vector<std::uint64_t> histogram;       // steps per draft-acceptance length 0..max_depth
  std::vector<std::uint64_t> position_steps;  // steps starting at position (mod 7)
  std::vector<std::uint64_t> position_accepted;
  std::uint64_t steps = 0;
  std::uint64_t accepted_total = 0;
  std::uint64_t emitted_total = 0;  // before truncation
  double tokens_per_pass = 0.0;
  double wall_clock = 0.0;  // seconds per decoded token; not reported
  bool success = false;     // token-drift proxy against the per-position verifier argmax
  bool ar_match = false;    // exact equality with free-running greedy decoding
};

/// Fills the counters from a trace. Throws StructuralError if an outcome's
/// accepted length exceeds max_depth.
EpisodeStats summarize_episode(const EpisodeTrace& trace, int max_depth, int success_tolerance,
                               std::span<const ActionToken> ar_tokens);

struct PolicyRun {
  AcceptancePolicy policy;
  std::vector<EpisodeStats> episodes;
};

struct BatchResult {
  std::vector<PolicyRun> runs;
};

/// Per-episode synthetic models derived from the master seed. The same
/// episode index gives the same models under every policy.
struct EpisodeSetup {
  std::shared_ptr<const SyntheticVerifier> verifier;
  std::shared_ptr<const NoisyDraft> draft;
  PrefixState prefix;
};
EpisodeSetup make_episode(const RunConfig& config, int episode);

/// Runs config.episodes episodes for every policy. Deterministic per seed and
/// independent of config.threads.
BatchResult run_batch(const RunConfig& config);

struct SpeedupMeasurement {
  double ar_seconds = 0.0;
  double spec_seconds = 0.0;
  double measured = 0.0;
  double analytic = 0.0;
  double tokens_per_pass = 0.0;
  bool reliable = false;
};

/// Times greedy and speculative decoding of identical workloads with the
/// config's latencies injected as sleeps. Single-threaded. Zero latency
/// yields reliable == false.
SpeedupMeasurement measure_speedup(const RunConfig& config, const AcceptancePolicy& policy);

struct PolicyReport {
  AcceptancePolicy policy;
  int episodes = 0;
  std::uint64_t steps = 0;
  std::vector<std::uint64_t> histogram;
  std::vector<double> proportions;
  std::uint64_t accepted_total = 0;
  std::uint64_t emitted_total = 0;
  double mean_accepted = 0.0;    // draft tokens per pass, min 0
  double tokens_per_pass = 0.0;  // including the verifier token, min 1
  std::vector<std::optional<double>> per_position;
  double success_rate = 0.0;
  double ar_match_rate = 0.0;
  double estimated_speedup = 0.0;
  std::optional<SpeedupMeasurement> measured;
  bool identities_ok = false;
};

struct Report {
  static constexpr int kSchemaVersion = 1;
  RunConfig config;
  std::vector<PolicyReport> policies;

  bool identities_ok() const;
};

/// Throws std::invalid_argument for an empty batch.
Report aggregate(const BatchResult& batch, const RunConfig& config);

struct AblationRow {
  int r = 0;
  double tokens_per_pass = 0.0;
  double success_rate = 0.0;
};

struct AblationReport {
  RunConfig config;
  std::vector<AblationRow> rows;
  bool identities_ok = false;
};

/// Needs at least two thresholds; ConfigError(kInvalidValue) otherwise.
AblationReport run_ablation(const RunConfig& config);

std::string policy_label(const AcceptancePolicy& policy);

nlohmann::json report_to_json(const Report& report);
std::string report_to_csv(const Report& report);
std::string report_to_table(const Report& report);
std::string render(const Report& report, ReportFormat format);

nlohmann::json ablation_to_json(const AblationReport& report);
std::string ablation_to_csv(const AblationReport& report);
std::string ablation_to_table(const AblationReport& report);
std::string render(const AblationReport& report, ReportFormat format);

}  // namespace specvla
