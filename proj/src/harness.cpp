#include "specvla/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "specvla/hash.hpp"

namespace specvla {

void CostModel::validate() const {
  if (!(verify_latency > 0.0)) throw ModelError("verify latency must be > 0");
  if (!(draft_latency > 0.0)) throw ModelError("draft latency must be > 0");
}

double analytic_speedup(const CostModel& cost, int depth, double tokens_per_pass) {
  return tokens_per_pass * cost.verify_latency / (cost.verify_latency + depth * cost.draft_latency);
}

bool success_proxy(std::span<const ActionToken> spec_tokens, std::span<const ActionToken> reference_tokens,
                   int tolerance_bins) {
  if (spec_tokens.size() != reference_tokens.size()) {
    throw StructuralError("success proxy needs equal-length sequences");
  }
  if (spec_tokens.size() % kActionDims != 0) {
    throw StructuralError("success proxy needs whole action chunks");
  }
  for (std::size_t i = 0; i < spec_tokens.size(); ++i) {
    if (bin_distance(spec_tokens[i], reference_tokens[i]) > tolerance_bins) return false;
  }
  return true;
}

EpisodeStats summarize_episode(const EpisodeTrace& trace, int max_depth, int success_tolerance,
                               std::span<const ActionToken> ar_tokens) {
  EpisodeStats s;
  s.histogram.assign(static_cast<std::size_t>(max_depth) + 1, 0);
  s.position_steps.assign(kActionDims, 0);
  s.position_accepted.assign(kActionDims, 0);
  TokenSeq reference;
  for (const auto& o : trace.outcomes) {
    if (o.accepted < 0 || o.accepted > max_depth) {
      throw StructuralError("accepted length " + std::to_string(o.accepted) + " outside histogram range");
    }
    ++s.histogram[static_cast<std::size_t>(o.accepted)];
    const std::size_t pos = dimension_of(o.start_position);
    ++s.position_steps[pos];
    s.position_accepted[pos] += static_cast<std::uint64_t>(o.accepted);
    s.accepted_total += static_cast<std::uint64_t>(o.accepted);
    s.emitted_total += o.emitted.size();
    reference.insert(reference.end(), o.reference.begin(), o.reference.end());
  }
  s.steps = trace.outcomes.size();
  s.tokens_per_pass = s.steps ? static_cast<double>(s.emitted_total) / static_cast<double>(s.steps) : 0.0;
  reference.resize(trace.tokens.size());
  s.success = success_proxy(trace.tokens, reference, success_tolerance);
  s.ar_match = std::equal(trace.tokens.begin(), trace.tokens.end(), ar_tokens.begin(), ar_tokens.end());
  s.outcomes = trace.outcomes;
  return s;
}

EpisodeSetup make_episode(const RunConfig& config, int episode) {
  const std::uint64_t h = hash::combine(hash::mix(config.seed), static_cast<std::uint64_t>(episode));
  auto verifier = std::make_shared<const SyntheticVerifier>(hash::lane(h, 0), config.vocab_size,
                                                            config.verifier_sharpness);
  auto draft = make_noisy_draft(verifier, config.agreement_p, config.noise_sigma, hash::lane(h, 1));
  PrefixState prefix;
  prefix.prompt_id = hash::lane(h, 2);
  prefix.observation_id = hash::lane(h, 3);
  return EpisodeSetup{std::move(verifier), std::move(draft), std::move(prefix)};
}

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first failure.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> workers;
    for (int t = 0; t < std::min(threads, n); ++t) {
      workers.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

BatchResult run_batch(const RunConfig& config) {
  config.validate();
  const auto policies = config.policies();
  const auto len = static_cast<std::size_t>(config.target_length);

  std::vector<TokenSeq> ar(static_cast<std::size_t>(config.episodes));
  parallel_for(config.episodes, config.threads, [&](int e) {
    const auto setup = make_episode(config, e);
    ar[static_cast<std::size_t>(e)] = ar_decode(setup.prefix, *setup.verifier, len);
  });

  BatchResult batch;
  batch.runs.resize(policies.size());
  for (std::size_t p = 0; p < policies.size(); ++p) {
    batch.runs[p].policy = policies[p];
    batch.runs[p].episodes.resize(static_cast<std::size_t>(config.episodes));
  }
  const int tasks = static_cast<int>(policies.size()) * config.episodes;
  parallel_for(tasks, config.threads, [&](int task) {
    const auto p = static_cast<std::size_t>(task / config.episodes);
    const int e = task % config.episodes;
    const auto setup = make_episode(config, e);
    const auto start = std::chrono::steady_clock::now();
    const auto trace = decode_episode(setup.prefix, *setup.verifier, *setup.draft, config.tree, policies[p], len);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    auto stats = summarize_episode(trace, config.tree.max_depth, config.success_tolerance,
                                   ar[static_cast<std::size_t>(e)]);
    stats.wall_clock = elapsed.count() / static_cast<double>(len);
    batch.runs[p].episodes[static_cast<std::size_t>(e)] = std::move(stats);
  });
  return batch;
}

SpeedupMeasurement measure_speedup(const RunConfig& config, const AcceptancePolicy& policy) {
  config.validate();
  using std::chrono::duration;
  using std::chrono::duration_cast;
  using std::chrono::nanoseconds;
  const auto verify_ns = duration_cast<nanoseconds>(duration<double, std::milli>(config.verify_latency_ms));
  const auto draft_ns = duration_cast<nanoseconds>(duration<double, std::milli>(config.draft_latency_ms));
  const auto len = static_cast<std::size_t>(config.target_length);

  SpeedupMeasurement m;
  std::uint64_t steps = 0;
  std::uint64_t emitted = 0;
  for (int e = 0; e < config.measure_episodes; ++e) {
    const auto setup = make_episode(config, e);
    const auto verifier = std::make_shared<TimedVerifier>(setup.verifier, verify_ns);
    const TimedDraft draft(setup.draft, draft_ns);

    auto t0 = std::chrono::steady_clock::now();
    const auto ar = ar_decode(setup.prefix, *verifier, len);
    auto t1 = std::chrono::steady_clock::now();
    const auto trace = decode_episode(setup.prefix, *verifier, draft, config.tree, policy, len);
    auto t2 = std::chrono::steady_clock::now();

    m.ar_seconds += duration<double>(t1 - t0).count();
    m.spec_seconds += duration<double>(t2 - t1).count();
    steps += trace.outcomes.size();
    for (const auto& o : trace.outcomes) emitted += o.emitted.size();
  }
  m.tokens_per_pass = static_cast<double>(emitted) / static_cast<double>(steps);
  m.measured = m.spec_seconds > 0.0 ? m.ar_seconds / m.spec_seconds : 0.0;
  m.reliable = config.verify_latency_ms > 0.0 && config.draft_latency_ms > 0.0;
  if (m.reliable) {
    const CostModel cost{config.verify_latency_ms / 1000.0, config.draft_latency_ms / 1000.0};
    m.analytic = analytic_speedup(cost, config.tree.max_depth, m.tokens_per_pass);
  }
  return m;
}

bool Report::identities_ok() const {
  return !policies.empty() &&
         std::all_of(policies.begin(), policies.end(), [](const PolicyReport& p) { return p.identities_ok; });
}

Report aggregate(const BatchResult& batch, const RunConfig& config) {
  if (batch.runs.empty()) throw std::invalid_argument("aggregate needs at least one policy run");
  Report report;
  report.config = config;
  const CostModel cost{config.verify_latency_ms / 1000.0, config.draft_latency_ms / 1000.0};

  for (const auto& run : batch.runs) {
    if (run.episodes.empty()) throw std::invalid_argument("aggregate needs at least one episode per policy");
    PolicyReport pr;
    pr.policy = run.policy;
    pr.episodes = static_cast<int>(run.episodes.size());
    pr.histogram.assign(static_cast<std::size_t>(config.tree.max_depth) + 1, 0);
    std::vector<std::uint64_t> pos_steps(kActionDims, 0);
    std::vector<std::uint64_t> pos_accepted(kActionDims, 0);
    int successes = 0;
    int matches = 0;
    for (const auto& ep : run.episodes) {
      if (ep.histogram.size() != pr.histogram.size()) throw StructuralError("histogram width mismatch");
      for (std::size_t k = 0; k < pr.histogram.size(); ++k) pr.histogram[k] += ep.histogram[k];
      for (std::size_t d = 0; d < kActionDims; ++d) {
        pos_steps[d] += ep.position_steps[d];
        pos_accepted[d] += ep.position_accepted[d];
      }
      pr.steps += ep.steps;
      pr.accepted_total += ep.accepted_total;
      pr.emitted_total += ep.emitted_total;
      successes += ep.success ? 1 : 0;
      matches += ep.ar_match ? 1 : 0;
    }

    const auto steps = static_cast<double>(pr.steps);
    double proportion_sum = 0.0;
    std::uint64_t hist_steps = 0;
    std::uint64_t hist_accepted = 0;
    for (std::size_t k = 0; k < pr.histogram.size(); ++k) {
      const double prop = pr.steps ? static_cast<double>(pr.histogram[k]) / steps : 0.0;
      pr.proportions.push_back(prop);
      proportion_sum += prop;
      hist_steps += pr.histogram[k];
      hist_accepted += k * pr.histogram[k];
    }
    pr.mean_accepted = pr.steps ? static_cast<double>(pr.accepted_total) / steps : 0.0;
    // defined as mean + 1 so the identity holds bit-for-bit
    pr.tokens_per_pass = pr.steps ? pr.mean_accepted + 1.0 : 0.0;
    for (int d = 0; d < config.report_positions; ++d) {
      const auto i = static_cast<std::size_t>(d);
      if (pos_steps[i] == 0) {
        pr.per_position.push_back(std::nullopt);
      } else {
        pr.per_position.push_back(static_cast<double>(pos_accepted[i]) / static_cast<double>(pos_steps[i]));
      }
    }
    pr.success_rate = static_cast<double>(successes) / pr.episodes;
    pr.ar_match_rate = static_cast<double>(matches) / pr.episodes;
    pr.estimated_speedup = config.verify_latency_ms > 0.0 && config.draft_latency_ms > 0.0
                               ? analytic_speedup(cost, config.tree.max_depth, pr.tokens_per_pass)
                               : 0.0;
    // integer identities are exact; the proportion sum is a floating check
    pr.identities_ok = pr.steps > 0 && hist_steps == pr.steps && hist_accepted == pr.accepted_total &&
                       pr.emitted_total == pr.accepted_total + pr.steps &&
                       pr.tokens_per_pass == static_cast<double>(hist_accepted) / steps + 1.0 &&
                       std::abs(proportion_sum - 1.0) <= 1e-9;
    if (config.measure_speedup) pr.measured = measure_speedup(config, run.policy);
    report.policies.push_back(std::move(pr));
  }
  return report;
}

AblationReport run_ablation(const RunConfig& config) {
  if (config.relaxation_thresholds.size() < 2) {
    throw ConfigError(ExitCode::kInvalidValue, "ablation needs at least two relaxation thresholds");
  }
  RunConfig quiet = config;
  quiet.measure_speedup = false;
  const auto report = aggregate(run_batch(quiet), quiet);
  AblationReport out;
  out.config = config;
  out.identities_ok = report.identities_ok();
  for (std::size_t i = 0; i < report.policies.size(); ++i) {
    out.rows.push_back(AblationRow{config.relaxation_thresholds[i], report.policies[i].tokens_per_pass,
                                   report.policies[i].success_rate});
  }
  return out;
}

std::string policy_label(const AcceptancePolicy& policy) {
  if (policy.mode == AcceptMode::kStrict) return "strict";
  std::string label = "relaxed r=" + std::to_string(policy.r);
  if (policy.per_dimension_r) label += "*";
  return label;
}

}  // namespace specvla
