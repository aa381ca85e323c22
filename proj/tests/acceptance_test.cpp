// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "oracles.hpp"
#include "specvla/case_study.hpp"
#include "specvla/harness.hpp"

using namespace specvla;

namespace {

struct Verdict {
  bool ok;
  std::string detail;
};

int failures = 0;

void check(const char* name, const std::function<Verdict()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v{false, ""};
  try {
    v = fn();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s  %-22s %s (%.1fs)\n", v.ok ? "PASS" : "FAIL", name, v.detail.c_str(), secs);
  std::fflush(stdout);
  failures += v.ok ? 0 : 1;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::vector<int> bins_of(const TokenSeq& t) {
  std::vector<int> out;
  for (const auto& x : t) out.push_back(x.bin);
  return out;
}

AcceptancePolicy random_relaxed(std::mt19937_64& rng) {
  const int r = std::uniform_int_distribution<int>(0, 12)(rng);
  if (rng() % 2 == 0) return AcceptancePolicy::relaxed(r);
  std::array<int, kActionDims> per{};
  for (auto& x : per) x = std::uniform_int_distribution<int>(-1, 12)(rng);
  return AcceptancePolicy::relaxed(r, per);
}

Verdict losslessness() {
  std::mt19937_64 rng(101);
  constexpr int kConfigs = 1000;
  for (int i = 0; i < kConfigs; ++i) {
    auto verifier = std::make_shared<SyntheticVerifier>(rng(), std::uniform_int_distribution<int>(2, 256)(rng));
    const auto draft = make_noisy_draft(verifier, std::uniform_real_distribution<double>(0.0, 1.0)(rng),
                                        std::uniform_real_distribution<double>(0.5, 12.0)(rng), rng());
    const int k = std::uniform_int_distribution<int>(1, std::min(8, verifier->vocab_size()))(rng);
    const TreeParams params{k, std::uniform_int_distribution<int>(1, 5)(rng),
                            std::uniform_int_distribution<int>(1, 50)(rng)};
    const PrefixState s{rng(), rng(), {}};
    const std::size_t len = std::uniform_int_distribution<std::size_t>(1, 35)(rng);
    const auto trace = decode_episode(s, *verifier, *draft, params, AcceptancePolicy::strict(), len);
    if (trace.tokens != ar_decode(s, *verifier, len)) return {false, "config " + std::to_string(i) + " diverged"};
  }
  return {true, std::to_string(kConfigs) + " configs token-identical to greedy"};
}

Verdict soundness() {
  std::mt19937_64 rng(202);
  std::uint64_t steps = 0;
  std::uint64_t accepted = 0;
  while (steps < 10000) {
    auto verifier = std::make_shared<SyntheticVerifier>(rng());
    const auto draft = make_noisy_draft(verifier, 0.5, 6.0, rng());
    const auto policy = random_relaxed(rng);
    const PrefixState s{rng(), rng(), {}};
    const auto trace = decode_episode(s, *verifier, *draft, TreeParams{}, policy, 70);
    PrefixState cur = s;
    for (const auto& o : trace.outcomes) {
      ++steps;
      for (std::size_t j = 0; j < o.emitted.size(); ++j) {
        const auto argmax = verifier->next(cur).argmax();
        const std::size_t dim = dimension_of(cur.emitted.size());
        if (static_cast<int>(j) < o.accepted) {
          ++accepted;
          if (bin_distance(o.emitted[j], argmax) > policy.effective_r(dim)) return {false, "token outside r"};
        } else if (o.emitted[j] != argmax) {
          return {false, "verifier token is not the argmax"};
        }
        cur.emitted.push_back(o.emitted[j]);
      }
    }
  }
  return {true, std::to_string(steps) + " steps, " + std::to_string(accepted) + " accepted drafts within r"};
}

Verdict monotonicity() {
  std::mt19937_64 rng(303);
  constexpr int kPairs = 1000;
  for (int i = 0; i < kPairs; ++i) {
    auto verifier = std::make_shared<SyntheticVerifier>(rng());
    const auto draft = make_noisy_draft(verifier, std::uniform_real_distribution<double>(0.0, 1.0)(rng), 6.0, rng());
    const PrefixState s{rng(), rng(), {}};
    const auto tree = build_tree(s, verifier->features(s), *draft,
                                 TreeParams{std::uniform_int_distribution<int>(1, 8)(rng), 4, 50});
    const auto argmax = pass_argmax(verifier->pass(s, tree));
    int previous = verify_tree(tree, argmax, AcceptancePolicy::strict()).accepted;
    for (int r = 1; r <= 16; ++r) {
      const int now = verify_tree(tree, argmax, AcceptancePolicy::relaxed(r)).accepted;
      if (now < previous) return {false, "pair " + std::to_string(i) + " decreased at r=" + std::to_string(r)};
      previous = now;
    }
  }
  return {true, std::to_string(kPairs) + " (prefix, tree) pairs non-decreasing over r=0..16"};
}

Verdict oracle_equivalence() {
  std::mt19937_64 rng(404);
  constexpr int kTrees = 1000;
  for (int i = 0; i < kTrees; ++i) {
    const auto tree = oracle::random_tree(rng, 50, 6, 24);
    std::vector<int> argmax;
    for (std::size_t j = 0; j <= tree.size(); ++j) argmax.push_back(std::uniform_int_distribution<int>(0, 23)(rng));
    TokenSeq argmax_tokens;
    for (int b : argmax) argmax_tokens.push_back(ActionToken{b});
    const auto policy = rng() % 3 == 0 ? AcceptancePolicy::strict() : random_relaxed(rng);
    const auto got = verify_tree(tree, argmax_tokens, policy);
    const auto want = oracle::exhaustive_tree(tree, argmax, policy);
    if (got.accepted != want.accepted || bins_of(got.emitted) != want.emitted) {
      return {false, "verify_tree differs on tree " + std::to_string(i)};
    }
  }
  constexpr int kBuilds = 1000;
  for (int i = 0; i < kBuilds; ++i) {
    auto verifier = std::make_shared<SyntheticVerifier>(rng(), 64);
    const auto draft = make_noisy_draft(verifier, 0.5, 4.0, rng());
    const TreeParams params{std::uniform_int_distribution<int>(1, 4)(rng), std::uniform_int_distribution<int>(1, 3)(rng),
                            std::uniform_int_distribution<int>(1, 20)(rng)};
    const PrefixState s{rng(), rng(), {}};
    const auto tree = build_tree(s, FeatureContext{}, *draft, params);
    std::map<std::vector<int>, double> got;
    for (std::size_t n = 0; n < tree.size(); ++n) {
      got.emplace(bins_of(tree.path_tokens(static_cast<int>(n))), tree.nodes[n].cum_score);
    }
    if (got != oracle::brute_force_tree(s, FeatureContext{}, *draft, params)) {
      return {false, "build_tree pruning differs on build " + std::to_string(i)};
    }
  }
  return {true, std::to_string(kTrees) + " trees match exhaustive paths, " + std::to_string(kBuilds) +
                    " builds match brute-force pruning"};
}

Verdict relaxation_gain() {
  RunConfig c;
  c.seed = 505;
  c.agreement_p = 0.5;
  c.noise_sigma = 6.0;
  c.tree = TreeParams{1, 4, 4};  // top-1 chain has a closed-form expectation
  c.relaxation_thresholds = {0, 9};
  c.episodes = 500;
  c.target_length = 70;
  c.threads = 4;
  const auto report = aggregate(run_batch(c), c);
  const double strict = report.policies[0].tokens_per_pass;
  const double relaxed = report.policies[1].tokens_per_pass;
  const double e0 = oracle::chain_tokens_per_pass(oracle::acceptance_probability(0.5, 6.0, 256, 0), 4);
  const double e9 = oracle::chain_tokens_per_pass(oracle::acceptance_probability(0.5, 6.0, 256, 9), 4);
  const double gain = relaxed / strict - 1.0;
  const bool ok = gain >= 0.25 && std::abs(strict - e0) <= 0.02 * e0 && std::abs(relaxed - e9) <= 0.02 * e9;
  return {ok, fmt("r=0 %.3f (exp %.3f), ", strict, e0) + fmt("r=9 %.3f (exp %.3f), ", relaxed, e9) +
                  fmt("gain %+.1f%%", 100.0 * gain)};
}

Verdict speedup() {
  RunConfig c;
  c.seed = 606;
  c.verify_latency_ms = 20.0;
  c.draft_latency_ms = 1.0;
  c.tree = TreeParams{8, 4, 50};
  c.target_length = 210;
  c.measure_episodes = 2;
  std::string detail;
  bool ok = true;
  for (const auto& policy : {AcceptancePolicy::strict(), AcceptancePolicy::relaxed(9)}) {
    const auto m = measure_speedup(c, policy);
    const double err = std::abs(m.measured - m.analytic) / m.analytic;
    ok = ok && m.reliable && err <= 0.10;
    detail += policy_label(policy) + fmt(": measured %.2fx analytic %.2fx (%.1f%%); ", m.measured, m.analytic, 100.0 * err);
  }
  return {ok, detail};
}

Verdict report_identities() {
  RunConfig c;
  c.seed = 707;
  c.episodes = 40;
  c.threads = 4;
  const auto report = aggregate(run_batch(c), c);
  for (const auto& p : report.policies) {
    double sum = 0.0;
    std::uint64_t weighted = 0;
    for (std::size_t k = 0; k < p.histogram.size(); ++k) {
      sum += p.proportions[k];
      weighted += k * p.histogram[k];
    }
    if (std::abs(sum - 1.0) > 1e-9) return {false, policy_label(p.policy) + " proportions do not sum to 1"};
    if (p.tokens_per_pass != static_cast<double>(weighted) / static_cast<double>(p.steps) + 1.0) {
      return {false, policy_label(p.policy) + " histogram mean + 1 != tokens_per_pass"};
    }
  }
  if (!report.identities_ok()) return {false, "identity flag unset"};
  for (auto format : {ReportFormat::kJson, ReportFormat::kCsv, ReportFormat::kTable}) {
    auto again_config = c;
    again_config.threads = 1;
    auto again = aggregate(run_batch(again_config), again_config);
    again.config.threads = c.threads;
    if (render(report, format) != render(again, format)) return {false, to_string(format) + " output not byte-stable"};
  }
  return {true, "proportions, histogram means and json/csv/table bytes stable"};
}

Verdict case_study_trace() {
  const auto& scenario = case_study("action1-style3");
  const auto relaxed = replay(scenario, AcceptancePolicy::relaxed(9)).outcomes.size();
  const auto strict = replay(scenario, AcceptancePolicy::strict()).outcomes.size();
  return {relaxed == 3 && strict == 5,
          fmt("r=9 %.0f iterations, r=0 %.0f iterations (want 3 vs 5)", static_cast<double>(relaxed),
              static_cast<double>(strict))};
}

}  // namespace

int main() {
  check("losslessness", losslessness);
  check("relaxed-soundness", soundness);
  check("step-monotonicity", monotonicity);
  check("oracle-equivalence", oracle_equivalence);
  check("relaxation-gain", relaxation_gain);
  check("speedup", speedup);
  check("report-identities", report_identities);
  check("case-study-trace", case_study_trace);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
