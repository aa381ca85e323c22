#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "specvla/case_study.hpp"
#include "specvla/verify_engine.hpp"

using namespace specvla;

namespace {

TokenSeq toks(const std::vector<int>& bins) {
  TokenSeq out;
  for (int b : bins) out.push_back(ActionToken{b});
  return out;
}

std::vector<int> bins_of(const TokenSeq& t) {
  std::vector<int> out;
  for (const auto& x : t) out.push_back(x.bin);
  return out;
}

AcceptancePolicy random_policy(std::mt19937_64& rng) {
  const int r = std::uniform_int_distribution<int>(0, 12)(rng);
  if (r == 0 && rng() % 2 == 0) return AcceptancePolicy::strict();
  if (rng() % 3 == 0) {
    std::array<int, kActionDims> per{};
    for (auto& v : per) v = std::uniform_int_distribution<int>(-1, 12)(rng);
    return AcceptancePolicy::relaxed(r, per);
  }
  return AcceptancePolicy::relaxed(r);
}

}  // namespace

TEST(AcceptToken, DistanceBoundaryIsInclusive) {
  const auto r9 = AcceptancePolicy::relaxed(9);
  EXPECT_TRUE(accept_token(ActionToken{128}, ActionToken{137}, r9, 0));
  EXPECT_FALSE(accept_token(ActionToken{127}, ActionToken{137}, r9, 0));
  EXPECT_FALSE(accept_token(ActionToken{109}, ActionToken{98}, AcceptancePolicy::relaxed(5), 3));
  EXPECT_FALSE(accept_token(ActionToken{128}, ActionToken{137}, AcceptancePolicy::strict(), 0));
  EXPECT_TRUE(accept_token(ActionToken{137}, ActionToken{137}, AcceptancePolicy::strict(), 0));
}

TEST(AcceptancePolicy, PerDimensionOverrides) {
  const auto p = AcceptancePolicy::relaxed(5, std::array<int, kActionDims>{0, kInheritR, 2, 9, 9, 9, 0});
  EXPECT_EQ(p.effective_r(0), 0);
  EXPECT_EQ(p.effective_r(1), 5);
  EXPECT_EQ(p.effective_r(2), 2);
  EXPECT_EQ(AcceptancePolicy::strict().effective_r(4), 0);
  EXPECT_FALSE(accept_token(ActionToken{10}, ActionToken{11}, p, 0));
  EXPECT_TRUE(accept_token(ActionToken{10}, ActionToken{15}, p, 1));
  EXPECT_THROW(AcceptancePolicy::relaxed(-1).validate(), ModelError);
  EXPECT_EQ(dimension_of(15), 1u);
}

TEST(VerifyPath, CaseStudyExamples) {
  const auto path = toks({128, 128, 109});
  const auto verified = toks({137, 128, 109, 98});
  const auto relaxed = verify_path(path, verified, AcceptancePolicy::relaxed(9));
  EXPECT_EQ(relaxed.accepted, 3);
  EXPECT_EQ(relaxed.next.bin, 98);
  EXPECT_TRUE(relaxed.bonus);
  const auto strict = verify_path(path, verified, AcceptancePolicy::strict());
  EXPECT_EQ(strict.accepted, 0);
  EXPECT_EQ(strict.next.bin, 137);
  EXPECT_FALSE(strict.bonus);
}

TEST(VerifyPath, ShortVerifiedListIsStructuralError) {
  EXPECT_THROW(verify_path(toks({1, 2}), toks({1, 2}), AcceptancePolicy::strict()), StructuralError);
  const auto empty = verify_path(TokenSeq{}, toks({7}), AcceptancePolicy::strict());
  EXPECT_EQ(empty.accepted, 0);
  EXPECT_EQ(empty.next.bin, 7);
}

TEST(VerifyPath, MatchesLinearScanUnderFuzz) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const int len = std::uniform_int_distribution<int>(0, 8)(rng);
    std::vector<int> path, verified;
    for (int j = 0; j <= len; ++j) {
      const int v = std::uniform_int_distribution<int>(0, 255)(rng);
      verified.push_back(v);
      if (j < len) path.push_back(std::clamp(v + std::uniform_int_distribution<int>(-12, 12)(rng), 0, 255));
    }
    const auto policy = random_policy(rng);
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, 20)(rng);
    const auto got = verify_path(toks(path), toks(verified), policy, start);
    const auto want = oracle::linear_scan(path, verified, policy, start);
    ASSERT_EQ(got.accepted, want.accepted);
    ASSERT_EQ(got.next.bin, want.next_bin);
    ASSERT_EQ(got.bonus, want.bonus);
  }
}

TEST(VerifyTree, EmptyTreeEmitsTheVerifierToken) {
  const auto out = verify_tree(DraftTree{}, toks({42}), AcceptancePolicy::relaxed(9));
  EXPECT_EQ(out.accepted, 0);
  EXPECT_EQ(bins_of(out.emitted), (std::vector<int>{42}));
}

TEST(VerifyTree, PicksTheLongestAcceptedPath) {
  DraftTree t;
  t.nodes = {
      {ActionToken{10}, kRootParent, 1, -0.1},  // wrong first token
      {ActionToken{20}, kRootParent, 1, -0.2},
      {ActionToken{30}, 1, 2, -0.3},
  };
  // argmax: pre-root 20, after node0 anything, after node1 30, after node2 40
  const auto out = verify_tree(t, toks({20, 0, 30, 40}), AcceptancePolicy::strict());
  EXPECT_EQ(out.accepted, 2);
  EXPECT_EQ(bins_of(out.emitted), (std::vector<int>{20, 30, 40}));
  EXPECT_TRUE(out.bonus_used);
  EXPECT_EQ(bins_of(out.reference), (std::vector<int>{20, 30, 40}));
}

TEST(VerifyTree, SizeMismatchIsStructuralError) {
  DraftTree t;
  t.nodes.push_back({ActionToken{1}, kRootParent, 1, -0.1});
  EXPECT_THROW(verify_tree(t, toks({1}), AcceptancePolicy::strict()), StructuralError);
  EXPECT_THROW(verify_tree(t, toks({1, 2, 3}), AcceptancePolicy::strict()), StructuralError);
}

TEST(VerifyTree, MatchesExhaustiveOracleOnRandomTrees) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 2000; ++i) {
    const auto tree = oracle::random_tree(rng, 50, 6, 32);
    std::vector<int> argmax;
    for (std::size_t j = 0; j <= tree.size(); ++j) argmax.push_back(std::uniform_int_distribution<int>(0, 31)(rng));
    const auto policy = random_policy(rng);
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, 13)(rng);
    const auto got = verify_tree(tree, toks(argmax), policy, start);
    const auto want = oracle::exhaustive_tree(tree, argmax, policy, start);
    ASSERT_EQ(got.accepted, want.accepted) << "tree " << i;
    ASSERT_EQ(bins_of(got.emitted), want.emitted) << "tree " << i;
    ASSERT_EQ(got.bonus_used, want.bonus);
    ASSERT_EQ(got.correction_used, !want.bonus);
  }
}

TEST(VerifyTree, AcceptedLengthNonDecreasingInR) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto tree = oracle::random_tree(rng, 50, 5, 64);
    std::vector<int> argmax;
    for (std::size_t j = 0; j <= tree.size(); ++j) argmax.push_back(std::uniform_int_distribution<int>(0, 63)(rng));
    int previous = verify_tree(tree, toks(argmax), AcceptancePolicy::strict()).accepted;
    for (int r = 1; r <= 12; ++r) {
      const int now = verify_tree(tree, toks(argmax), AcceptancePolicy::relaxed(r)).accepted;
      ASSERT_GE(now, previous);
      previous = now;
    }
  }
}

TEST(DecodeEpisode, StrictIsLosslessAgainstGreedy) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 60; ++i) {
    auto verifier = std::make_shared<SyntheticVerifier>(rng());
    const auto draft = make_noisy_draft(verifier, std::uniform_real_distribution<double>(0.0, 1.0)(rng), 4.0, rng());
    const TreeParams params{std::uniform_int_distribution<int>(1, 8)(rng), std::uniform_int_distribution<int>(1, 5)(rng),
                            std::uniform_int_distribution<int>(1, 50)(rng)};
    const PrefixState s{rng(), rng(), {}};
    const std::size_t len = std::uniform_int_distribution<std::size_t>(1, 50)(rng);
    const auto trace = decode_episode(s, *verifier, *draft, params, AcceptancePolicy::strict(), len);
    ASSERT_EQ(trace.tokens, ar_decode(s, *verifier, len)) << "config " << i;
  }
}

TEST(DecodeEpisode, RelaxedTokensStayWithinROfTheirOwnArgmax) {
  auto verifier = std::make_shared<SyntheticVerifier>(5);
  const auto draft = make_noisy_draft(verifier, 0.5, 6.0, 5);
  const auto policy = AcceptancePolicy::relaxed(5, std::array<int, kActionDims>{0, 1, 2, kInheritR, 9, 9, 0});
  const PrefixState s{1, 2, {}};
  const auto trace = decode_episode(s, *verifier, *draft, TreeParams{}, policy, 140);
  PrefixState cur = s;
  for (const auto& out : trace.outcomes) {
    for (std::size_t j = 0; j < out.emitted.size(); ++j) {
      const auto argmax = verifier->next(cur).argmax();
      const std::size_t dim = dimension_of(cur.emitted.size());
      if (static_cast<int>(j) < out.accepted) {
        ASSERT_LE(bin_distance(out.emitted[j], argmax), policy.effective_r(dim));
      } else {
        ASSERT_EQ(out.emitted[j], argmax);
      }
      cur.emitted.push_back(out.emitted[j]);
    }
  }
}

TEST(DecodeEpisode, PerfectDraftEmitsDepthPlusOnePerPass) {
  auto verifier = std::make_shared<SyntheticVerifier>(6);
  const auto draft = make_noisy_draft(verifier, 1.0, 6.0, 1);
  const auto trace = decode_episode(PrefixState{}, *verifier, *draft, TreeParams{2, 4, 50}, AcceptancePolicy::strict(), 50);
  ASSERT_EQ(trace.outcomes.size(), 10u);
  for (const auto& out : trace.outcomes) {
    EXPECT_EQ(out.accepted, 4);
    EXPECT_TRUE(out.bonus_used);
  }
}

TEST(DecodeEpisode, ChainTokensPerPassMatchesClosedForm) {
  // independent per-position acceptance along a top-1 chain
  for (int r : {0, 9}) {
    const double q = oracle::acceptance_probability(0.5, 6.0, 256, r);
    const double expected = oracle::chain_tokens_per_pass(q, 4);
    std::uint64_t steps = 0;
    std::uint64_t emitted = 0;
    for (std::uint64_t e = 0; e < 30; ++e) {
      auto verifier = std::make_shared<SyntheticVerifier>(1000 + e);
      const auto draft = make_noisy_draft(verifier, 0.5, 6.0, 2000 + e);
      const auto policy = r == 0 ? AcceptancePolicy::strict() : AcceptancePolicy::relaxed(r);
      const auto trace = decode_episode(PrefixState{e, e, {}}, *verifier, *draft, TreeParams{1, 4, 4}, policy, 700);
      for (const auto& out : trace.outcomes) {
        ++steps;
        emitted += out.emitted.size();
      }
    }
    const double measured = static_cast<double>(emitted) / static_cast<double>(steps);
    EXPECT_NEAR(measured, expected, 0.02 * expected) << "r=" << r;
  }
}

TEST(DecodeEpisode, ZeroLengthRejected) {
  auto verifier = std::make_shared<SyntheticVerifier>(1);
  const auto draft = make_noisy_draft(verifier, 0.5, 6.0);
  EXPECT_THROW(decode_episode(PrefixState{}, *verifier, *draft, TreeParams{}, AcceptancePolicy::strict(), 0),
               std::invalid_argument);
  EXPECT_THROW(ar_decode(PrefixState{}, *verifier, 0), std::invalid_argument);
}

TEST(ArDecode, FollowsScriptedArgmax) {
  const ScriptedVerifier v(257, {137, 128, 128, 109, 98, 82, 256});
  EXPECT_EQ(bins_of(ar_decode(PrefixState{}, v, 7)), (std::vector<int>{137, 128, 128, 109, 98, 82, 256}));
  PrefixState after_one{0, 0, toks({137})};
  EXPECT_EQ(bins_of(ar_decode(after_one, v, 3)), (std::vector<int>{128, 128, 109}));
}

TEST(CaseStudy, RelaxationNeedsFewerIterations) {
  const struct {
    const char* name;
    std::size_t relaxed;
    std::size_t strict;
  } expected[] = {{"action1", 2, 5}, {"action3", 3, 5}, {"action1-style3", 3, 5}};
  for (const auto& e : expected) {
    const auto& scenario = case_study(e.name);
    EXPECT_EQ(replay(scenario, AcceptancePolicy::relaxed(9)).outcomes.size(), e.relaxed) << e.name;
    EXPECT_EQ(replay(scenario, AcceptancePolicy::strict()).outcomes.size(), e.strict) << e.name;
  }
  const auto trace = replay(case_study("action1"), AcceptancePolicy::relaxed(9));
  EXPECT_EQ(bins_of(trace.tokens), (std::vector<int>{119, 121, 109, 98, 77, 256}));
  const auto strict = replay(case_study("action1"), AcceptancePolicy::strict());
  EXPECT_EQ(bins_of(strict.tokens), (std::vector<int>{128, 128, 109, 98, 82, 256}));
  EXPECT_THROW(case_study("nope"), std::invalid_argument);
}

TEST(CaseStudy, TraceFormatting) {
  const auto& scenario = case_study("action1");
  PrefixState start;
  start.emitted = scenario.context;
  const auto text = format_trace(start, replay(scenario, AcceptancePolicy::relaxed(9)));
  EXPECT_NE(text.find("iter 1: [137] + draft {119 121} + verify <109>"), std::string::npos) << text;
  EXPECT_NE(text.find("iter 2: [137 119 121 109] + draft {98 77 256}\nfinal: [137 119 121 109 98 77 256] in 2 iterations"), std::string::npos) << text;
}
