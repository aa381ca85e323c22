#include "specvla/verify_engine.hpp"

#include <stdexcept>
#include <string>

namespace specvla {

int AcceptancePolicy::effective_r(std::size_t dimension) const {
  if (mode == AcceptMode::kStrict) return 0;
  if (per_dimension_r) {
    const int over = (*per_dimension_r)[dimension % kActionDims];
    if (over != kInheritR) return over;
  }
  return r;
}

void AcceptancePolicy::validate() const {
  if (r < 0) throw ModelError("relaxation threshold must be >= 0");
  if (per_dimension_r) {
    for (int v : *per_dimension_r) {
      if (v < 0 && v != kInheritR) throw ModelError("per-dimension relaxation threshold must be >= 0 or -1");
    }
  }
}

bool accept_token(ActionToken draft, ActionToken verified, const AcceptancePolicy& policy,
                  std::size_t dimension) {
  if (policy.mode == AcceptMode::kStrict) return draft == verified;
  return bin_distance(draft, verified) <= policy.effective_r(dimension);
}

PathVerdict verify_path(std::span<const ActionToken> path, std::span<const ActionToken> verified,
                        const AcceptancePolicy& policy, std::size_t start_position) {
  if (verified.size() < path.size() + 1) {
    throw StructuralError("verify_path needs " + std::to_string(path.size() + 1) + " verified tokens, got " +
                          std::to_string(verified.size()));
  }
  for (std::size_t j = 0; j < path.size(); ++j) {
    if (!accept_token(path[j], verified[j], policy, dimension_of(start_position + j))) {
      return PathVerdict{static_cast<int>(j), verified[j], false};
    }
  }
  return PathVerdict{static_cast<int>(path.size()), verified[path.size()], true};
}

VerifyOutcome verify_tree(const DraftTree& tree, std::span<const ActionToken> argmax,
                          const AcceptancePolicy& policy, std::size_t start_position) {
  if (argmax.size() != tree.size() + 1) {
    throw StructuralError("tree has " + std::to_string(tree.size()) + " nodes but " +
                          std::to_string(argmax.size()) + " verified tokens were supplied");
  }
  auto paths = enumerate_paths(tree);
  if (paths.empty()) paths.emplace_back();

  int best = -1;
  PathVerdict best_verdict;
  TokenSeq verified;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    verified.clear();
    verified.push_back(argmax[0]);
    for (int id : paths[p].nodes) verified.push_back(argmax[static_cast<std::size_t>(id) + 1]);
    const auto verdict = verify_path(paths[p].tokens, verified, policy, start_position);
    // paths arrive sorted by leaf score, so strict > keeps the earlier path on ties
    if (best < 0 || verdict.accepted > best_verdict.accepted) {
      best = static_cast<int>(p);
      best_verdict = verdict;
    }
  }

  const auto& path = paths[static_cast<std::size_t>(best)];
  VerifyOutcome out;
  out.accepted = best_verdict.accepted;
  out.chosen_path = best;
  out.start_position = start_position;
  out.bonus_used = best_verdict.bonus;
  out.correction_used = !best_verdict.bonus;
  for (int j = 0; j < best_verdict.accepted; ++j) {
    out.emitted.push_back(path.tokens[static_cast<std::size_t>(j)]);
    const std::size_t slot = j == 0 ? 0 : static_cast<std::size_t>(path.nodes[static_cast<std::size_t>(j - 1)]) + 1;
    out.reference.push_back(argmax[slot]);
  }
  out.emitted.push_back(best_verdict.next);
  out.reference.push_back(best_verdict.next);
  return out;
}

std::vector<ActionToken> pass_argmax(const VerifyPass& pass) {
  std::vector<ActionToken> out;
  out.reserve(pass.nodes.size() + 1);
  out.push_back(pass.root.argmax());
  for (const auto& d : pass.nodes) out.push_back(d.argmax());
  return out;
}

EpisodeTrace decode_episode(const PrefixState& state, const Verifier& verifier, const DraftModel& draft,
                            const TreeParams& params, const AcceptancePolicy& policy,
                            std::size_t target_len) {
  if (target_len == 0) throw std::invalid_argument("target length must be >= 1");
  params.validate();
  policy.validate();

  EpisodeTrace trace;
  PrefixState cur = state;
  while (trace.tokens.size() < target_len) {
    const FeatureContext ctx = verifier.features(cur);
    const DraftTree tree = build_tree(cur, ctx, draft, params);
    const VerifyPass pass = verifier.pass(cur, tree);
    if (pass.nodes.size() != tree.size()) throw StructuralError("verifier pass size does not match tree");
    const auto argmax = pass_argmax(pass);
    auto outcome = verify_tree(tree, argmax, policy, cur.emitted.size());
    trace.tokens.insert(trace.tokens.end(), outcome.emitted.begin(), outcome.emitted.end());
    cur.emitted.insert(cur.emitted.end(), outcome.emitted.begin(), outcome.emitted.end());
    trace.outcomes.push_back(std::move(outcome));
  }
  trace.tokens.resize(target_len);
  return trace;
}

TokenSeq ar_decode(const PrefixState& state, const Verifier& verifier, std::size_t target_len) {
  if (target_len == 0) throw std::invalid_argument("target length must be >= 1");
  TokenSeq out;
  out.reserve(target_len);
  PrefixState cur = state;
  while (out.size() < target_len) {
    const ActionToken t = verifier.next(cur).argmax();
    out.push_back(t);
    cur.emitted.push_back(t);
  }
  return out;
}

}  // namespace specvla
