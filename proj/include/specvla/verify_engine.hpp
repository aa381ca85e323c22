#pragma once

// Strict and distance-relaxed verification of draft trees and the full
// draft/verify decoding loop.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "specvla/draft_tree.hpp"
#include "specvla/models.hpp"

namespace specvla {

enum class AcceptMode { kStrict, kRelaxed };

/// Per-dimension override value meaning "use the policy-wide r".
inline constexpr int kInheritR = -1;

struct AcceptancePolicy {
  AcceptMode mode = AcceptMode::kStrict;
  int r = 0;
  std::optional<std::array<int, kActionDims>> per_dimension_r;

  static AcceptancePolicy strict() { return {}; }
  static AcceptancePolicy relaxed(int r, std::optional<std::array<int, kActionDims>> per_dim = std::nullopt) {
    return {AcceptMode::kRelaxed, r, per_dim};
  }

  /// 0 in strict mode; otherwise the dimension's override unless it is
  /// kInheritR, else r.
  int effective_r(std::size_t dimension) const;

  /// Throws ModelError for negative thresholds.
  void validate() const;

  friend bool operator==(const AcceptancePolicy&, const AcceptancePolicy&) = default;
};

/// Action dimension of an absolute emitted position.
constexpr std::size_t dimension_of(std::size_t position) { return position % kActionDims; }

bool accept_token(ActionToken draft, ActionToken verified, const AcceptancePolicy& policy,
                  std::size_t dimension);

struct PathVerdict {
  int accepted = 0;
  ActionToken next;  // correction, or bonus when the whole path was accepted
  bool bonus = false;

  friend bool operator==(const PathVerdict&, const PathVerdict&) = default;
};

/// `verified[j]` is the verifier argmax at path position j; the list carries
/// one extra entry for the position after the last path token.
/// `start_position` is the absolute position of path[0], used for the
/// per-dimension thresholds. Throws StructuralError if verified is too short.
PathVerdict verify_path(std::span<const ActionToken> path, std::span<const ActionToken> verified,
                        const AcceptancePolicy& policy, std::size_t start_position = 0);

struct VerifyOutcome {
  int accepted = 0;  // draft tokens only, may be 0
  TokenSeq emitted;  // accepted drafts followed by one verifier token
  bool correction_used = false;
  bool bonus_used = false;
  int chosen_path = 0;
  std::size_t start_position = 0;
  TokenSeq reference;  // verifier argmax at each emitted position

  friend bool operator==(const VerifyOutcome&, const VerifyOutcome&) = default;
};

/// `argmax` holds the pre-root argmax followed by one entry per node.
/// Chooses the path with the most accepted drafts; ties go to the higher
/// leaf score, then the lower path index.
VerifyOutcome verify_tree(const DraftTree& tree, std::span<const ActionToken> argmax,
                          const AcceptancePolicy& policy, std::size_t start_position = 0);

/// Argmax list in verify_tree layout from one verification pass.
std::vector<ActionToken> pass_argmax(const VerifyPass& pass);

struct EpisodeTrace {
  TokenSeq tokens;  // exactly target_len new tokens
  std::vector<VerifyOutcome> outcomes;
};

/// Draft, verify, append until target_len new tokens exist, then truncate.
/// Throws std::invalid_argument for target_len == 0.
EpisodeTrace decode_episode(const PrefixState& state, const Verifier& verifier, const DraftModel& draft,
                            const TreeParams& params, const AcceptancePolicy& policy,
                            std::size_t target_len);

/// Greedy baseline: one verifier query per token.
TokenSeq ar_decode(const PrefixState& state, const Verifier& verifier, std::size_t target_len);

}  // namespace specvla
