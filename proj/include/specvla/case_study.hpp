#pragma once

// Scripted replays of recorded action traces, and a plain-text trace printer.

#include <string>
#include <string_view>
#include <vector>

#include "specvla/verify_engine.hpp"

namespace specvla {

/// A scripted scenario: position-indexed verifier argmaxes and draft top-1
/// tokens over a 257-token vocabulary (the recorded traces use value 256).
struct CaseStudy {
  std::string name;
  std::string description;
  int vocab_size = 257;
  TokenSeq context;
  std::vector<int> verifier_script;  // argmax by absolute position
  std::vector<int> draft_script;     // draft top-1 by absolute position
  TreeParams tree;
  std::size_t target_len = 0;  // new tokens after the context
};

const std::vector<CaseStudy>& case_studies();

/// Throws std::invalid_argument for an unknown name.
const CaseStudy& case_study(std::string_view name);

EpisodeTrace replay(const CaseStudy& scenario, const AcceptancePolicy& policy);

/// One line per verification pass:
///   iter 2: [137 119 121 109] + draft {98 77} + verify <256>
/// Square brackets hold the context so far, braces the accepted drafts,
/// angle brackets the verifier token.
std::string format_trace(const PrefixState& start, const EpisodeTrace& trace);

}  // namespace specvla
