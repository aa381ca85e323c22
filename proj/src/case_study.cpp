#include "specvla/case_study.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace specvla {

namespace {

TreeParams chain(int depth) { return TreeParams{1, depth, 50}; }

}  // namespace

const std::vector<CaseStudy>& case_studies() {
  static const std::vector<CaseStudy> all{
      {
          "action1",
          "recorded Action 1 argmaxes with the recorded relaxed-run draft tokens",
          257,
          {ActionToken{137}},
          {137, 128, 128, 109, 98, 82, 256},
          {137, 119, 121, 140, 98, 77, 256},
          chain(3),
          6,
      },
      {
          "action3",
          "recorded Action 3 argmaxes with constructed drafts",
          257,
          {ActionToken{191}},
          {191, 121, 123, 109, 79, 69, 256},
          {191, 125, 123, 115, 83, 50, 256},
          chain(3),
          6,
      },
      {
          "action1-style3",
          "recorded Action 1 argmaxes with drafts shaped like the Action 3 run",
          257,
          {ActionToken{137}},
          {137, 128, 128, 109, 98, 82, 256},
          {137, 133, 128, 115, 103, 60, 256},
          chain(3),
          6,
      },
  };
  return all;
}

const CaseStudy& case_study(std::string_view name) {
  for (const auto& c : case_studies()) {
    if (c.name == name) return c;
  }
  throw std::invalid_argument("unknown case study '" + std::string(name) + "'");
}

EpisodeTrace replay(const CaseStudy& scenario, const AcceptancePolicy& policy) {
  const ScriptedVerifier verifier(scenario.vocab_size, scenario.verifier_script);
  const ScriptedDraft draft(scenario.vocab_size, scenario.draft_script);
  PrefixState start;
  start.emitted = scenario.context;
  return decode_episode(start, verifier, draft, scenario.tree, policy, scenario.target_len);
}

std::string format_trace(const PrefixState& start, const EpisodeTrace& trace) {
  std::ostringstream out;
  TokenSeq context = start.emitted;
  std::size_t produced = 0;
  for (std::size_t i = 0; i < trace.outcomes.size(); ++i) {
    const auto& o = trace.outcomes[i];
    out << "iter " << (i + 1) << ": [";
    for (std::size_t j = 0; j < context.size(); ++j) out << (j ? " " : "") << context[j].bin;
    out << "]";
    // the final pass may overshoot the target and is shown truncated
    const std::size_t keep = std::min(o.emitted.size(), trace.tokens.size() - produced);
    const std::size_t drafts = std::min(static_cast<std::size_t>(o.accepted), keep);
    if (drafts > 0) {
      out << " + draft {";
      for (std::size_t j = 0; j < drafts; ++j) out << (j ? " " : "") << o.emitted[j].bin;
      out << "}";
    }
    if (keep > drafts) out << " + verify <" << o.emitted[drafts].bin << ">";
    out << '\n';
    context.insert(context.end(), o.emitted.begin(), o.emitted.begin() + static_cast<std::ptrdiff_t>(keep));
    produced += keep;
  }
  out << "final: [";
  for (std::size_t j = 0; j < context.size(); ++j) out << (j ? " " : "") << context[j].bin;
  out << "] in " << trace.outcomes.size() << " iterations\n";
  return out.str();
}

}  // namespace specvla
