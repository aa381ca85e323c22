#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "specvla/action_space.hpp"

namespace specvla {

/// Raised for malformed trees, mismatched sizes and other broken structure.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised for model parameters outside their preconditions.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Decoding context: prompt, observation, and the tokens emitted so far.
struct PrefixState {
  std::uint64_t prompt_id = 0;
  std::uint64_t observation_id = 0;
  TokenSeq emitted;

  PrefixState extended(std::span<const ActionToken> more) const {
    PrefixState out = *this;
    out.emitted.insert(out.emitted.end(), more.begin(), more.end());
    return out;
  }

  friend bool operator==(const PrefixState&, const PrefixState&) = default;
};

/// Opaque per-position feature rows handed from the verifier to the draft
/// model. One row per emitted token.
struct FeatureContext {
  std::vector<std::vector<double>> rows;

  std::size_t positions() const { return rows.size(); }
};

/// Normalized scores over the vocabulary plus their argmax (lowest bin wins ties).
class Distribution {
 public:
  Distribution() = default;

  /// Normalizes non-negative weights. Throws ModelError if they are empty,
  /// negative, non-finite, or sum to zero.
  static Distribution from_weights(std::vector<double> weights);

  const std::vector<double>& scores() const { return scores_; }
  ActionToken argmax() const { return argmax_; }
  int vocab_size() const { return static_cast<int>(scores_.size()); }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::vector<double> scores_;
  ActionToken argmax_{};
};

/// One draft candidate with its log-probability under the draft model.
struct Proposal {
  ActionToken token;
  double log_score = 0.0;

  friend bool operator==(const Proposal&, const Proposal&) = default;
};

}  // namespace specvla
