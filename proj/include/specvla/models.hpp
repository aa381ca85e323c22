#pragma once

// Verifier and draft model contracts, plus deterministic synthetic and
// scripted implementations.

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "specvla/draft_tree.hpp"
#include "specvla/types.hpp"

namespace specvla {

/// Distributions from one verification pass: the position right after the
/// prefix, then one per tree node in node order.
struct VerifyPass {
  Distribution root;
  std::vector<Distribution> nodes;
};

class Verifier {
 public:
  virtual ~Verifier() = default;

  virtual int vocab_size() const = 0;

  /// Next-token distribution after `state`. Must be deterministic.
  virtual Distribution next(const PrefixState& state) const = 0;

  /// next(state).argmax(); overridable when the argmax is cheaper alone.
  virtual ActionToken argmax(const PrefixState& state) const { return next(state).argmax(); }

  /// Per-node distributions; entry i equals next(state ++ path_tokens(i)).
  /// Throws StructuralError for a malformed tree.
  virtual std::vector<Distribution> batch(const PrefixState& state, const DraftTree& tree) const;

  /// One verification pass over the prefix and the whole tree.
  virtual VerifyPass pass(const PrefixState& state, const DraftTree& tree) const;

  /// Feature rows handed to the draft model, one per emitted token.
  virtual FeatureContext features(const PrefixState& state) const;
};

class DraftModel {
 public:
  virtual ~DraftModel() = default;

  virtual int vocab_size() const = 0;

  /// k distinct tokens with non-increasing log-scores. Throws ModelError
  /// unless 1 <= k <= vocab_size().
  virtual std::vector<Proposal> propose(const PrefixState& state, const FeatureContext& ctx,
                                        int k) const = 0;

  /// Proposals for a whole tree level; one draft forward in cost terms.
  virtual std::vector<std::vector<Proposal>> propose_level(std::span<const PrefixState> states,
                                                           const FeatureContext& ctx, int k) const;

 protected:
  void check_k(int k) const;
};

/// Seeded-hash tabular verifier: scores for each bin come from a hash of
/// (seed, prefix) passed through exp(sharpness * u) and normalized.
class SyntheticVerifier final : public Verifier {
 public:
  explicit SyntheticVerifier(std::uint64_t seed, int vocab_size = kDefaultVocabSize,
                             double sharpness = 4.0, std::size_t feature_dim = 4);

  int vocab_size() const override { return vocab_size_; }
  std::uint64_t seed() const { return seed_; }

  Distribution next(const PrefixState& state) const override;

  /// Skips normalization; same token as next(state).argmax().
  ActionToken argmax(const PrefixState& state) const override;

  /// Hashes each node incrementally from its parent rather than re-walking
  /// the path.
  std::vector<Distribution> batch(const PrefixState& state, const DraftTree& tree) const override;

  FeatureContext features(const PrefixState& state) const override;

 private:
  Distribution distribution_for(std::uint64_t prefix_hash) const;

  std::uint64_t seed_;
  int vocab_size_;
  double sharpness_;
  std::size_t feature_dim_;
};

/// Discrete displacement magnitude kernel on m = 1..max_magnitude with
/// weight exp(-(m^2 - 1) / (2 sigma^2)).
class DisplacementKernel {
 public:
  DisplacementKernel(double sigma, int max_magnitude);

  double sigma() const { return sigma_; }
  int max_magnitude() const { return static_cast<int>(cdf_.size()); }
  double probability(int magnitude) const;

  /// Inverse-CDF sample from a uniform in [0, 1).
  int sample(double u) const;

 private:
  double sigma_;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
};

struct NoisyDraftParams {
  double agreement_p = 0.5;
  double noise_sigma = 6.0;
  std::uint64_t seed = 0;
};

/// Draft whose top-1 equals the verifier argmax with probability agreement_p
/// and is otherwise displaced by at least one bin. When the displaced bin
/// falls off the vocabulary the displacement is mirrored, then clamped, so a
/// disagreeing draft never lands on the argmax. All randomness is a pure
/// function of (seed, prefix). Remaining top-k candidates are the nearest
/// bins to the top-1 token.
class NoisyDraft final : public DraftModel {
 public:
  NoisyDraft(std::shared_ptr<const Verifier> verifier, NoisyDraftParams params);

  int vocab_size() const override { return verifier_->vocab_size(); }
  const NoisyDraftParams& params() const { return params_; }

  std::vector<Proposal> propose(const PrefixState& state, const FeatureContext& ctx,
                                int k) const override;

  /// Top-1 token alone; the same value propose() puts first.
  ActionToken top1(const PrefixState& state) const;

 private:
  std::shared_ptr<const Verifier> verifier_;
  NoisyDraftParams params_;
  DisplacementKernel kernel_;
};

/// Throws ModelError for agreement_p outside [0, 1] or non-positive sigma.
std::shared_ptr<NoisyDraft> make_noisy_draft(std::shared_ptr<const Verifier> verifier,
                                             double agreement_p, double noise_sigma,
                                             std::uint64_t seed = 0);

/// Verifier whose argmax depends only on the absolute position of the next
/// token, for replaying recorded traces. Positions past the script yield
/// `fill`.
class ScriptedVerifier final : public Verifier {
 public:
  ScriptedVerifier(int vocab_size, std::vector<int> argmax_by_position, int fill = 0);

  int vocab_size() const override { return vocab_size_; }
  Distribution next(const PrefixState& state) const override;

 private:
  int vocab_size_;
  std::vector<int> script_;
  int fill_;
};

/// Draft whose top-1 depends only on the absolute position being drafted.
class ScriptedDraft final : public DraftModel {
 public:
  ScriptedDraft(int vocab_size, std::vector<int> top1_by_position, int fill = 0);

  int vocab_size() const override { return vocab_size_; }
  std::vector<Proposal> propose(const PrefixState& state, const FeatureContext& ctx,
                                int k) const override;

 private:
  int vocab_size_;
  std::vector<int> script_;
  int fill_;
};

/// Adds a fixed sleep to every next() and every pass() of the wrapped verifier.
class TimedVerifier final : public Verifier {
 public:
  TimedVerifier(std::shared_ptr<const Verifier> inner, std::chrono::nanoseconds latency);

  int vocab_size() const override { return inner_->vocab_size(); }
  Distribution next(const PrefixState& state) const override;
  std::vector<Distribution> batch(const PrefixState& state, const DraftTree& tree) const override;
  VerifyPass pass(const PrefixState& state, const DraftTree& tree) const override;
  FeatureContext features(const PrefixState& state) const override { return inner_->features(state); }

 private:
  std::shared_ptr<const Verifier> inner_;
  std::chrono::nanoseconds latency_;
};

/// Adds a fixed sleep to every propose() and every propose_level().
class TimedDraft final : public DraftModel {
 public:
  TimedDraft(std::shared_ptr<const DraftModel> inner, std::chrono::nanoseconds latency);

  int vocab_size() const override { return inner_->vocab_size(); }
  std::vector<Proposal> propose(const PrefixState& state, const FeatureContext& ctx,
                                int k) const override;
  std::vector<std::vector<Proposal>> propose_level(std::span<const PrefixState> states,
                                                   const FeatureContext& ctx, int k) const override;

 private:
  std::shared_ptr<const DraftModel> inner_;
  std::chrono::nanoseconds latency_;
};

}  // namespace specvla
