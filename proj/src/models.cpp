#include "specvla/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "specvla/hash.hpp"

namespace specvla {

Distribution Distribution::from_weights(std::vector<double> weights) {
  if (weights.empty()) throw ModelError("distribution over an empty vocabulary");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ModelError("distribution weights must be finite and >= 0");
    total += w;
  }
  if (total <= 0.0) throw ModelError("distribution weights sum to zero");
  Distribution d;
  std::size_t best = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] /= total;
    if (weights[i] > weights[best]) best = i;
  }
  d.scores_ = std::move(weights);
  d.argmax_ = ActionToken{static_cast<int>(best)};
  return d;
}

// ---------------------------------------------------------------------------
// Verifier / DraftModel defaults

std::vector<Distribution> Verifier::batch(const PrefixState& state, const DraftTree& tree) const {
  tree.validate();
  std::vector<Distribution> out;
  out.reserve(tree.size());
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto path = tree.path_tokens(static_cast<int>(i));
    out.push_back(next(state.extended(path)));
  }
  return out;
}

VerifyPass Verifier::pass(const PrefixState& state, const DraftTree& tree) const {
  return VerifyPass{next(state), batch(state, tree)};
}

FeatureContext Verifier::features(const PrefixState& state) const {
  FeatureContext ctx;
  ctx.rows.assign(state.emitted.size(), {});
  return ctx;
}

void DraftModel::check_k(int k) const {
  if (k < 1 || k > vocab_size()) {
    throw ModelError("draft top-k " + std::to_string(k) + " outside [1, " +
                     std::to_string(vocab_size()) + "]");
  }
}

std::vector<std::vector<Proposal>> DraftModel::propose_level(std::span<const PrefixState> states,
                                                             const FeatureContext& ctx, int k) const {
  std::vector<std::vector<Proposal>> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(propose(s, ctx, k));
  return out;
}

// ---------------------------------------------------------------------------
// SyntheticVerifier

SyntheticVerifier::SyntheticVerifier(std::uint64_t seed, int vocab_size, double sharpness,
                                     std::size_t feature_dim)
    : seed_(seed), vocab_size_(vocab_size), sharpness_(sharpness), feature_dim_(feature_dim) {
  if (vocab_size < 2) throw ModelError("verifier vocabulary needs at least 2 bins");
  if (!(sharpness > 0.0) || !std::isfinite(sharpness)) throw ModelError("sharpness must be positive");
}

Distribution SyntheticVerifier::distribution_for(std::uint64_t prefix_hash) const {
  std::vector<double> w(static_cast<std::size_t>(vocab_size_));
  for (int k = 0; k < vocab_size_; ++k) {
    const double u = hash::to_unit(hash::combine(prefix_hash, static_cast<std::uint64_t>(k)));
    w[static_cast<std::size_t>(k)] = std::exp(sharpness_ * u);
  }
  return Distribution::from_weights(std::move(w));
}

Distribution SyntheticVerifier::next(const PrefixState& state) const {
  return distribution_for(hash::prefix(seed_, state));
}

ActionToken SyntheticVerifier::argmax(const PrefixState& state) const {
  const std::uint64_t h = hash::prefix(seed_, state);
  std::vector<double> u(static_cast<std::size_t>(vocab_size_));
  double top = -1.0;
  for (int k = 0; k < vocab_size_; ++k) {
    u[static_cast<std::size_t>(k)] = hash::to_unit(hash::combine(h, static_cast<std::uint64_t>(k)));
    top = std::max(top, u[static_cast<std::size_t>(k)]);
  }
  // A clear winner survives exp and normalization; near-ties take the full
  // path so the tie-break matches next() exactly.
  int best = -1;
  int near = 0;
  for (int k = 0; k < vocab_size_; ++k) {
    if (top - u[static_cast<std::size_t>(k)] <= 1e-9) {
      ++near;
      if (best < 0) best = k;
    }
  }
  if (near > 1) return distribution_for(h).argmax();
  return ActionToken{best};
}

std::vector<Distribution> SyntheticVerifier::batch(const PrefixState& state,
                                                   const DraftTree& tree) const {
  tree.validate();
  const std::uint64_t base = hash::prefix(seed_, state);
  std::vector<std::uint64_t> node_hash(tree.size());
  std::vector<Distribution> out(tree.size());
  // validate() guarantees parents precede children
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& n = tree.nodes[i];
    const std::uint64_t parent = n.parent == kRootParent ? base : node_hash[static_cast<std::size_t>(n.parent)];
    node_hash[i] = hash::extend(parent, n.token);
  }
  for (std::size_t i = 0; i < tree.size(); ++i) out[i] = distribution_for(node_hash[i]);
  return out;
}

FeatureContext SyntheticVerifier::features(const PrefixState& state) const {
  FeatureContext ctx;
  ctx.rows.reserve(state.emitted.size());
  std::uint64_t h = hash::prefix_seed(seed_, state.prompt_id, state.observation_id);
  for (auto t : state.emitted) {
    h = hash::extend(h, t);
    std::vector<double> row(feature_dim_);
    for (std::size_t j = 0; j < feature_dim_; ++j) row[j] = hash::to_unit(hash::lane(h, j)) - 0.5;
    ctx.rows.push_back(std::move(row));
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// Noisy draft

DisplacementKernel::DisplacementKernel(double sigma, int max_magnitude) : sigma_(sigma) {
  if (!(sigma > 0.0)) throw ModelError("noise_sigma must be positive");
  if (max_magnitude < 1) throw ModelError("displacement kernel needs max_magnitude >= 1");
  pmf_.resize(static_cast<std::size_t>(max_magnitude));
  for (int m = 1; m <= max_magnitude; ++m) {
    const double md = m;
    pmf_[static_cast<std::size_t>(m - 1)] = std::exp(-(md * md - 1.0) / (2.0 * sigma * sigma));
  }
  const double total = std::accumulate(pmf_.begin(), pmf_.end(), 0.0);
  cdf_.resize(pmf_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf_.size(); ++i) {
    pmf_[i] /= total;
    acc += pmf_[i];
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;
}

double DisplacementKernel::probability(int magnitude) const {
  if (magnitude < 1 || magnitude > max_magnitude()) return 0.0;
  return pmf_[static_cast<std::size_t>(magnitude - 1)];
}

int DisplacementKernel::sample(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto idx = std::min<std::ptrdiff_t>(it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1);
  return static_cast<int>(idx) + 1;
}

namespace {

// Random lanes drawn per prefix.
enum Lane : std::uint64_t { kAgree = 0, kMagnitude = 1, kSign = 2, kSpread = 3 };

// Nearest-bin expansion around `center`: center, center-1, center+1, ...
std::vector<ActionToken> neighbors(ActionToken center, int vocab, int k) {
  std::vector<ActionToken> out;
  out.reserve(static_cast<std::size_t>(k));
  out.push_back(center);
  for (int d = 1; static_cast<int>(out.size()) < k && d < vocab; ++d) {
    if (center.bin - d >= 0) out.push_back(ActionToken{center.bin - d});
    if (static_cast<int>(out.size()) < k && center.bin + d < vocab) out.push_back(ActionToken{center.bin + d});
  }
  return out;
}

// Log-probabilities of a discretized Gaussian centered at `center`.
std::vector<Proposal> gaussian_proposals(ActionToken center, int vocab, int k, double spread) {
  const auto tokens = neighbors(center, vocab, k);
  const auto logit = [&](int bin) {
    const double d = bin - center.bin;
    return -(d * d) / (2.0 * spread * spread);
  };
  double z = 0.0;
  for (int b = 0; b < vocab; ++b) z += std::exp(logit(b));
  const double log_z = std::log(z);
  std::vector<Proposal> out;
  out.reserve(tokens.size());
  for (auto t : tokens) out.push_back(Proposal{t, logit(t.bin) - log_z});
  return out;
}

}  // namespace

NoisyDraft::NoisyDraft(std::shared_ptr<const Verifier> verifier, NoisyDraftParams params)
    : verifier_(std::move(verifier)),
      params_(params),
      kernel_(params.noise_sigma, verifier_ ? verifier_->vocab_size() - 1 : 1) {
  if (!verifier_) throw ModelError("noisy draft needs a verifier");
  if (!(params.agreement_p >= 0.0 && params.agreement_p <= 1.0)) {
    throw ModelError("agreement_p must lie in [0, 1]");
  }
}

ActionToken NoisyDraft::top1(const PrefixState& state) const {
  const ActionToken target = verifier_->argmax(state);
  const std::uint64_t h = hash::prefix(params_.seed, state);
  if (hash::to_unit(hash::lane(h, kAgree)) < params_.agreement_p) return target;

  const int vocab = vocab_size();
  const int magnitude = kernel_.sample(hash::to_unit(hash::lane(h, kMagnitude)));
  int sign = (hash::lane(h, kSign) & 1U) ? 1 : -1;
  int bin = target.bin + sign * magnitude;
  if (bin < 0 || bin >= vocab) {
    sign = -sign;
    bin = target.bin + sign * magnitude;
  }
  bin = std::clamp(bin, 0, vocab - 1);
  return ActionToken{bin};
}

std::vector<Proposal> NoisyDraft::propose(const PrefixState& state, const FeatureContext&, int k) const {
  check_k(k);
  const ActionToken center = top1(state);
  const std::uint64_t h = hash::prefix(params_.seed, state);
  // Per-prefix confidence, independent of the displacement noise: a sharp
  // prefix deepens the tree, a flat one widens it.
  const double spread = 0.4 + 1.6 * hash::to_unit(hash::lane(h, kSpread));
  return gaussian_proposals(center, vocab_size(), k, spread);
}

std::shared_ptr<NoisyDraft> make_noisy_draft(std::shared_ptr<const Verifier> verifier,
                                             double agreement_p, double noise_sigma,
                                             std::uint64_t seed) {
  return std::make_shared<NoisyDraft>(std::move(verifier),
                                      NoisyDraftParams{agreement_p, noise_sigma, seed});
}

// ---------------------------------------------------------------------------
// Scripted models

namespace {

int scripted_at(const std::vector<int>& script, std::size_t pos, int fill) {
  return pos < script.size() ? script[pos] : fill;
}

void check_script(const std::vector<int>& script, int fill, int vocab) {
  if (vocab < 2) throw ModelError("scripted vocabulary needs at least 2 bins");
  for (int t : script) {
    if (t < 0 || t >= vocab) throw ModelError("scripted token " + std::to_string(t) + " outside vocabulary");
  }
  if (fill < 0 || fill >= vocab) throw ModelError("scripted fill token outside vocabulary");
}

}  // namespace

ScriptedVerifier::ScriptedVerifier(int vocab_size, std::vector<int> argmax_by_position, int fill)
    : vocab_size_(vocab_size), script_(std::move(argmax_by_position)), fill_(fill) {
  check_script(script_, fill_, vocab_size_);
}

Distribution ScriptedVerifier::next(const PrefixState& state) const {
  const int target = scripted_at(script_, state.emitted.size(), fill_);
  std::vector<double> w(static_cast<std::size_t>(vocab_size_), 1.0);
  w[static_cast<std::size_t>(target)] = static_cast<double>(vocab_size_);
  return Distribution::from_weights(std::move(w));
}

ScriptedDraft::ScriptedDraft(int vocab_size, std::vector<int> top1_by_position, int fill)
    : vocab_size_(vocab_size), script_(std::move(top1_by_position)), fill_(fill) {
  check_script(script_, fill_, vocab_size_);
}

std::vector<Proposal> ScriptedDraft::propose(const PrefixState& state, const FeatureContext&, int k) const {
  check_k(k);
  const ActionToken center{scripted_at(script_, state.emitted.size(), fill_)};
  return gaussian_proposals(center, vocab_size_, k, 1.0);
}

// ---------------------------------------------------------------------------
// Latency decorators

TimedVerifier::TimedVerifier(std::shared_ptr<const Verifier> inner, std::chrono::nanoseconds latency)
    : inner_(std::move(inner)), latency_(latency) {
  if (!inner_) throw ModelError("timed verifier needs an inner verifier");
}

Distribution TimedVerifier::next(const PrefixState& state) const {
  std::this_thread::sleep_for(latency_);
  return inner_->next(state);
}

std::vector<Distribution> TimedVerifier::batch(const PrefixState& state, const DraftTree& tree) const {
  std::this_thread::sleep_for(latency_);
  return inner_->batch(state, tree);
}

VerifyPass TimedVerifier::pass(const PrefixState& state, const DraftTree& tree) const {
  std::this_thread::sleep_for(latency_);
  return inner_->pass(state, tree);
}

TimedDraft::TimedDraft(std::shared_ptr<const DraftModel> inner, std::chrono::nanoseconds latency)
    : inner_(std::move(inner)), latency_(latency) {
  if (!inner_) throw ModelError("timed draft needs an inner draft model");
}

std::vector<Proposal> TimedDraft::propose(const PrefixState& state, const FeatureContext& ctx, int k) const {
  std::this_thread::sleep_for(latency_);
  return inner_->propose(state, ctx, k);
}

std::vector<std::vector<Proposal>> TimedDraft::propose_level(std::span<const PrefixState> states,
                                                             const FeatureContext& ctx, int k) const {
  std::this_thread::sleep_for(latency_);
  return inner_->propose_level(states, ctx, k);
}

}  // namespace specvla
