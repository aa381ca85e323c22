#pragma once

// Discretized action vocabulary: bins, 7-token action chunks, and the
// bin-distance metric used by relaxed verification.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace specvla {

inline constexpr int kDefaultVocabSize = 256;
inline constexpr std::size_t kActionDims = 7;

/// Dimension layout of one action chunk.
enum class ActionDim : std::size_t {
  kPosX = 0,
  kPosY,
  kPosZ,
  kRotX,
  kRotY,
  kRotZ,
  kGripper,
};

class ActionSpaceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A single action token, identified by its bin ID.
struct ActionToken {
  int bin = 0;

  friend constexpr bool operator==(ActionToken, ActionToken) = default;
  friend constexpr auto operator<=>(ActionToken, ActionToken) = default;
};

using TokenSeq = std::vector<ActionToken>;

/// |a.bin - b.bin|. Callers guarantee both tokens come from one vocabulary.
constexpr int bin_distance(ActionToken a, ActionToken b) {
  return a.bin > b.bin ? a.bin - b.bin : b.bin - a.bin;
}

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// Per-dimension value ranges; meters for position deltas, radians for
/// rotation deltas, unitless for the gripper.
class DimensionBounds {
 public:
  /// position (-0.05, 0.05), rotation (-0.25, 0.25), gripper (0, 1).
  DimensionBounds();
  explicit DimensionBounds(const std::array<Interval, kActionDims>& dims);

  const Interval& operator[](std::size_t dim) const { return dims_.at(dim); }
  const std::array<Interval, kActionDims>& dims() const { return dims_; }

  /// Same bound for every dimension.
  static DimensionBounds uniform(double low, double high);

 private:
  std::array<Interval, kActionDims> dims_;
};

/// Exactly seven tokens ordered [dpos_x, dpos_y, dpos_z, drot_x, drot_y, drot_z, gripper].
class ActionChunk {
 public:
  ActionChunk() = default;
  explicit ActionChunk(const std::array<ActionToken, kActionDims>& tokens) : tokens_(tokens) {}

  /// Throws ActionSpaceError unless `tokens` has exactly seven entries.
  static ActionChunk from_span(std::span<const ActionToken> tokens);

  ActionToken operator[](std::size_t dim) const { return tokens_.at(dim); }
  ActionToken operator[](ActionDim dim) const { return tokens_.at(static_cast<std::size_t>(dim)); }
  const std::array<ActionToken, kActionDims>& tokens() const { return tokens_; }

  friend bool operator==(const ActionChunk&, const ActionChunk&) = default;

 private:
  std::array<ActionToken, kActionDims> tokens_{};
};

/// Vocabulary of `size` bins. Size is configurable so that traces using a
/// 257th token value can be replayed.
class ActionVocab {
 public:
  explicit ActionVocab(int size = kDefaultVocabSize);

  int size() const { return size_; }
  bool contains(ActionToken t) const { return t.bin >= 0 && t.bin < size_; }

  /// Throws ActionSpaceError for a bin outside [0, size).
  ActionToken token(int bin) const;

  /// Bin-center dequantization: low + (k + 0.5) * (high - low) / V.
  double detokenize(ActionToken t, const Interval& range) const;
  std::array<double, kActionDims> detokenize(const ActionChunk& chunk,
                                             const DimensionBounds& bounds) const;

  /// floor((v - low) / (high - low) * V), clamped to [0, V-1].
  ActionToken tokenize(double value, const Interval& range) const;
  ActionChunk tokenize(const std::array<double, kActionDims>& values,
                       const DimensionBounds& bounds) const;

 private:
  int size_;
};

/// Splits a token stream into whole chunks. Throws if the length is not a
/// multiple of seven or a token lies outside `vocab`.
std::vector<ActionChunk> split_chunks(std::span<const ActionToken> tokens, const ActionVocab& vocab);

std::string to_string(ActionDim dim);

}  // namespace specvla
