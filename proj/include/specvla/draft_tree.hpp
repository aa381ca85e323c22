#pragma once

// Dynamic draft tree: level-by-level top-k expansion with global re-ranking
// under a node budget, plus flattening for one-pass tree verification.

#include <cstdint>
#include <vector>

#include "specvla/types.hpp"

namespace specvla {

class DraftModel;

inline constexpr int kRootParent = -1;

struct TreeParams {
  int top_k = 8;
  int max_depth = 4;
  int max_nodes = 50;

  /// Throws ModelError unless every field is >= 1.
  void validate() const;

  friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

struct DraftNode {
  ActionToken token;
  int parent = kRootParent;  // index into DraftTree::nodes, or kRootParent
  int depth = 1;
  double cum_score = 0.0;  // sum of draft log-scores along the root path

  friend bool operator==(const DraftNode&, const DraftNode&) = default;
};

/// Strict ranking used for budget pruning: higher cum_score, then shallower,
/// then lower bin.
bool ranks_before(const DraftNode& a, const DraftNode& b);

struct DraftTree {
  std::vector<DraftNode> nodes;
  TreeParams params;

  std::size_t size() const { return nodes.size(); }
  bool empty() const { return nodes.empty(); }

  /// Tokens from the root down to and including `node`.
  TokenSeq path_tokens(int node) const;

  /// Throws StructuralError on dangling or forward parent links, bad depths,
  /// or duplicate sibling tokens.
  void validate() const;

  friend bool operator==(const DraftTree&, const DraftTree&) = default;
};

/// Builds the tree for `state`. Every frontier node at each level is expanded
/// with the draft's top-k proposals; after each level only the max_nodes
/// best-ranked nodes (with their parents present) survive. Nodes are returned
/// ordered by depth, then rank.
DraftTree build_tree(const PrefixState& state, const FeatureContext& ctx, const DraftModel& draft,
                     const TreeParams& params);

/// Row-major n x n ancestor mask; bit (i, j) set iff node j lies on node i's
/// root path, node i included.
class AncestorMask {
 public:
  AncestorMask() = default;
  explicit AncestorMask(std::size_t n) : n_(n), bits_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool test(std::size_t row, std::size_t col) const { return bits_[row * n_ + col] != 0; }
  void set(std::size_t row, std::size_t col) { bits_[row * n_ + col] = 1; }

  friend bool operator==(const AncestorMask&, const AncestorMask&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct FlatTree {
  TokenSeq tokens;
  std::vector<int> parents;
  AncestorMask mask;
};

/// Throws StructuralError for cyclic or dangling parents.
FlatTree flatten(const DraftTree& tree);

struct TreePath {
  std::vector<int> nodes;  // root-to-leaf node indices
  TokenSeq tokens;
  double leaf_score = 0.0;
};

/// One path per leaf, ordered by descending leaf cum_score (ties follow the
/// node ranking, then node index).
std::vector<TreePath> enumerate_paths(const DraftTree& tree);

}  // namespace specvla
