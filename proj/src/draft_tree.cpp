#include "specvla/draft_tree.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include "specvla/models.hpp"

namespace specvla {

void TreeParams::validate() const {
  if (top_k < 1) throw ModelError("top_k must be >= 1");
  if (max_depth < 1) throw ModelError("max_depth must be >= 1");
  if (max_nodes < 1) throw ModelError("max_nodes must be >= 1");
}

bool ranks_before(const DraftNode& a, const DraftNode& b) {
  if (a.cum_score != b.cum_score) return a.cum_score > b.cum_score;
  if (a.depth != b.depth) return a.depth < b.depth;
  return a.token.bin < b.token.bin;
}

TokenSeq DraftTree::path_tokens(int node) const {
  TokenSeq out;
  for (int cur = node; cur != kRootParent; cur = nodes.at(static_cast<std::size_t>(cur)).parent) {
    out.push_back(nodes.at(static_cast<std::size_t>(cur)).token);
    if (out.size() > nodes.size()) throw StructuralError("cycle in draft tree");
  }
  std::reverse(out.begin(), out.end());
  return out;
}

void DraftTree::validate() const {
  if (nodes.size() > static_cast<std::size_t>(params.max_nodes)) {
    throw StructuralError("draft tree holds " + std::to_string(nodes.size()) + " nodes, budget is " +
                          std::to_string(params.max_nodes));
  }
  std::set<std::pair<int, int>> child_tokens;  // (parent, bin)
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.parent != kRootParent && (n.parent < 0 || n.parent >= static_cast<int>(i))) {
      throw StructuralError("node " + std::to_string(i) + " has dangling or forward parent " +
                            std::to_string(n.parent));
    }
    const int expected = n.parent == kRootParent ? 1 : nodes[static_cast<std::size_t>(n.parent)].depth + 1;
    if (n.depth != expected) throw StructuralError("node " + std::to_string(i) + " has inconsistent depth");
    if (n.depth > params.max_depth) throw StructuralError("node " + std::to_string(i) + " exceeds max_depth");
    if (!child_tokens.emplace(n.parent, n.token.bin).second) {
      throw StructuralError("duplicate sibling token " + std::to_string(n.token.bin));
    }
  }
}

namespace {

struct Generated {
  DraftNode node;  // parent refers to another Generated index
};

PrefixState state_of(const std::vector<Generated>& all, const PrefixState& root, int id) {
  TokenSeq path;
  for (int cur = id; cur != kRootParent; cur = all[static_cast<std::size_t>(cur)].node.parent) {
    path.push_back(all[static_cast<std::size_t>(cur)].node.token);
  }
  std::reverse(path.begin(), path.end());
  return root.extended(path);
}

// Total order: ranks_before, then the parents' order (siblings never tie on bin).
bool generated_before(const std::vector<Generated>& all, int a, int b) {
  while (a != b) {
    const auto& na = all[static_cast<std::size_t>(a)].node;
    const auto& nb = all[static_cast<std::size_t>(b)].node;
    if (ranks_before(na, nb)) return true;
    if (ranks_before(nb, na)) return false;
    a = na.parent;
    b = nb.parent;
    if (a == kRootParent || b == kRootParent) return false;
  }
  return false;
}

}  // namespace

DraftTree build_tree(const PrefixState& state, const FeatureContext& ctx, const DraftModel& draft,
                     const TreeParams& params) {
  params.validate();

  std::vector<Generated> all;
  std::vector<int> retained;
  std::vector<int> frontier{kRootParent};

  for (int depth = 1; depth <= params.max_depth && !frontier.empty(); ++depth) {
    std::vector<PrefixState> states;
    states.reserve(frontier.size());
    for (int f : frontier) states.push_back(state_of(all, state, f));

    const auto proposals = draft.propose_level(states, ctx, params.top_k);
    if (proposals.size() != frontier.size()) throw StructuralError("draft returned wrong level size");

    std::vector<int> pool = retained;
    for (std::size_t fi = 0; fi < frontier.size(); ++fi) {
      const int parent = frontier[fi];
      const double base = parent == kRootParent ? 0.0 : all[static_cast<std::size_t>(parent)].node.cum_score;
      for (const auto& p : proposals[fi]) {
        all.push_back(Generated{DraftNode{p.token, parent, depth, base + p.log_score}});
        pool.push_back(static_cast<int>(all.size()) - 1);
      }
    }

    std::sort(pool.begin(), pool.end(), [&](int a, int b) { return generated_before(all, a, b); });

    std::vector<char> kept(all.size(), 0);
    retained.clear();
    for (int id : pool) {
      if (static_cast<int>(retained.size()) == params.max_nodes) break;
      const int parent = all[static_cast<std::size_t>(id)].node.parent;
      if (parent != kRootParent && !kept[static_cast<std::size_t>(parent)]) continue;
      kept[static_cast<std::size_t>(id)] = 1;
      retained.push_back(id);
    }

    frontier.clear();
    for (int id : retained) {
      if (all[static_cast<std::size_t>(id)].node.depth == depth) frontier.push_back(id);
    }
  }

  // retained is in rank order; a stable sort by depth keeps rank within a level
  std::stable_sort(retained.begin(), retained.end(), [&](int a, int b) {
    return all[static_cast<std::size_t>(a)].node.depth < all[static_cast<std::size_t>(b)].node.depth;
  });
  std::vector<int> remap(all.size(), kRootParent);
  for (std::size_t i = 0; i < retained.size(); ++i) remap[static_cast<std::size_t>(retained[i])] = static_cast<int>(i);

  DraftTree tree;
  tree.params = params;
  tree.nodes.reserve(retained.size());
  for (int id : retained) {
    DraftNode n = all[static_cast<std::size_t>(id)].node;
    n.parent = n.parent == kRootParent ? kRootParent : remap[static_cast<std::size_t>(n.parent)];
    tree.nodes.push_back(n);
  }
  tree.validate();
  return tree;
}

FlatTree flatten(const DraftTree& tree) {
  const std::size_t n = tree.size();
  std::vector<int> level(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int cur = static_cast<int>(i);
    int steps = 0;
    while (cur != kRootParent) {
      if (cur < 0 || cur >= static_cast<int>(n)) {
        throw StructuralError("dangling parent link at node " + std::to_string(i));
      }
      if (++steps > static_cast<int>(n)) throw StructuralError("cyclic parent links at node " + std::to_string(i));
      cur = tree.nodes[static_cast<std::size_t>(cur)].parent;
    }
    level[i] = steps;
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return level[static_cast<std::size_t>(a)] < level[static_cast<std::size_t>(b)];
  });
  std::vector<int> position(n);
  for (std::size_t i = 0; i < n; ++i) position[static_cast<std::size_t>(order[i])] = static_cast<int>(i);

  FlatTree flat;
  flat.tokens.reserve(n);
  flat.parents.reserve(n);
  flat.mask = AncestorMask(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = tree.nodes[static_cast<std::size_t>(order[i])];
    flat.tokens.push_back(node.token);
    flat.parents.push_back(node.parent == kRootParent ? kRootParent : position[static_cast<std::size_t>(node.parent)]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (int cur = static_cast<int>(i); cur != kRootParent; cur = flat.parents[static_cast<std::size_t>(cur)]) {
      flat.mask.set(i, static_cast<std::size_t>(cur));
    }
  }
  return flat;
}

std::vector<TreePath> enumerate_paths(const DraftTree& tree) {
  tree.validate();
  std::vector<char> has_child(tree.size(), 0);
  for (const auto& node : tree.nodes) {
    if (node.parent != kRootParent) has_child[static_cast<std::size_t>(node.parent)] = 1;
  }
  std::vector<int> leaves;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (!has_child[i]) leaves.push_back(static_cast<int>(i));
  }
  std::stable_sort(leaves.begin(), leaves.end(), [&](int a, int b) {
    return ranks_before(tree.nodes[static_cast<std::size_t>(a)], tree.nodes[static_cast<std::size_t>(b)]);
  });

  std::vector<TreePath> paths;
  paths.reserve(leaves.size());
  for (int leaf : leaves) {
    TreePath p;
    for (int cur = leaf; cur != kRootParent; cur = tree.nodes[static_cast<std::size_t>(cur)].parent) {
      p.nodes.push_back(cur);
    }
    std::reverse(p.nodes.begin(), p.nodes.end());
    for (int id : p.nodes) p.tokens.push_back(tree.nodes[static_cast<std::size_t>(id)].token);
    p.leaf_score = tree.nodes[static_cast<std::size_t>(leaf)].cum_score;
    paths.push_back(std::move(p));
  }
  return paths;
}

}  // namespace specvla
