#pragma once

// Weighted plane trees: the input presentation of an arborescent link.
//
// A tree is stored rooted. Children lists are in plane order, and the cyclic
// order around a vertex is (parent, children...). Every invariant computed
// from a tree (flattening number, classification) is independent of the root.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arbor/error.hpp"

namespace arbor {

using VertexId = int;
using EdgeId = int;
using Weight = std::int64_t;

inline constexpr VertexId kNoVertex = -1;

/// Undirected tree edge; `child` is the endpoint farther from the root.
struct Edge {
  EdgeId id;
  VertexId parent;
  VertexId child;
};

class PlaneTree {
 public:
  /// Validates connectivity, acyclicity and child-list sanity.
  PlaneTree(std::vector<Weight> weights, std::vector<std::vector<VertexId>> children, VertexId root)
      : weights_(std::move(weights)), children_(std::move(children)), root_(root) {
    const int n = static_cast<int>(weights_.size());
    if (n == 0) throw PreconditionError("plane tree needs at least one vertex");
    if (static_cast<int>(children_.size()) != n) throw PreconditionError("children table size mismatch");
    if (root_ < 0 || root_ >= n) throw PreconditionError("root out of range");
    parent_.assign(n, kNoVertex);
    std::vector<char> seen(n, 0);
    seen[root_] = 1;
    std::vector<VertexId> stack{root_};
    int visited = 0;
    while (!stack.empty()) {
      VertexId v = stack.back();
      stack.pop_back();
      ++visited;
      for (VertexId c : children_[v]) {
        if (c < 0 || c >= n) throw PreconditionError("child id out of range");
        if (seen[c]) throw PreconditionError("vertex " + std::to_string(c) + " has two parents or closes a cycle");
        seen[c] = 1;
        parent_[c] = v;
        stack.push_back(c);
      }
    }
    if (visited != n) throw PreconditionError("tree is not connected");

    edge_of_.assign(n, -1);
    for (VertexId v = 0; v < n; ++v) {
      if (v == root_) continue;
      edge_of_[v] = static_cast<EdgeId>(edges_.size());
      edges_.push_back(Edge{edge_of_[v], parent_[v], v});
    }
  }

  static PlaneTree single(Weight w) { return PlaneTree({w}, {{}}, 0); }

  int size() const noexcept { return static_cast<int>(weights_.size()); }
  int edge_count() const noexcept { return size() - 1; }
  VertexId root() const noexcept { return root_; }
  Weight weight(VertexId v) const { return weights_.at(v); }
  const std::vector<Weight>& weights() const noexcept { return weights_; }
  const std::vector<VertexId>& children(VertexId v) const { return children_.at(v); }
  const std::vector<std::vector<VertexId>>& children_table() const noexcept { return children_; }
  VertexId parent(VertexId v) const { return parent_.at(v); }

  /// Unrooted degree.
  int valency(VertexId v) const {
    return static_cast<int>(children_.at(v).size()) + (v == root_ ? 0 : 1);
  }

  /// Neighbours in cyclic plane order, parent first.
  std::vector<VertexId> neighbors(VertexId v) const {
    std::vector<VertexId> out;
    if (v != root_) out.push_back(parent_[v]);
    out.insert(out.end(), children_[v].begin(), children_[v].end());
    return out;
  }

  /// Edges ordered by child vertex id; the index is the edge id.
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// Id of the edge joining `v` to its parent.
  EdgeId edge_to_parent(VertexId v) const {
    if (v == root_) throw PreconditionError("root has no parent edge");
    return edge_of_.at(v);
  }

  /// Vertices in preorder (parents before children, plane order).
  std::vector<VertexId> preorder() const {
    std::vector<VertexId> order;
    order.reserve(weights_.size());
    std::vector<VertexId> stack{root_};
    while (!stack.empty()) {
      VertexId v = stack.back();
      stack.pop_back();
      order.push_back(v);
      for (auto it = children_[v].rbegin(); it != children_[v].rend(); ++it) stack.push_back(*it);
    }
    return order;
  }

  std::vector<VertexId> leaves() const {
    std::vector<VertexId> out;
    for (VertexId v = 0; v < size(); ++v)
      if (valency(v) <= 1) out.push_back(v);
    return out;
  }

  PlaneTree with_weights(std::vector<Weight> weights) const {
    if (weights.size() != weights_.size()) throw PreconditionError("weight vector size mismatch");
    return PlaneTree(std::move(weights), children_, root_);
  }

  friend bool operator==(const PlaneTree& a, const PlaneTree& b) {
    return a.root_ == b.root_ && a.weights_ == b.weights_ && a.children_ == b.children_;
  }

 private:
  std::vector<Weight> weights_;
  std::vector<std::vector<VertexId>> children_;
  VertexId root_;
  std::vector<VertexId> parent_;
  std::vector<EdgeId> edge_of_;
  std::vector<Edge> edges_;
};

// ---------------------------------------------------------------------------
// Text form: tree := '(' integer tree* ')'

namespace detail {

class TreeParser {
 public:
  explicit TreeParser(std::string_view text) : text_(text) {}

  PlaneTree parse() {
    skip_space();
    VertexId root = parse_node();
    skip_space();
    if (pos_ != text_.size()) throw ParseError("trailing characters after tree", pos_);
    return PlaneTree(std::move(weights_), std::move(children_), root);
  }

 private:
  VertexId parse_node() {
    // Iterative so deep paths cannot exhaust the call stack.
    std::vector<VertexId> open;
    expect('(');
    VertexId root = new_vertex(parse_integer());
    open.push_back(root);
    while (!open.empty()) {
      skip_space();
      if (pos_ >= text_.size()) throw ParseError("unexpected end of input, expected ')' or '('", pos_);
      char c = text_[pos_];
      if (c == ')') {
        ++pos_;
        open.pop_back();
      } else if (c == '(') {
        ++pos_;
        VertexId v = new_vertex(parse_integer());
        children_[open.back()].push_back(v);
        open.push_back(v);
      } else {
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
      }
    }
    return root;
  }

  VertexId new_vertex(Weight w) {
    weights_.push_back(w);
    children_.emplace_back();
    return static_cast<VertexId>(weights_.size() - 1);
  }

  Weight parse_integer() {
    skip_space();
    const std::size_t start = pos_;
    bool negative = false;
    if (pos_ < text_.size() && text_[pos_] == '-') {
      negative = true;
      ++pos_;
    }
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
      throw ParseError("expected integer weight", pos_);
    // Accumulate as a negative number so INT64_MIN parses.
    Weight value = 0;
    constexpr Weight kMin = std::numeric_limits<Weight>::min();
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      const int digit = text_[pos_] - '0';
      if (value < (kMin + digit) / 10) throw ParseError("integer weight overflows 64 bits", start);
      value = value * 10 - digit;
      ++pos_;
    }
    if (!negative) {
      if (value == kMin) throw ParseError("integer weight overflows 64 bits", start);
      value = -value;
    }
    return value;
  }

  void expect(char c) {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != c)
      throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<Weight> weights_;
  std::vector<std::vector<VertexId>> children_;
};

}  // namespace detail

/// Parses a tree expression; vertices are numbered in preorder, root = 0.
inline PlaneTree parse_tree(std::string_view text) { return detail::TreeParser(text).parse(); }

/// Canonical text: single spaces between weight and children, no padding.
inline std::string serialize(const PlaneTree& tree) {
  std::string out;
  struct Frame {
    VertexId v;
    std::size_t next;
  };
  std::vector<Frame> stack{{tree.root(), 0}};
  out += '(' + std::to_string(tree.weight(tree.root()));
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& kids = tree.children(f.v);
    if (f.next < kids.size()) {
      VertexId c = kids[f.next++];
      out += " (" + std::to_string(tree.weight(c));
      stack.push_back({c, 0});
    } else {
      out += ')';
      stack.pop_back();
    }
  }
  return out;
}

/// Re-roots at `new_root`, keeping vertex ids. The cyclic order around each
/// vertex is preserved; children start right after the new parent.
inline PlaneTree reroot(const PlaneTree& tree, VertexId new_root) {
  if (new_root < 0 || new_root >= tree.size()) throw PreconditionError("unknown vertex for reroot");
  const int n = tree.size();
  std::vector<std::vector<VertexId>> children(n);
  std::vector<VertexId> queue{new_root};
  std::vector<VertexId> new_parent(n, kNoVertex);
  std::vector<char> seen(n, 0);
  seen[new_root] = 1;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    VertexId u = queue[i];
    std::vector<VertexId> cyc = tree.neighbors(u);
    // The old parent plays the role of the anchor for the new root.
    VertexId anchor = (u == new_root) ? tree.parent(u) : new_parent[u];
    std::size_t start = 0;
    if (anchor != kNoVertex) {
      start = static_cast<std::size_t>(std::find(cyc.begin(), cyc.end(), anchor) - cyc.begin()) + 1;
    }
    for (std::size_t k = 0; k < cyc.size(); ++k) {
      VertexId w = cyc[(start + k) % cyc.size()];
      if (seen[w]) continue;
      seen[w] = 1;
      new_parent[w] = u;
      children[u].push_back(w);
      queue.push_back(w);
    }
  }
  return PlaneTree(tree.weights(), std::move(children), new_root);
}

/// Subtree induced by `keep` (must be connected and contain the root).
/// Returns the tree plus the original id of each new vertex.
inline std::pair<PlaneTree, std::vector<VertexId>> induced_subtree(const PlaneTree& tree,
                                                                   const std::vector<char>& keep) {
  if (!keep.at(tree.root())) throw PreconditionError("induced subtree must contain the root");
  std::vector<VertexId> new_id(tree.size(), kNoVertex);
  std::vector<VertexId> original;
  for (VertexId v : tree.preorder()) {
    if (!keep[v]) continue;
    if (v != tree.root() && !keep[tree.parent(v)]) throw PreconditionError("induced subtree is not connected");
    new_id[v] = static_cast<VertexId>(original.size());
    original.push_back(v);
  }
  std::vector<Weight> weights;
  std::vector<std::vector<VertexId>> children(original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    weights.push_back(tree.weight(original[i]));
    for (VertexId c : tree.children(original[i]))
      if (keep[c]) children[i].push_back(new_id[c]);
  }
  return {PlaneTree(std::move(weights), std::move(children), 0), std::move(original)};
}

// ---------------------------------------------------------------------------
// Classification

struct TreeClass {
  bool is_path = false;
  bool is_star = false;
  bool has_many_twigs = false;
  bool is_bipartite_ramification = false;
  std::vector<VertexId> branching_points;
};

/// Number of twigs (straight branches ending in a leaf) at each vertex.
/// A twig leaves `v` towards a neighbour and passes only valency-2 vertices.
inline std::vector<int> twig_counts(const PlaneTree& tree) {
  std::vector<int> counts(tree.size(), 0);
  for (VertexId v = 0; v < tree.size(); ++v) {
    for (VertexId start : tree.neighbors(v)) {
      VertexId prev = v, cur = start;
      while (tree.valency(cur) == 2) {
        auto nb = tree.neighbors(cur);
        VertexId next = nb[0] == prev ? nb[1] : nb[0];
        prev = cur;
        cur = next;
      }
      if (tree.valency(cur) == 1) ++counts[v];
    }
  }
  return counts;
}

inline TreeClass classify(const PlaneTree& tree) {
  TreeClass out;
  for (VertexId v = 0; v < tree.size(); ++v)
    if (tree.valency(v) >= 3) out.branching_points.push_back(v);
  out.is_path = out.branching_points.empty();
  out.is_star = out.branching_points.size() == 1;

  // Many twigs: the branching points span a subtree T' and each carries at
  // least three twigs, so every other vertex sits on a twig.
  const auto twigs = twig_counts(tree);
  bool many = true;
  for (VertexId b : out.branching_points) {
    if (twigs[b] < 3) many = false;
    int non_twig = 0;
    for (VertexId nb : tree.neighbors(b))
      if (tree.valency(nb) >= 3) ++non_twig;
    if (twigs[b] + non_twig != tree.valency(b)) many = false;
  }
  out.has_many_twigs = many;

  // All branching points at even mutual distance <=> same depth parity.
  std::vector<int> depth(tree.size(), 0);
  for (VertexId v : tree.preorder())
    if (v != tree.root()) depth[v] = depth[tree.parent(v)] + 1;
  bool bipartite = true;
  for (VertexId b : out.branching_points)
    if ((depth[b] - depth[out.branching_points.front()]) % 2 != 0) bipartite = false;
  out.is_bipartite_ramification = bipartite;
  return out;
}

// ---------------------------------------------------------------------------
// Ramification

/// Attaches a new vertex c (weight `center_weight`) to `target`, inserting the
/// connecting edge at `edge_position` in target's child list, and hangs one
/// straight branch off c per entry of `twig_weight_lists` (weights listed from
/// c outwards). The new vertex has valency twig_weight_lists.size() + 1.
inline PlaneTree add_ramification(const PlaneTree& tree, VertexId target, std::size_t edge_position,
                                  Weight center_weight,
                                  const std::vector<std::vector<Weight>>& twig_weight_lists) {
  if (target < 0 || target >= tree.size()) throw PreconditionError("unknown target vertex");
  if (twig_weight_lists.empty())
    throw PreconditionError("a ramification point needs at least one twig (valency >= 2)");
  if (edge_position > tree.children(target).size()) throw PreconditionError("edge position out of range");
  std::vector<Weight> weights = tree.weights();
  std::vector<std::vector<VertexId>> children = tree.children_table();
  const VertexId c = static_cast<VertexId>(weights.size());
  weights.push_back(center_weight);
  children.emplace_back();
  children[target].insert(children[target].begin() + static_cast<std::ptrdiff_t>(edge_position), c);
  for (const auto& twig : twig_weight_lists) {
    if (twig.empty()) throw PreconditionError("twig weight list must be nonempty");
    VertexId prev = c;
    for (Weight w : twig) {
      const VertexId v = static_cast<VertexId>(weights.size());
      weights.push_back(w);
      children.emplace_back();
      children[prev].push_back(v);
      prev = v;
    }
  }
  return PlaneTree(std::move(weights), std::move(children), tree.root());
}

// ---------------------------------------------------------------------------
// Random trees

struct RandomTreeOptions {
  int max_vertices = 8;
  Weight weight_min = -5;
  Weight weight_max = 5;
  std::set<Weight> exclude;
  bool many_twigs_only = false;
};

namespace detail {

inline std::vector<Weight> weight_pool(const RandomTreeOptions& opt) {
  if (opt.weight_min > opt.weight_max) throw PreconditionError("empty weight range");
  if (opt.weight_max - opt.weight_min > 1'000'000) throw PreconditionError("weight range too large");
  std::vector<Weight> pool;
  for (Weight w = opt.weight_min; w <= opt.weight_max; ++w)
    if (!opt.exclude.contains(w)) pool.push_back(w);
  if (pool.empty()) throw PreconditionError("weight range is empty after exclusions");
  return pool;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace detail

/// Deterministic for a fixed seed. With `many_twigs_only`, grows a star with
/// at least three branches by repeatedly adding ramification points carrying
/// at least three twigs at branching points.
inline PlaneTree random_tree(const RandomTreeOptions& opt, std::uint64_t seed) {
  if (opt.max_vertices < 1) throw PreconditionError("max_vertices must be >= 1");
  const auto pool = detail::weight_pool(opt);
  std::mt19937_64 rng(seed);
  auto draw = [&] { return pool[static_cast<std::size_t>(detail::uniform_int(rng, 0, static_cast<int>(pool.size()) - 1))]; };

  if (!opt.many_twigs_only) {
    const int n = detail::uniform_int(rng, 1, opt.max_vertices);
    std::vector<Weight> weights{draw()};
    std::vector<std::vector<VertexId>> children(1);
    for (int v = 1; v < n; ++v) {
      const int parent = detail::uniform_int(rng, 0, v - 1);
      const int pos = detail::uniform_int(rng, 0, static_cast<int>(children[parent].size()));
      children[parent].insert(children[parent].begin() + pos, v);
      children.emplace_back();
      weights.push_back(draw());
    }
    return PlaneTree(std::move(weights), std::move(children), 0);
  }

  if (opt.max_vertices < 4)
    throw PreconditionError("a many-twigs tree with a branching point needs at least 4 vertices");

  // Twig lengths are 1 or 2; extra length only when the budget allows.
  auto twig_lists = [&](int count, int budget) {
    std::vector<std::vector<Weight>> twigs(count);
    int spare = budget - count;
    for (auto& twig : twigs) {
      twig.push_back(draw());
      if (spare > 0 && detail::uniform_int(rng, 0, 2) == 0) {
        twig.push_back(draw());
        --spare;
      }
    }
    return twigs;
  };

  int remaining = opt.max_vertices - 1;
  const int branches = detail::uniform_int(rng, 3, std::min(6, remaining));
  auto star_twigs = twig_lists(branches, remaining);
  PlaneTree tree = PlaneTree::single(draw());
  std::vector<Weight> weights = tree.weights();
  std::vector<std::vector<VertexId>> children = tree.children_table();
  for (const auto& twig : star_twigs) {
    VertexId prev = 0;
    for (Weight w : twig) {
      const VertexId v = static_cast<VertexId>(weights.size());
      weights.push_back(w);
      children.emplace_back();
      children[prev].push_back(v);
      prev = v;
    }
  }
  tree = PlaneTree(std::move(weights), std::move(children), 0);

  while (true) {
    remaining = opt.max_vertices - tree.size();
    if (remaining < 4 || detail::uniform_int(rng, 0, 3) == 0) break;
    const auto bps = classify(tree).branching_points;
    const VertexId target = bps[static_cast<std::size_t>(detail::uniform_int(rng, 0, static_cast<int>(bps.size()) - 1))];
    const int count = detail::uniform_int(rng, 3, std::min(5, remaining - 1));
    const Weight center = draw();
    auto twigs = twig_lists(count, remaining - 1);
    const auto pos = static_cast<std::size_t>(
        detail::uniform_int(rng, 0, static_cast<int>(tree.children(target).size())));
    tree = add_ramification(tree, target, pos, center, twigs);
  }
  return tree;
}

}  // namespace arbor
