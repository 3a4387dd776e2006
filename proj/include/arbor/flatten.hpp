#pragma once

// Flattening number f(T): the fewest edges whose removal (interiors only)
// leaves a forest with every valency at most two.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <set>
#include <vector>

#include "arbor/error.hpp"
#include "arbor/plane_tree.hpp"

namespace arbor {

struct FlatteningResult {
  int value = 0;
  std::vector<EdgeId> witness;  // sorted ascending
};

inline bool is_flattening_set(const PlaneTree& tree, const std::set<EdgeId>& edges) {
  std::vector<int> removed(tree.size(), 0);
  for (EdgeId e : edges) {
    if (e < 0 || e >= tree.edge_count()) throw PreconditionError("unknown edge id " + std::to_string(e));
    const Edge& edge = tree.edges()[e];
    ++removed[edge.parent];
    ++removed[edge.child];
  }
  for (VertexId v = 0; v < tree.size(); ++v)
    if (tree.valency(v) - removed[v] > 2) return false;
  return true;
}

/// Exact minimum by a two-state tree DP: cost[v][s] is the fewest selected
/// edges below v when the edge to v's parent is selected (s = 1) or kept
/// (s = 0). At v the kept incident edges must number at most two, so v must
/// select at least (children + kept parent edge - 2) child edges; it takes the
/// cheapest ones, ties to the lowest edge id.
inline FlatteningResult flattening_number(const PlaneTree& tree) {
  const int n = tree.size();
  std::vector<std::array<int, 2>> cost(n, {0, 0});
  // selected[v][s]: child edges v selects in state s.
  std::vector<std::array<std::vector<VertexId>, 2>> selected(n);

  auto order = tree.preorder();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const VertexId v = *it;
    const auto& kids = tree.children(v);
    int base = 0;
    std::vector<std::pair<int, VertexId>> deltas;  // (extra cost of selecting, child)
    for (VertexId c : kids) {
      base += cost[c][0];
      deltas.emplace_back(cost[c][1] + 1 - cost[c][0], c);
    }
    // Children are visited in increasing edge id when ids tie; edge id order
    // equals child vertex id order.
    std::sort(deltas.begin(), deltas.end());
    for (int s = 0; s < 2; ++s) {
      const bool parent_kept = (v != tree.root()) && s == 0;
      const int need = std::max(0, static_cast<int>(kids.size()) + (parent_kept ? 1 : 0) - 2);
      int total = base;
      std::vector<VertexId> pick;
      for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (static_cast<int>(i) < need || deltas[i].first < 0) {
          total += deltas[i].first;
          pick.push_back(deltas[i].second);
        }
      }
      cost[v][s] = total;
      selected[v][s] = std::move(pick);
    }
  }

  FlatteningResult result;
  // The root has no parent edge; state 1 means "no kept parent edge".
  result.value = cost[tree.root()][1];
  std::vector<std::pair<VertexId, int>> stack{{tree.root(), 1}};
  while (!stack.empty()) {
    auto [v, s] = stack.back();
    stack.pop_back();
    const auto& pick = selected[v][s];
    for (VertexId c : tree.children(v)) {
      const bool chosen = std::find(pick.begin(), pick.end(), c) != pick.end();
      if (chosen) result.witness.push_back(tree.edge_to_parent(c));
      stack.emplace_back(c, chosen ? 1 : 0);
    }
  }
  std::sort(result.witness.begin(), result.witness.end());
  return result;
}

inline constexpr int kBruteforceEdgeGuard = 20;

/// Reference value by enumerating every edge subset.
inline int flattening_number_bruteforce(const PlaneTree& tree) {
  const int m = tree.edge_count();
  if (m > kBruteforceEdgeGuard)
    throw GuardExceeded("brute-force flattening limited to " + std::to_string(kBruteforceEdgeGuard) + " edges");
  std::vector<int> deg(tree.size());
  for (VertexId v = 0; v < tree.size(); ++v) deg[v] = tree.valency(v);
  int best = m;
  std::vector<int> removed(tree.size());
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    const int bits = std::popcount(mask);
    if (bits >= best) continue;
    std::fill(removed.begin(), removed.end(), 0);
    for (int e = 0; e < m; ++e) {
      if (mask & (1u << e)) {
        ++removed[tree.edges()[e].parent];
        ++removed[tree.edges()[e].child];
      }
    }
    bool ok = true;
    for (VertexId v = 0; v < tree.size() && ok; ++v) ok = deg[v] - removed[v] <= 2;
    if (ok) best = bits;
  }
  return best;
}

/// m(T) through the identity m(T) = f(T) + 2.
inline int max_component_formula(const PlaneTree& tree) { return flattening_number(tree).value + 2; }

}  // namespace arbor
