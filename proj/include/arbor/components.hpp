#pragma once

// Maximal component number m(T) by exhaustive search over weight parities.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "arbor/diagram.hpp"
#include "arbor/error.hpp"
#include "arbor/flatten.hpp"
#include "arbor/plane_tree.hpp"
#include "arbor/tangle.hpp"

namespace arbor {

struct MaxComponentsResult {
  int value = 0;
  std::map<VertexId, Weight> witness_weights;
};

inline constexpr int kParityVertexGuard = 16;

/// Component count of the compiled link for the given weights.
inline int link_components(const PlaneTree& tree, std::vector<Weight> weights) {
  CompileOptions opt;
  opt.layout = false;
  return count_components(compile(tree.with_weights(std::move(weights)), opt));
}

/// Tries every weight assignment with entries in {0, 1}; vertex 0 is the most
/// significant position, so the first maximum met is the lexicographically
/// smallest witness. With `lift` the witness is reported as {2, 3}.
inline MaxComponentsResult m_bruteforce(const PlaneTree& tree, bool lift = false) {
  const int n = tree.size();
  if (n > kParityVertexGuard)
    throw GuardExceeded("parity search limited to " + std::to_string(kParityVertexGuard) + " vertices");
  MaxComponentsResult best;
  best.value = -1;
  std::vector<Weight> w(n);
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    for (int v = 0; v < n; ++v) w[v] = (mask >> (n - 1 - v)) & 1u;
    const int comps = link_components(tree, w);
    if (comps > best.value) {
      best.value = comps;
      best_mask = mask;
    }
  }
  for (int v = 0; v < n; ++v) best.witness_weights[v] = ((best_mask >> (n - 1 - v)) & 1u) + (lift ? 2 : 0);
  return best;
}

struct ParityViolation {
  std::vector<Weight> weights;
  int components = 0;
  VertexId shifted = kNoVertex;
  int shifted_components = 0;
};

struct ParityReport {
  int trials = 0;
  int checks = 0;
  std::vector<ParityViolation> violations;
};

/// For random weights in [-6, 6], checks that adding 2 to any single weight
/// keeps the component count.
inline ParityReport check_parity_reduction(const PlaneTree& tree, int trials, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<int> dist(-6, 6);
  ParityReport report;
  report.trials = trials;
  for (int t = 0; t < trials; ++t) {
    std::vector<Weight> w(tree.size());
    for (auto& x : w) x = dist(rng);
    const int base = link_components(tree, w);
    for (VertexId v = 0; v < tree.size(); ++v) {
      auto shifted = w;
      shifted[v] += 2;
      const int after = link_components(tree, shifted);
      ++report.checks;
      if (after != base) report.violations.push_back({w, base, v, after});
    }
  }
  return report;
}

inline nlohmann::json max_components_report(const PlaneTree& tree, const MaxComponentsResult& m) {
  nlohmann::json witness = nlohmann::json::object();
  for (const auto& [v, w] : m.witness_weights) witness[std::to_string(v)] = w;
  const int f2 = flattening_number(tree).value + 2;
  return {{"tree", serialize(tree)}, {"m", m.value}, {"f_plus_2", f2}, {"witness", witness}, {"agrees", m.value == f2}};
}

}  // namespace arbor
