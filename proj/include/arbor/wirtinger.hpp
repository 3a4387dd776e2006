#pragma once

// Wirtinger colouring: seeds propagate across a crossing when its over arc and
// one under arc are coloured, colouring the other under arc.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "arbor/diagram.hpp"
#include "arbor/error.hpp"
#include "arbor/flatten.hpp"
#include "arbor/plane_tree.hpp"
#include "arbor/tangle.hpp"

namespace arbor {

/// A set of coloured arcs of one diagram.
class Coloring {
 public:
  Coloring() = default;
  explicit Coloring(int arc_count) : mask_(arc_count, 0) {}
  Coloring(int arc_count, const std::vector<int>& arcs) : mask_(arc_count, 0) {
    for (int a : arcs) insert(a);
  }

  int arc_count() const noexcept { return static_cast<int>(mask_.size()); }
  bool contains(int arc) const { return mask_.at(arc) != 0; }
  void insert(int arc) {
    if (arc < 0 || arc >= arc_count()) throw PreconditionError("arc id " + std::to_string(arc) + " out of range");
    if (!mask_[arc]) {
      mask_[arc] = 1;
      ++size_;
    }
  }
  int size() const noexcept { return size_; }
  bool full() const noexcept { return size_ == arc_count(); }
  std::vector<int> arcs() const {
    std::vector<int> out;
    for (int a = 0; a < arc_count(); ++a)
      if (mask_[a]) out.push_back(a);
    return out;
  }
  bool subset_of(const Coloring& other) const {
    for (int a = 0; a < arc_count(); ++a)
      if (mask_[a] && !other.mask_.at(a)) return false;
    return true;
  }
  friend bool operator==(const Coloring& a, const Coloring& b) { return a.mask_ == b.mask_; }

 private:
  std::vector<char> mask_;
  int size_ = 0;
};

namespace detail {

/// Worklist propagation with the crossing incidence built once.
class Propagator {
 public:
  explicit Propagator(const Diagram& d) : d_(&d), at_(d.arc_count()) {
    for (const auto& x : d.crossings())
      for (int a : {x.over, x.under_in, x.under_out}) at_[a].push_back(x.id);
  }

  Coloring operator()(Coloring c) const {
    std::vector<int> work;
    for (int a : c.arcs()) work.insert(work.end(), at_[a].begin(), at_[a].end());
    while (!work.empty()) {
      const auto& x = d_->crossings()[work.back()];
      work.pop_back();
      if (!c.contains(x.over)) continue;
      const bool in = c.contains(x.under_in), out = c.contains(x.under_out);
      if (in == out) continue;
      const int fresh = in ? x.under_out : x.under_in;
      c.insert(fresh);
      work.insert(work.end(), at_[fresh].begin(), at_[fresh].end());
    }
    return c;
  }

 private:
  const Diagram* d_;
  std::vector<std::vector<int>> at_;
};

/// No connectivity check.
inline Coloring propagate(const Diagram& d, Coloring c) { return Propagator(d)(std::move(c)); }

inline void require_connected(const Diagram& d) {
  if (!d.is_connected()) throw PreconditionError("colouring requires a connected diagram");
}

}  // namespace detail

/// Least fixed point of the propagation rule containing `seeds`.
inline Coloring closure(const Diagram& d, const Coloring& seeds) {
  detail::require_connected(d);
  if (seeds.arc_count() != d.arc_count()) throw PreconditionError("colouring belongs to a different diagram");
  return detail::propagate(d, seeds);
}

// ---------------------------------------------------------------------------
// Exact Wirtinger number

inline constexpr int kExactArcGuard = 40;

struct WirtingerExact {
  std::optional<int> value;  // nullopt: every k <= k_max fails
  std::vector<int> seeds;    // first witness in lexicographic order
};

namespace detail {

struct MaskDiagram {
  std::vector<std::uint64_t> over, in, out;
  std::uint64_t full = 0;

  explicit MaskDiagram(const Diagram& d) {
    for (const auto& c : d.crossings()) {
      over.push_back(std::uint64_t{1} << c.over);
      in.push_back(std::uint64_t{1} << c.under_in);
      out.push_back(std::uint64_t{1} << c.under_out);
    }
    full = d.arc_count() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << d.arc_count()) - 1;
  }

  std::uint64_t close(std::uint64_t m) const {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i < over.size(); ++i) {
        if (!(m & over[i])) continue;
        const bool a = m & in[i], b = m & out[i];
        if (a != b) {
          m |= in[i] | out[i];
          changed = true;
        }
      }
    }
    return m;
  }
};

inline bool exact_dfs(const MaskDiagram& md, int arcs, int start, int remaining, std::uint64_t closed,
                      std::vector<int>& chosen) {
  if (remaining == 0) return closed == md.full;
  for (int a = start; a <= arcs - remaining; ++a) {
    const std::uint64_t bit = std::uint64_t{1} << a;
    // A seed already coloured by the prefix is redundant; the smaller set was
    // tried at a lower k.
    if (closed & bit) continue;
    chosen.push_back(a);
    if (exact_dfs(md, arcs, a + 1, remaining - 1, md.close(closed | bit), chosen)) return true;
    chosen.pop_back();
  }
  return false;
}

}  // namespace detail

/// Smallest k <= k_max admitting a k-seed set whose closure is every arc.
inline WirtingerExact wirtinger_exact(const Diagram& d, int k_max) {
  detail::require_connected(d);
  if (d.crossing_count() == 0) throw PreconditionError("Wirtinger search needs at least one crossing");
  if (d.arc_count() > kExactArcGuard)
    throw GuardExceeded("exact Wirtinger search limited to " + std::to_string(kExactArcGuard) + " arcs");
  const detail::MaskDiagram md(d);
  for (int k = 1; k <= std::min(k_max, d.arc_count()); ++k) {
    std::vector<int> chosen;
    if (detail::exact_dfs(md, d.arc_count(), 0, k, 0, chosen)) return {k, chosen};
  }
  return {std::nullopt, {}};
}

// ---------------------------------------------------------------------------
// Budgeted seed search

struct BridgeBoundCertificate {
  PlaneTree tree;
  Diagram diagram;
  std::vector<int> seeds;
  int bound = 0;
  std::string method;  // structured, greedy or exact
  /// Empty when `diagram` is the diagram passed in; otherwise the flyped
  /// presentation compile(tree, twist_positions) the seeds live on.
  std::vector<int> twist_positions;
};

struct SeedSearchFailure {
  long structured_closures = 0;
  int greedy_restarts = 0;
  int exact_runs = 0;
  int presentations = 0;
  std::string reason;
};

struct SeedSearchOutcome {
  std::optional<BridgeBoundCertificate> certificate;
  SeedSearchFailure failure;
};

inline Diagram compile_presentation(const PlaneTree& tree, const std::vector<int>& twist_positions) {
  CompileOptions opt;
  opt.layout = false;
  opt.twist_positions = &twist_positions;
  return compile(tree, opt);
}

/// Re-checks a certificate from scratch.
inline bool verify_certificate(const BridgeBoundCertificate& cert) {
  if (static_cast<int>(cert.seeds.size()) != cert.bound) return false;
  if (std::set<int>(cert.seeds.begin(), cert.seeds.end()).size() != cert.seeds.size()) return false;
  if (!cert.diagram.is_connected()) return false;
  for (int s : cert.seeds)
    if (s < 0 || s >= cert.diagram.arc_count()) return false;
  if (!cert.twist_positions.empty() &&
      !structurally_equal(cert.diagram, compile_presentation(cert.tree, cert.twist_positions)))
    return false;
  return closure(cert.diagram, Coloring(cert.diagram.arc_count(), cert.seeds)).full();
}

inline nlohmann::json certificate_to_json(const BridgeBoundCertificate& cert) {
  nlohmann::json j = {{"tree", serialize(cert.tree)},
                      {"seeds", cert.seeds},
                      {"bound", cert.bound},
                      {"verified", verify_certificate(cert)}};
  if (!cert.twist_positions.empty()) j["twist_positions"] = cert.twist_positions;
  return j;
}

namespace detail {

/// Growth order of subtrees S_0 (a path through the root) up to T. Each step
/// adds vertices and the number of seeds the flattening number grows by.
struct InductionStep {
  std::vector<VertexId> added;
  int seeds = 0;
};

struct InductionPlan {
  std::vector<VertexId> base;
  std::vector<InductionStep> steps;
};

inline std::vector<VertexId> subtree_vertices(const PlaneTree& tree, VertexId v, const std::vector<char>& alive) {
  std::vector<VertexId> out{v};
  for (std::size_t i = 0; i < out.size(); ++i)
    for (VertexId c : tree.children(out[i]))
      if (alive[c]) out.push_back(c);
  return out;
}

/// Peels extremal ramification points (all child directions straight, the
/// parent direction leading to another branching point) until at most one
/// branching point remains; that star is split into a path plus its other
/// branches.
inline InductionPlan plan_induction(const PlaneTree& tree) {
  const int n = tree.size();
  std::vector<char> alive(n, 1);
  auto valency = [&](VertexId v) {
    int k = (v != tree.root() && alive[tree.parent(v)]) ? 1 : 0;
    for (VertexId c : tree.children(v)) k += alive[c];
    return k;
  };
  auto alive_children = [&](VertexId v) {
    std::vector<VertexId> out;
    for (VertexId c : tree.children(v))
      if (alive[c]) out.push_back(c);
    return out;
  };
  auto straight_down = [&](VertexId c) {
    for (VertexId cur = c;;) {
      auto kids = alive_children(cur);
      if (kids.empty()) return true;
      if (kids.size() > 1) return false;
      cur = kids[0];
    }
  };
  std::vector<InductionStep> peeled;
  while (true) {
    std::vector<VertexId> bps;
    for (VertexId v = 0; v < n; ++v)
      if (alive[v] && valency(v) >= 3) bps.push_back(v);
    if (bps.size() <= 1) break;
    std::optional<VertexId> pick;
    for (VertexId c : bps) {
      if (c == tree.root()) continue;
      auto kids = alive_children(c);
      if (std::all_of(kids.begin(), kids.end(), straight_down)) {
        pick = c;
        break;
      }
    }
    if (!pick) throw Error("internal: no extremal ramification point found");
    peeled.push_back({subtree_vertices(tree, *pick, alive), valency(*pick) - 2});
    for (VertexId v : peeled.back().added) alive[v] = 0;
  }

  InductionPlan plan;
  std::optional<VertexId> center;
  for (VertexId v = 0; v < n; ++v)
    if (alive[v] && valency(v) >= 3) center = v;
  if (!center) {
    for (VertexId v = 0; v < n; ++v)
      if (alive[v]) plan.base.push_back(v);
  } else {
    // Path = the root's branch (if the root is not the centre) + centre + the
    // first child branch; the remaining child branches form one step.
    std::vector<char> in_base(n, 0);
    for (VertexId v = 0; v < n; ++v)
      if (alive[v]) in_base[v] = 1;
    auto kids = alive_children(*center);
    const std::size_t keep = (*center == tree.root()) ? 2 : 1;
    InductionStep step;
    step.seeds = valency(*center) - 2;
    for (std::size_t i = keep; i < kids.size(); ++i)
      for (VertexId v : subtree_vertices(tree, kids[i], alive)) {
        in_base[v] = 0;
        step.added.push_back(v);
      }
    for (VertexId v = 0; v < n; ++v)
      if (in_base[v]) plan.base.push_back(v);
    plan.steps.push_back(std::move(step));
  }
  for (auto it = peeled.rbegin(); it != peeled.rend(); ++it) plan.steps.push_back(std::move(*it));
  return plan;
}

struct StructuredSearch {
  std::vector<Diagram> levels;               // compiled subtree per level
  std::vector<std::vector<int>> region_arcs;  // candidate new seed arcs per level
  std::vector<int> targets;                  // f(S_i) + 2
  long closures = 0;
  long closure_budget = 200'000;
  int successes_per_level = 6;

  std::optional<std::vector<PortRef>> run() { return dfs(0, {}); }

  std::optional<std::vector<PortRef>> dfs(std::size_t level, const std::vector<PortRef>& handles) {
    if (level == levels.size()) return handles;
    const Diagram& d = levels[level];
    const Propagator close(d);
    std::vector<int> seeds;
    std::vector<PortRef> kept;
    for (const auto& h : handles) {
      auto a = d.arc_at(h);
      if (!a) throw Error("internal: seed handle missing from subtree diagram");
      if (std::find(seeds.begin(), seeds.end(), *a) == seeds.end()) {
        seeds.push_back(*a);
        kept.push_back(h);
      }
    }
    const int need = targets[level] - static_cast<int>(seeds.size());
    if (need < 0) return std::nullopt;
    std::vector<int> pool;
    for (int a : region_arcs[level])
      if (std::find(seeds.begin(), seeds.end(), a) == seeds.end()) pool.push_back(a);
    if (static_cast<int>(pool.size()) < need) return std::nullopt;

    int successes = 0;
    std::vector<int> idx(need);
    for (int i = 0; i < need; ++i) idx[i] = i;
    while (true) {
      if (++closures > closure_budget) return std::nullopt;
      Coloring c(d.arc_count(), seeds);
      for (int i : idx) c.insert(pool[i]);
      if (close(std::move(c)).full()) {
        std::vector<PortRef> next = kept;
        for (int i : idx) next.push_back(*d.port_on_arc(pool[i]));
        if (auto found = dfs(level + 1, next)) return found;
        if (++successes >= successes_per_level) return std::nullopt;
      }
      // next combination in lexicographic order
      int k = need - 1;
      while (k >= 0 && idx[k] == static_cast<int>(pool.size()) - need + k) --k;
      if (k < 0) return std::nullopt;
      ++idx[k];
      for (int j = k + 1; j < need; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
};

/// Induction-guided search on compile(tree, positions); nullopt on failure.
inline std::optional<std::vector<int>> structured_seeds(const PlaneTree& tree, const Diagram& d,
                                                        const std::vector<int>* positions, int budget,
                                                        long& closures) {
  const auto plan = plan_induction(tree);
  StructuredSearch search;
  std::vector<char> keep(tree.size(), 0);
  auto add_level = [&](const std::vector<VertexId>& added) {
    for (VertexId v : added) keep[v] = 1;
    auto [sub, original] = induced_subtree(tree, keep);
    std::vector<int> sub_positions;
    if (positions) {
      // Slot among the kept children that precede the original slot.
      for (VertexId o : original) {
        const auto& kids = tree.children(o);
        int slot = 0;
        for (int i = 0; i < positions->at(o); ++i) slot += keep[kids[i]];
        sub_positions.push_back(slot);
      }
    }
    CompileOptions opt;
    opt.layout = false;
    opt.vertex_labels = &original;
    if (positions) opt.twist_positions = &sub_positions;
    Diagram level = compile(sub, opt);
    std::set<VertexId> fresh(added.begin(), added.end());
    std::set<int> region;
    for (int i = 0; i < level.crossing_count(); ++i)
      if (fresh.contains(level.tags()[i].vertex))
        for (int k = 0; k < 4; ++k) region.insert(level.arc_at(i, k));
    search.targets.push_back(flattening_number(sub).value + 2);
    search.region_arcs.emplace_back(region.begin(), region.end());
    search.levels.push_back(std::move(level));
  };
  add_level(plan.base);
  for (const auto& step : plan.steps) add_level(step.added);
  if (search.targets.back() != budget) return std::nullopt;
  auto handles = search.run();
  closures += search.closures;
  if (!handles) return std::nullopt;
  std::vector<int> seeds;
  for (const auto& h : *handles) {
    auto a = d.arc_at(h);
    if (!a) return std::nullopt;
    seeds.push_back(*a);
  }
  return seeds;
}

inline std::optional<std::vector<int>> greedy_seeds(const Diagram& d, int budget, int restarts, std::mt19937_64& rng,
                                                    int& counter) {
  const Propagator close(d);
  std::vector<int> degree(d.arc_count(), 0);
  for (const auto& c : d.crossings()) ++degree[c.over];
  std::vector<int> by_degree(d.arc_count());
  for (int a = 0; a < d.arc_count(); ++a) by_degree[a] = a;
  std::stable_sort(by_degree.begin(), by_degree.end(), [&](int a, int b) { return degree[a] > degree[b]; });
  for (int r = 0; r < restarts; ++r) {
    ++counter;
    std::vector<int> seeds{by_degree[static_cast<std::size_t>(r) % by_degree.size()]};
    Coloring cur = close(Coloring(d.arc_count(), seeds));
    while (!cur.full() && static_cast<int>(seeds.size()) < budget) {
      int best_size = -1;
      std::vector<int> best;
      for (int a = 0; a < d.arc_count(); ++a) {
        if (cur.contains(a)) continue;
        Coloring trial = cur;
        trial.insert(a);
        const int size = close(std::move(trial)).size();
        if (size > best_size) {
          best_size = size;
          best = {a};
        } else if (size == best_size) {
          best.push_back(a);
        }
      }
      const int a = best[std::uniform_int_distribution<std::size_t>(0, best.size() - 1)(rng)];
      seeds.push_back(a);
      cur.insert(a);
      cur = close(std::move(cur));
    }
    if (cur.full()) return seeds;
  }
  return std::nullopt;
}

inline std::vector<int> pad_seeds(std::vector<int> seeds, int bound, int arcs) {
  for (int a = 0; a < arcs && static_cast<int>(seeds.size()) < bound; ++a)
    if (std::find(seeds.begin(), seeds.end(), a) == seeds.end()) seeds.push_back(a);
  std::sort(seeds.begin(), seeds.end());
  return seeds;
}

}  // namespace detail

inline constexpr int kGreedyRestarts = 64;
inline constexpr int kFlypedPresentations = 24;

/// Finds `budget` seeds colouring all of d = compile(tree). Follows the
/// inductive growth of the tree (two seeds on a base path, then the flattening
/// increment of each added ramification placed among the arcs it creates),
/// then randomized greedy, then exact search on small diagrams.
///
/// When d itself admits no such seed set the search moves to flyped
/// presentations of the same link: each twist region is slid to another slot
/// among its vertex's child tangles (see CompileOptions::twist_positions).
/// The certificate then records the presentation it was found on.
inline SeedSearchOutcome seed_search_budget(const PlaneTree& tree, const Diagram& d, int budget, std::uint64_t rng_seed) {
  detail::require_connected(d);
  SeedSearchOutcome outcome;
  auto& failure = outcome.failure;
  std::mt19937_64 rng(rng_seed);

  auto attempt = [&](const Diagram& diagram, const std::vector<int>* positions, bool use_structure, int restarts) {
    ++failure.presentations;
    auto accept = [&](std::vector<int> seeds, std::string method) {
      BridgeBoundCertificate cert{tree,   diagram, detail::pad_seeds(std::move(seeds), budget, diagram.arc_count()),
                                  budget, std::move(method), positions ? *positions : std::vector<int>{}};
      if (!verify_certificate(cert)) return false;
      outcome.certificate = std::move(cert);
      return true;
    };
    if (use_structure)
      if (auto s = detail::structured_seeds(tree, diagram, positions, budget, failure.structured_closures))
        if (accept(*s, "structured")) return true;
    if (auto s = detail::greedy_seeds(diagram, budget, restarts, rng, failure.greedy_restarts))
      if (accept(*s, "greedy")) return true;
    if (diagram.arc_count() <= kExactArcGuard && diagram.crossing_count() > 0) {
      ++failure.exact_runs;
      auto exact = wirtinger_exact(diagram, budget);
      if (exact.value && accept(exact.seeds, "exact")) return true;
    }
    return false;
  };

  if (d.arc_count() < budget) {
    // Only the one-crossing unknot diagrams: f + 2 distinct arcs do not exist.
    failure.reason = "diagram has fewer arcs than the seed budget";
    return outcome;
  }
  if (attempt(d, nullptr, d.has_ports(), kGreedyRestarts)) return outcome;

  // Flype fallback: twist after the first child, after the last child, then
  // random slots.
  for (int round = 0; round < kFlypedPresentations; ++round) {
    std::vector<int> positions(tree.size());
    for (VertexId v = 0; v < tree.size(); ++v) {
      const int k = static_cast<int>(tree.children(v).size());
      if (round == 0) positions[v] = std::min(1, k);
      else if (round == 1) positions[v] = k;
      else positions[v] = std::uniform_int_distribution<int>(0, k)(rng);
    }
    if (attempt(compile_presentation(tree, positions), &positions, true, 8)) return outcome;
  }
  failure.reason = "no seed set of size " + std::to_string(budget) + " found on " +
                   std::to_string(failure.presentations) + " presentations";
  return outcome;
}

/// Thrown when no f(T)+2 seed set could be found.
class PropagationFailure : public Error {
 public:
  using Error::Error;
};

/// Certificate that beta(L(T)) <= f(T) + 2.
inline BridgeBoundCertificate bridge_upper_bound(const PlaneTree& tree, std::uint64_t rng_seed = 0) {
  Diagram d = compile(tree);
  if (!d.is_connected()) throw PreconditionError("compiled diagram is disconnected: " + serialize(tree));
  const int bound = flattening_number(tree).value + 2;
  if (d.arc_count() < bound)
    throw PreconditionError("compiled diagram has " + std::to_string(d.arc_count()) + " arcs, fewer than f + 2 = " +
                            std::to_string(bound) + ": " + serialize(tree));
  auto outcome = seed_search_budget(tree, d, bound, rng_seed);
  if (!outcome.certificate)
    throw PropagationFailure("no verified " + std::to_string(bound) + "-seed colouring for " + serialize(tree) + ": " +
                             outcome.failure.reason);
  return std::move(*outcome.certificate);
}

}  // namespace arbor
