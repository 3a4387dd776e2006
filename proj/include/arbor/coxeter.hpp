#pragma once

// Coxeter quotients of arborescent link groups. A labelling of the compiled
// diagram by reflections of the geometric representation is propagated
// through the Wirtinger relations and checked numerically; a consistent,
// surjective labelling certifies mu(L(T)) >= number of generators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "arbor/diagram.hpp"
#include "arbor/error.hpp"
#include "arbor/flatten.hpp"
#include "arbor/plane_tree.hpp"
#include "arbor/tangle.hpp"
#include "arbor/wirtinger.hpp"

namespace arbor {

inline constexpr double kCoxeterTolerance = 1e-9;

struct CoxeterEdge {
  int s = 0;
  int t = 0;
  std::int64_t order = 2;
  friend bool operator==(const CoxeterEdge&, const CoxeterEdge&) = default;
};

class CoxeterGraph {
 public:
  CoxeterGraph() = default;
  CoxeterGraph(int generators, std::vector<CoxeterEdge> edges) : generators_(generators), edges_(std::move(edges)) {
    if (generators_ < 1) throw PreconditionError("Coxeter graph needs at least one generator");
    std::set<std::pair<int, int>> seen;
    for (const auto& e : edges_) {
      if (e.s < 0 || e.t < 0 || e.s >= generators_ || e.t >= generators_)
        throw PreconditionError("Coxeter edge endpoint out of range");
      if (e.s == e.t) throw PreconditionError("Coxeter graph has a loop at generator " + std::to_string(e.s));
      if (e.order < 2) throw PreconditionError("Coxeter edge order must be >= 2");
      if (!seen.insert(std::minmax(e.s, e.t)).second)
        throw PreconditionError("parallel Coxeter edges between " + std::to_string(e.s) + " and " + std::to_string(e.t));
    }
  }

  int generators() const noexcept { return generators_; }
  const std::vector<CoxeterEdge>& edges() const noexcept { return edges_; }

  /// Edge order, or nullopt for a non-adjacent pair (infinite order).
  std::optional<std::int64_t> order(int s, int t) const {
    for (const auto& e : edges_)
      if ((e.s == s && e.t == t) || (e.s == t && e.t == s)) return e.order;
    return std::nullopt;
  }

 private:
  int generators_ = 0;
  std::vector<CoxeterEdge> edges_;
};

/// Reflection matrices M_s = I - 2 e_s (B e_s)^T for the form
/// B(e_s, e_t) = -cos(pi / m_st), -1 for non-adjacent pairs, 1 on the diagonal.
template <class Scalar = double>
std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> geometric_representation(const CoxeterGraph& g) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int n = g.generators();
  Matrix B = Matrix::Identity(n, n);
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t) {
      if (s == t) continue;
      auto m = g.order(s, t);
      B(s, t) = m ? -std::cos(std::numbers::pi_v<Scalar> / static_cast<Scalar>(*m)) : Scalar(-1);
    }
  std::vector<Matrix> out;
  for (int s = 0; s < n; ++s) {
    Matrix M = Matrix::Identity(n, n);
    M.row(s) -= Scalar(2) * B.row(s);
    out.push_back(std::move(M));
  }
  return out;
}

/// Largest Frobenius defect of M_s^2 = I and (M_s M_t)^m = I over all
/// generators and edges.
template <class Matrix>
double relation_residual(const CoxeterGraph& g, const std::vector<Matrix>& M) {
  const int n = g.generators();
  const Matrix I = Matrix::Identity(n, n);
  double worst = 0;
  for (const auto& m : M) worst = std::max(worst, static_cast<double>((m * m - I).norm()));
  for (const auto& e : g.edges()) {
    Matrix P = I;
    const Matrix st = M[e.s] * M[e.t];
    for (std::int64_t k = 0; k < e.order; ++k) P = P * st;
    worst = std::max(worst, static_cast<double>((P - I).norm()));
  }
  return worst;
}

/// Arc id -> generator id on a subset of arcs.
struct GeneratorSeeding {
  std::map<int, int> assignment;

  /// False when the arc already carries a different generator.
  bool assign(int arc, int generator) {
    auto [it, fresh] = assignment.emplace(arc, generator);
    return fresh || it->second == generator;
  }
};

struct RankCertificate {
  PlaneTree tree;
  CoxeterGraph graph;
  GeneratorSeeding seeding;
  double residual = 0;
  int rank = 0;
};

struct LabelingFailure {
  enum class Kind { incomplete, defect, bad_seeding };
  Kind kind = Kind::incomplete;
  int crossing = -1;
  double defect = 0;
  std::string message;
};

struct LabelingOutcome {
  std::optional<RankCertificate> certificate;
  std::optional<LabelingFailure> failure;
};

namespace detail {

using VectorL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

inline MatrixL bilinear_form(const CoxeterGraph& g) {
  const int n = g.generators();
  MatrixL B = MatrixL::Identity(n, n);
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t)
      if (s != t) {
        auto m = g.order(s, t);
        B(s, t) = m ? -std::cos(std::numbers::pi_v<long double> / static_cast<long double>(*m)) : -1.0L;
      }
  return B;
}

/// Distance between the lines spanned by two roots, scaled by their size.
inline double root_defect(const VectorL& a, const VectorL& b) {
  const long double scale = std::max<long double>({1, a.norm(), b.norm()});
  return static_cast<double>(std::min((a - b).norm(), (a + b).norm()) / scale);
}

}  // namespace detail

/// Propagates labels from the seeded arcs through every crossing (other under
/// arc = O * known under * O) and checks every crossing.
///
/// A label w s w^-1 is carried as its root w(e_s): the reflection in root a is
/// v -> v - 2 B(a, v) a, and conjugating the reflection in a by the reflection
/// in b gives the reflection in a - 2 B(b, a) b. Roots keep rounding error
/// linear in the word length, where products of matrices would square it.
/// Equal roots up to sign give equal reflections, so the check is never
/// weaker than comparing matrices.
inline LabelingOutcome verify_labeling(const PlaneTree& tree, const Diagram& d, const CoxeterGraph& graph,
                                       const GeneratorSeeding& seeding) {
  using detail::VectorL;
  LabelingOutcome out;
  auto fail = [&](LabelingFailure::Kind kind, int crossing, double defect, std::string msg) {
    out.failure = LabelingFailure{kind, crossing, defect, std::move(msg)};
    return out;
  };
  const int n = graph.generators();
  double residual = relation_residual(graph, geometric_representation<long double>(graph));
  if (residual > kCoxeterTolerance)
    return fail(LabelingFailure::Kind::defect, -1, residual, "generator relations fail in the representation");
  const auto B = detail::bilinear_form(graph);

  std::vector<std::optional<VectorL>> root(d.arc_count());
  std::set<int> used;
  for (const auto& [arc, gen] : seeding.assignment) {
    if (arc < 0 || arc >= d.arc_count() || gen < 0 || gen >= n)
      return fail(LabelingFailure::Kind::bad_seeding, -1, 0, "seeding refers to an unknown arc or generator");
    root[arc] = VectorL::Unit(n, gen);
    used.insert(gen);
  }
  if (static_cast<int>(used.size()) != n)
    return fail(LabelingFailure::Kind::bad_seeding, -1, 0, "not every generator is seeded");

  auto conjugate = [&](const VectorL& over, const VectorL& a) -> VectorL {
    return a - 2 * over.dot(B * a) * over;
  };
  // Breadth first: each round only uses labels from earlier rounds, keeping
  // conjugation words short.
  while (true) {
    std::vector<std::pair<int, VectorL>> fresh;
    std::set<int> claimed;
    for (const auto& x : d.crossings()) {
      if (!root[x.over]) continue;
      const auto& a = root[x.under_in];
      const auto& b = root[x.under_out];
      if (a && !b && claimed.insert(x.under_out).second) fresh.emplace_back(x.under_out, conjugate(*root[x.over], *a));
      else if (b && !a && claimed.insert(x.under_in).second) fresh.emplace_back(x.under_in, conjugate(*root[x.over], *b));
    }
    if (fresh.empty()) break;
    for (auto& [arc, v] : fresh) root[arc] = std::move(v);
  }
  for (int arc = 0; arc < d.arc_count(); ++arc)
    if (!root[arc])
      return fail(LabelingFailure::Kind::incomplete, -1, 0, "arc " + std::to_string(arc) + " received no label");
  for (const auto& x : d.crossings()) {
    const double defect = detail::root_defect(conjugate(*root[x.over], *root[x.under_in]), *root[x.under_out]);
    residual = std::max(residual, defect);
    if (defect > kCoxeterTolerance)
      return fail(LabelingFailure::Kind::defect, x.id, defect,
                  "crossing " + std::to_string(x.id) + " is inconsistent (defect " + std::to_string(defect) + ")");
  }
  // Each label is a reflection: B(a, a) = 1, i.e. its matrix squares to I.
  for (int arc = 0; arc < d.arc_count(); ++arc) {
    const VectorL& a = *root[arc];
    const double defect = static_cast<double>(std::abs(a.dot(B * a) - 1) / std::max<long double>(1, a.squaredNorm()));
    residual = std::max(residual, defect);
    if (defect > kCoxeterTolerance)
      return fail(LabelingFailure::Kind::defect, -1, defect, "arc " + std::to_string(arc) + " is not a reflection");
  }
  out.certificate = RankCertificate{tree, graph, seeding, residual, n};
  return out;
}

// ---------------------------------------------------------------------------
// Construction for trees with many twigs

/// `designated`: one arc per generator plus the twist regions of branching
/// points. `boundary`: additionally every end of every twig tangle, each with
/// the label of the gap it leaves into.
enum class SeedingStyle { designated, boundary };

struct CoxeterConstruction {
  PlaneTree tree;    // as given
  PlaneTree rooted;  // rooted at a branching point; its diagram is labelled
  Diagram diagram;
  CoxeterGraph graph;
  GeneratorSeeding seeding;
};

namespace detail {

inline std::vector<Weight> twig_weights(const PlaneTree& tree, VertexId c) {
  std::vector<Weight> w{tree.weight(c)};
  while (!tree.children(c).empty()) {
    c = tree.children(c).front();
    w.push_back(tree.weight(c));
  }
  return w;
}

inline VertexId nearest_branching_point(const PlaneTree& tree) {
  std::vector<int> dist(tree.size(), -1);
  std::vector<VertexId> queue{tree.root()};
  dist[tree.root()] = 0;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    const VertexId v = queue[i];
    if (tree.valency(v) >= 3) return v;
    for (VertexId u : tree.neighbors(v))
      if (dist[u] < 0) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
  }
  return kNoVertex;
}

}  // namespace detail

/// One generator x_b per branching point, shared with the gap it sits in, and
/// a cycle x_b, g_1, ..., x_b through the gaps between b's twigs. The twig
/// between gaps labelled s and t contributes (st)^alpha with alpha the
/// numerator of the twig's continued fraction.
inline CoxeterConstruction build_coxeter_graph(const PlaneTree& tree, SeedingStyle style = SeedingStyle::designated) {
  const auto cls = classify(tree);
  if (cls.branching_points.empty())
    throw PreconditionError("tree has no branching point; use verify_two_bridge for paths");
  if (!cls.has_many_twigs) throw PreconditionError("tree does not have many twigs");
  const auto bps = cls.branching_points;
  std::set<VertexId> bp_set(bps.begin(), bps.end());
  for (VertexId v = 0; v < tree.size(); ++v) {
    if (bp_set.contains(v)) continue;
    const Weight w = tree.weight(v);
    if (w == 0 || w == 1 || w == -1)
      throw PreconditionError("twig vertex " + std::to_string(v) + " has forbidden weight " + std::to_string(w));
  }

  PlaneTree rooted = tree.valency(tree.root()) >= 3 ? tree : reroot(tree, detail::nearest_branching_point(tree));
  CompileOptions opt;
  opt.layout = false;
  auto compiled = compile_with_ports(rooted, opt);
  const Diagram& d = compiled.diagram;

  int generators = 0;
  std::vector<CoxeterEdge> edges;
  GeneratorSeeding seeding;
  std::vector<int> x(tree.size(), -1);
  auto seed_port = [&](const std::optional<PortRef>& port, int gen) {
    if (!port) return false;
    auto arc = d.arc_at(*port);
    if (!arc) throw Error("internal: boundary port missing from diagram");
    if (!seeding.assign(*arc, gen)) throw Error("internal: conflicting generator on arc " + std::to_string(*arc));
    return true;
  };

  x[rooted.root()] = generators++;
  for (VertexId b : rooted.preorder()) {
    if (!bp_set.contains(b)) continue;
    const int xb = x[b];
    for (int i = 0; i < d.crossing_count(); ++i)
      if (d.tags()[i].vertex == b)
        for (int k = 0; k < 4; ++k)
          if (!seeding.assign(d.arc_at(i, k), xb)) throw Error("internal: twist region arcs conflict");

    std::vector<VertexId> twigs;
    for (VertexId c : rooted.children(b))
      if (!bp_set.contains(c)) twigs.push_back(c);
    int cur = xb;
    for (VertexId c : rooted.children(b)) {
      if (bp_set.contains(c)) {
        x[c] = cur;
        continue;
      }
      const bool first = c == twigs.front();
      const bool last = c == twigs.back();
      const auto& ports = compiled.boundary_ports[c];
      if (first) seed_port(ports[static_cast<int>(Side::NE)], xb);
      const int next = last ? xb : generators++;
      if (style == SeedingStyle::boundary) {
        seed_port(ports[static_cast<int>(Side::NE)], cur);
        seed_port(ports[static_cast<int>(Side::NW)], cur);
        seed_port(ports[static_cast<int>(Side::SE)], next);
        seed_port(ports[static_cast<int>(Side::SW)], next);
      }
      const auto weights = detail::twig_weights(rooted, c);
      const auto alpha = std::llabs(cf_value(std::span<const Weight>(weights)).numerator);
      edges.push_back({cur, next, alpha});
      if (!last && !seed_port(ports[static_cast<int>(Side::SE)], next)) seed_port(ports[static_cast<int>(Side::SW)], next);
      cur = next;
    }
  }
  const int f2 = flattening_number(tree).value + 2;
  if (generators != f2)
    throw Error("internal: built " + std::to_string(generators) + " generators, expected f + 2 = " + std::to_string(f2));
  return {tree, rooted, d, CoxeterGraph(generators, std::move(edges)), std::move(seeding)};
}

/// Builds and verifies the quotient for a tree with many twigs. The
/// designated seeding is tried first; when it does not propagate to every arc
/// the boundary seeding (same graph, more seeded arcs) is verified instead.
inline LabelingOutcome rank_lower_bound(const PlaneTree& tree) {
  auto built = build_coxeter_graph(tree, SeedingStyle::designated);
  auto out = verify_labeling(tree, built.diagram, built.graph, built.seeding);
  if (out.certificate || out.failure->kind != LabelingFailure::Kind::incomplete) return out;
  built = build_coxeter_graph(tree, SeedingStyle::boundary);
  return verify_labeling(tree, built.diagram, built.graph, built.seeding);
}

/// Rank-two certificate for the two-bridge link closing rational_tangle(weights).
inline LabelingOutcome verify_two_bridge(const std::vector<Weight>& weights) {
  if (weights.empty()) throw PreconditionError("two-bridge check needs at least one weight");
  const auto alpha = std::llabs(cf_value(std::span<const Weight>(weights)).numerator);
  if (alpha < 2) throw PreconditionError("|numerator| = " + std::to_string(alpha) + " gives no rank-two quotient");
  std::vector<std::vector<VertexId>> children(weights.size());
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) children[i] = {static_cast<VertexId>(i + 1)};
  PlaneTree path(weights, std::move(children), 0);
  CompileOptions opt;
  opt.layout = false;
  const Diagram d = compile(path, opt);
  const CoxeterGraph graph(2, {{0, 1, alpha}});
  // The two bridge arcs: the first pair, in lexicographic order, that colours
  // the whole diagram.
  for (int a = 0; a < d.arc_count(); ++a)
    for (int b = a + 1; b < d.arc_count(); ++b) {
      if (!detail::propagate(d, Coloring(d.arc_count(), {a, b})).full()) continue;
      GeneratorSeeding seeding;
      seeding.assign(a, 0);
      seeding.assign(b, 1);
      auto outcome = verify_labeling(path, d, graph, seeding);
      if (outcome.certificate) return outcome;
    }
  LabelingOutcome out;
  out.failure = LabelingFailure{LabelingFailure::Kind::incomplete, -1, 0, "no two-arc seeding labels the diagram"};
  return out;
}

inline nlohmann::json rank_certificate_to_json(const RankCertificate& cert) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : cert.graph.edges()) edges.push_back({{"s", e.s}, {"t", e.t}, {"order", e.order}});
  return {{"tree", serialize(cert.tree)},
          {"generators", cert.graph.generators()},
          {"edges", edges},
          {"residual", cert.residual},
          {"mu_lower_bound", cert.rank}};
}

// ---------------------------------------------------------------------------
// Both bounds together

/// `unavailable`: the tree or diagram does not meet the bound's hypotheses.
/// `failed`: the hypotheses hold but no certificate was produced.
enum class BoundStatus { certified, unavailable, failed };

inline const char* to_string(BoundStatus s) {
  switch (s) {
    case BoundStatus::certified: return "certified";
    case BoundStatus::unavailable: return "unavailable";
    case BoundStatus::failed: return "failed";
  }
  return "?";
}

struct RankBoundsReport {
  PlaneTree tree;
  int f_plus_2 = 0;
  std::optional<BridgeBoundCertificate> upper;
  std::optional<RankCertificate> lower;
  BoundStatus upper_status = BoundStatus::unavailable;
  BoundStatus lower_status = BoundStatus::unavailable;
  std::string upper_note;
  std::string lower_note;

  /// beta = mu = f + 2, established when both certificates exist.
  bool equality() const { return upper && lower && upper->bound == f_plus_2 && lower->rank == f_plus_2; }
};

inline RankBoundsReport meridional_rank_bounds(const PlaneTree& tree, std::uint64_t rng_seed = 0) {
  RankBoundsReport report{.tree = tree, .f_plus_2 = flattening_number(tree).value + 2, .upper = {}, .lower = {},
                          .upper_status = BoundStatus::unavailable, .lower_status = BoundStatus::unavailable,
                          .upper_note = {}, .lower_note = {}};
  try {
    report.upper = bridge_upper_bound(tree, rng_seed);
    report.upper_status = BoundStatus::certified;
  } catch (const PreconditionError& e) {
    report.upper_note = e.what();
  } catch (const Error& e) {
    report.upper_status = BoundStatus::failed;
    report.upper_note = e.what();
  }
  auto take = [&](LabelingOutcome out) {
    if (out.certificate) {
      out.certificate->tree = tree;
      report.lower = std::move(out.certificate);
      report.lower_status = BoundStatus::certified;
    } else {
      report.lower_status = BoundStatus::failed;
      report.lower_note = out.failure->message;
    }
  };
  const auto cls = classify(tree);
  try {
    if (cls.is_path) {
      std::vector<Weight> w;
      for (VertexId v : reroot(tree, tree.leaves().front()).preorder()) w.push_back(tree.weight(v));
      take(verify_two_bridge(w));
    } else if (!cls.has_many_twigs) {
      report.lower_note = "tree does not have many twigs";
    } else {
      take(rank_lower_bound(tree));
    }
  } catch (const PreconditionError& e) {
    report.lower_note = e.what();
  } catch (const Error& e) {
    report.lower_status = BoundStatus::failed;
    report.lower_note = e.what();
  }
  return report;
}

inline nlohmann::json rank_bounds_to_json(const RankBoundsReport& r) {
  nlohmann::json j = {{"tree", serialize(r.tree)},
                      {"f_plus_2", r.f_plus_2},
                      {"equality", r.equality()},
                      {"upper_status", to_string(r.upper_status)},
                      {"lower_status", to_string(r.lower_status)}};
  j["upper"] = r.upper ? certificate_to_json(*r.upper) : nlohmann::json(nullptr);
  j["lower"] = r.lower ? rank_certificate_to_json(*r.lower) : nlohmann::json(nullptr);
  if (!r.upper_note.empty()) j["upper_note"] = r.upper_note;
  if (!r.lower_note.empty()) j["lower_note"] = r.lower_note;
  return j;
}

}  // namespace arbor
