#pragma once

// Rational-tangle algebra and compilation of plane trees into link diagrams.
//
// Convention: twist(w) is a horizontal row of |w| crossings between two
// strands (positive w: over strand runs SW to NE), rotation is a quarter turn
// counterclockwise, and a tree compiles as
//   Tangle(v) = twist(w(v)) + rot(Tangle(c1)) + ... + rot(Tangle(ck))
// closed by the numerator closure (NW-NE, SW-SE).

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arbor/diagram.hpp"
#include "arbor/error.hpp"
#include "arbor/plane_tree.hpp"
#include "arbor/union_find.hpp"

namespace arbor {

// ---------------------------------------------------------------------------
// Extended rationals

/// alpha/beta in lowest terms with beta >= 0; infinity is 1/0.
struct Fraction {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;

  static Fraction make(std::int64_t num, std::int64_t den) {
    if (num == 0 && den == 0) throw PreconditionError("0/0 is not an extended rational");
    if (den == 0) return {1, 0};
    const std::int64_t g = std::gcd(num, den);
    num /= g;
    den /= g;
    if (den < 0) {
      num = -num;
      den = -den;
    }
    return {num, den};
  }

  bool is_infinite() const noexcept { return denominator == 0; }
  friend bool operator==(const Fraction&, const Fraction&) = default;
};

namespace detail {

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw PreconditionError("continued fraction overflows 64 bits");
  return r;
}

inline std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) throw PreconditionError("continued fraction overflows 64 bits");
  return r;
}

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw PreconditionError("continued fraction overflows 64 bits");
  return r;
}

}  // namespace detail

/// a1 - 1/(a2 - 1/(... - 1/an)), exact, with 1/0 = infinity allowed anywhere.
inline Fraction cf_value(std::span<const Weight> weights) {
  if (weights.empty()) throw PreconditionError("continued fraction needs at least one term");
  // Projective pair (p, q) = p/q, folded right to left: a - q/p = (a p - q)/p.
  std::int64_t p = weights.back(), q = 1;
  for (std::size_t i = weights.size() - 1; i-- > 0;) {
    const std::int64_t np = detail::checked_sub(detail::checked_mul(weights[i], p), q);
    q = p;
    p = np;
  }
  return Fraction::make(p, q);
}

inline Fraction cf_value(std::initializer_list<Weight> weights) {
  return cf_value(std::span<const Weight>(weights.begin(), weights.size()));
}

// ---------------------------------------------------------------------------
// Tangles

/// Boundary ends of a tangle; they sit at the corners of its bounding box.
enum class Side : int { NW = 0, NE = 1, SW = 2, SE = 3 };

namespace detail {

// Wire end encoding: >= 0 is a crossing port (4 * crossing + corner),
// boundary sides are -1 - side, closed loops use kLoopEnd, and gluing uses
// temporary labels below kGlueBase.
inline constexpr int kLoopEnd = -100;
inline constexpr int kGlueBase = -200;

inline constexpr int side_end(Side s) { return -1 - static_cast<int>(s); }

struct TangleCrossing {
  CrossingTag tag;
  int sign = 1;
  std::array<Point, 4> corners{};
};

struct Wire {
  std::array<int, 2> ends{};
  std::vector<Point> path;  // from ends[0] to ends[1]; empty without layout
};

}  // namespace detail

class Tangle {
 public:
  /// Horizontal twist region of |w| crossings; w = 0 is the crossingless
  /// horizontal tangle (NW-NE, SW-SE). `vertex` tags the crossings.
  static Tangle twist(Weight w, VertexId vertex = kNoVertex, bool layout = true) {
    Tangle t;
    t.layout_ = layout;
    t.fraction_ = Fraction::make(w, 1);
    const int n = static_cast<int>(std::llabs(w));
    const int sign = w >= 0 ? 1 : -1;
    using detail::side_end;
    if (n == 0) {
      t.width_ = 1;
      t.height_ = 1;
      t.wires_.push_back({{side_end(Side::NW), side_end(Side::NE)}, t.path({{0, 0}, {1, 0}})});
      t.wires_.push_back({{side_end(Side::SW), side_end(Side::SE)}, t.path({{0, 1}, {1, 1}})});
      return t;
    }
    t.width_ = n;
    t.height_ = 1;
    for (int j = 0; j < n; ++j) {
      detail::TangleCrossing c;
      c.tag = {vertex, j};
      c.sign = sign;
      c.corners = {Point{double(j), 0}, Point{double(j + 1), 0}, Point{double(j + 1), 1}, Point{double(j), 1}};
      t.crossings_.push_back(c);
    }
    auto port = [](int crossing, int corner) { return 4 * crossing + corner; };
    t.wires_.push_back({{side_end(Side::NW), port(0, kCornerNW)}, t.path({{0, 0}, {0, 0}})});
    t.wires_.push_back({{side_end(Side::SW), port(0, kCornerSW)}, t.path({{0, 1}, {0, 1}})});
    for (int j = 0; j + 1 < n; ++j) {
      const double x = j + 1;
      t.wires_.push_back({{port(j, kCornerNE), port(j + 1, kCornerNW)}, t.path({{x, 0}, {x, 0}})});
      t.wires_.push_back({{port(j, kCornerSE), port(j + 1, kCornerSW)}, t.path({{x, 1}, {x, 1}})});
    }
    t.wires_.push_back({{port(n - 1, kCornerNE), side_end(Side::NE)}, t.path({{double(n), 0}, {double(n), 0}})});
    t.wires_.push_back({{port(n - 1, kCornerSE), side_end(Side::SE)}, t.path({{double(n), 1}, {double(n), 1}})});
    return t;
  }

  /// Quarter turn counterclockwise: NW <- NE, SW <- NW, SE <- SW, NE <- SE.
  Tangle rotated() const {
    Tangle t = *this;
    auto map = [w = width_](Point p) { return Point{p.y, w - p.x}; };
    for (auto& c : t.crossings_)
      for (auto& p : c.corners) p = map(p);
    for (auto& wire : t.wires_) {
      for (auto& p : wire.path) p = map(p);
      for (int& e : wire.ends) e = rotate_end(e);
    }
    for (auto& b : t.boxes_) {
      const Point a = map({b.x0, b.y0}), c = map({b.x1, b.y1});
      b = {b.vertex, b.parent, std::min(a.x, c.x), std::min(a.y, c.y), std::max(a.x, c.x), std::max(a.y, c.y)};
    }
    std::swap(t.width_, t.height_);
    if (fraction_) {
      // F -> -1/F
      t.fraction_ = fraction_->is_infinite() ? Fraction{0, 1} : Fraction::make(-fraction_->denominator, fraction_->numerator);
    }
    return t;
  }

  /// Half turn about the horizontal axis: the picture is mirrored top to
  /// bottom and every crossing changes over and under. This is an isotopy of
  /// the tangle, with NW <-> SW and NE <-> SE.
  Tangle flipped() const {
    Tangle t = *this;
    auto map = [h = height_](Point p) { return Point{p.x, h - p.y}; };
    for (auto& c : t.crossings_) {
      for (auto& p : c.corners) p = map(p);
      c.sign = -c.sign;
    }
    for (auto& wire : t.wires_) {
      for (auto& p : wire.path) p = map(p);
      for (int& e : wire.ends) {
        if (e < 0 && e > detail::kLoopEnd) e = detail::side_end(static_cast<Side>(static_cast<int>(-1 - e) ^ 2));
      }
    }
    for (auto& b : t.boxes_) {
      const double y0 = height_ - b.y1, y1 = height_ - b.y0;
      b.y0 = y0;
      b.y1 = y1;
    }
    return t;
  }

  /// Horizontal sum: left.NE-right.NW and left.SE-right.SW are glued.
  friend Tangle tangle_sum(const Tangle& left, const Tangle& right) {
    using detail::side_end;
    constexpr double kGap = 0.5;
    Tangle t;
    t.layout_ = left.layout_ && right.layout_;
    const double H = std::max(left.height_, right.height_);
    const double off = left.width_ + kGap;
    const int offset = 4 * static_cast<int>(left.crossings_.size());
    const int glue_top_l = detail::kGlueBase, glue_top_r = detail::kGlueBase - 1;
    const int glue_bot_l = detail::kGlueBase - 2, glue_bot_r = detail::kGlueBase - 3;

    t.crossings_ = left.crossings_;
    for (auto c : right.crossings_) {
      for (auto& p : c.corners) p.x += off;
      t.crossings_.push_back(c);
    }
    for (auto w : left.wires_) {
      for (int& e : w.ends) {
        if (e == side_end(Side::NE)) e = glue_top_l;
        else if (e == side_end(Side::SE)) e = glue_bot_l;
      }
      t.wires_.push_back(std::move(w));
    }
    for (auto w : right.wires_) {
      for (auto& p : w.path) p.x += off;
      for (int& e : w.ends) {
        if (e >= 0) e += offset;
        else if (e == side_end(Side::NW)) e = glue_top_r;
        else if (e == side_end(Side::SW)) e = glue_bot_r;
      }
      t.wires_.push_back(std::move(w));
    }
    t.boxes_ = left.boxes_;
    for (auto b : right.boxes_) {
      b.x0 += off;
      b.x1 += off;
      t.boxes_.push_back(b);
    }
    if (t.layout_) {
      if (left.height_ < H) {
        t.extend(glue_bot_l, {left.width_, H});
        t.extend(side_end(Side::SW), {0, H});
      }
      if (right.height_ < H) {
        t.extend(glue_bot_r, {off, H});
        t.extend(side_end(Side::SE), {off + right.width_, H});
      }
    }
    t.join(glue_top_l, glue_top_r);
    t.join(glue_bot_l, glue_bot_r);
    t.width_ = off + right.width_;
    t.height_ = H;
    t.fraction_ = add(left.fraction_, right.fraction_);
    return t;
  }

  int crossing_count() const noexcept { return static_cast<int>(crossings_.size()); }
  double width() const noexcept { return width_; }
  double height() const noexcept { return height_; }

  /// Bookkept fraction; exact for rational tangles, absent when undefined.
  const std::optional<Fraction>& fraction() const noexcept { return fraction_; }

  /// Boundary end reached by following the strand that starts at `s`.
  Side partner(Side s) const {
    int end = detail::side_end(s);
    while (true) {
      const auto [wire, at] = find_end(end);
      const int other = wires_[wire].ends[1 - at];
      if (other < 0) return static_cast<Side>(-1 - other);
      // Straight through the crossing: NW<->SE, NE<->SW.
      end = (other & ~3) | ((other & 3) ^ 2);
    }
  }

  /// Crossing port (tag, corner) that the strand from side `s` enters first,
  /// or nullopt when that strand reaches another side without crossings.
  std::optional<PortRef> boundary_port(Side s) const {
    const auto [wire, at] = find_end(detail::side_end(s));
    const int other = wires_[wire].ends[1 - at];
    if (other < 0) return std::nullopt;
    return PortRef{crossings_[other / 4].tag, other % 4};
  }

  /// Records the current bounding box as the box of tree vertex `vertex`.
  void mark_box(VertexId vertex, VertexId parent) { boxes_.push_back({vertex, parent, 0, 0, width_, height_}); }

  /// Numerator closure: NW-NE and SW-SE.
  friend Diagram numerator_closure(const Tangle& tangle) {
    using detail::side_end;
    Tangle t = tangle;
    constexpr double kLift = 0.75;
    if (t.layout_) {
      t.extend(side_end(Side::NW), {0, -kLift});
      t.extend(side_end(Side::NE), {t.width_, -kLift});
      t.extend(side_end(Side::SW), {0, t.height_ + kLift});
      t.extend(side_end(Side::SE), {t.width_, t.height_ + kLift});
    }
    t.join(side_end(Side::NW), side_end(Side::NE));
    t.join(side_end(Side::SW), side_end(Side::SE));
    return t.to_diagram();
  }

 private:
  Tangle() = default;

  std::vector<Point> path(std::initializer_list<Point> pts) const {
    return layout_ ? std::vector<Point>(pts) : std::vector<Point>{};
  }

  static int rotate_end(int e) {
    if (e >= 0 || e <= detail::kLoopEnd) return e;
    switch (static_cast<Side>(-1 - e)) {
      case Side::NE: return detail::side_end(Side::NW);
      case Side::NW: return detail::side_end(Side::SW);
      case Side::SW: return detail::side_end(Side::SE);
      case Side::SE: return detail::side_end(Side::NE);
    }
    return e;
  }

  static std::optional<Fraction> add(const std::optional<Fraction>& a, const std::optional<Fraction>& b) {
    if (!a || !b) return std::nullopt;
    if (a->is_infinite() && b->is_infinite()) return std::nullopt;
    if (a->is_infinite() || b->is_infinite()) return Fraction{1, 0};
    using namespace detail;
    return Fraction::make(checked_add(checked_mul(a->numerator, b->denominator), checked_mul(b->numerator, a->denominator)),
                          checked_mul(a->denominator, b->denominator));
  }

  std::pair<std::size_t, int> find_end(int label) const {
    for (std::size_t i = 0; i < wires_.size(); ++i)
      for (int k = 0; k < 2; ++k)
        if (wires_[i].ends[k] == label) return {i, k};
    throw Error("internal: tangle wire end " + std::to_string(label) + " not found");
  }

  void extend(int label, Point p) {
    auto [i, at] = find_end(label);
    auto& path = wires_[i].path;
    if (at == 0) path.insert(path.begin(), p);
    else path.push_back(p);
  }

  /// Joins the wire ending at `a` with the wire ending at `b`.
  void join(int a, int b) {
    auto [i, ai] = find_end(a);
    auto [j, bj] = find_end(b);
    if (i == j) {
      wires_[i].ends = {detail::kLoopEnd, detail::kLoopEnd};
      if (layout_ && !wires_[i].path.empty()) wires_[i].path.push_back(wires_[i].path.front());
      return;
    }
    detail::Wire u = wires_[i], v = wires_[j];
    if (ai == 0) {
      std::reverse(u.path.begin(), u.path.end());
      std::swap(u.ends[0], u.ends[1]);
    }
    if (bj == 1) {
      std::reverse(v.path.begin(), v.path.end());
      std::swap(v.ends[0], v.ends[1]);
    }
    detail::Wire merged{{u.ends[0], v.ends[1]}, std::move(u.path)};
    merged.path.insert(merged.path.end(), v.path.begin(), v.path.end());
    wires_[i] = std::move(merged);
    wires_.erase(wires_.begin() + static_cast<std::ptrdiff_t>(j));
  }

  Diagram to_diagram() const {
    const int nc = static_cast<int>(crossings_.size());
    detail::UnionFind uf(4 * nc);
    for (const auto& w : wires_)
      if (w.ends[0] >= 0 && w.ends[1] >= 0) uf.unite(w.ends[0], w.ends[1]);
    for (int i = 0; i < nc; ++i) {
      const auto roles = corner_roles(crossings_[i].sign);
      uf.unite(4 * i + roles[0], 4 * i + roles[1]);
    }
    std::vector<int> arc_of_root(4 * nc, -1);
    int arcs = 0;
    auto arc = [&](int port) {
      int& a = arc_of_root[uf.find(port)];
      if (a < 0) a = arcs++;
      return a;
    };
    std::vector<DiagramCrossing> out;
    std::vector<std::array<int, 4>> port_arcs(nc);
    std::vector<CrossingTag> tags;
    for (int i = 0; i < nc; ++i) {
      const auto roles = corner_roles(crossings_[i].sign);
      DiagramCrossing c;
      c.id = i;
      c.sign = crossings_[i].sign;
      c.over = arc(4 * i + roles[0]);
      c.under_in = arc(4 * i + roles[2]);
      c.under_out = arc(4 * i + roles[3]);
      out.push_back(c);
      for (int k = 0; k < 4; ++k) port_arcs[i][k] = arc(4 * i + k);
      tags.push_back(crossings_[i].tag);
    }
    std::optional<Layout> layout;
    if (layout_) layout.emplace();
    for (const auto& w : wires_) {
      int a;
      if (w.ends[0] == detail::kLoopEnd) a = arcs++;  // crossingless component
      else a = arc(w.ends[0] >= 0 ? w.ends[0] : w.ends[1]);
      if (layout_) layout->wires.push_back({w.path, a});
    }
    if (layout_) {
      for (const auto& c : crossings_) layout->corners.push_back(c.corners);
      layout->boxes = boxes_;
    }
    Diagram d(arcs, std::move(out));
    d.attach_metadata(std::move(tags), std::move(port_arcs), std::move(layout));
    return d;
  }

  std::vector<detail::TangleCrossing> crossings_;
  std::vector<detail::Wire> wires_;
  std::vector<LayoutBox> boxes_;
  double width_ = 0;
  double height_ = 0;
  bool layout_ = true;
  std::optional<Fraction> fraction_;
};

inline Tangle twist(Weight w) { return Tangle::twist(w); }
inline Tangle tangle_rotate(const Tangle& t) { return t.rotated(); }

/// twist(a1) + rot(twist(a2) + rot(... twist(an))); fraction = cf_value.
inline Tangle rational_tangle(std::span<const Weight> weights) {
  if (weights.empty()) throw PreconditionError("rational tangle needs at least one weight");
  Tangle t = Tangle::twist(weights.back(), static_cast<VertexId>(weights.size() - 1));
  for (std::size_t i = weights.size() - 1; i-- > 0;)
    t = tangle_sum(Tangle::twist(weights[i], static_cast<VertexId>(i)), t.rotated());
  return t;
}

inline Tangle rational_tangle(std::initializer_list<Weight> weights) {
  return rational_tangle(std::span<const Weight>(weights.begin(), weights.size()));
}

// ---------------------------------------------------------------------------
// Tree compilation

struct CompileOptions {
  bool layout = true;
  /// Tag crossings with these vertex ids instead of the tree's own (used when
  /// compiling an induced subtree so tags match the full tree).
  const std::vector<VertexId>* vertex_labels = nullptr;
  /// Per vertex, the slot among its child summands where its twist region
  /// sits (0 = before all children). Moving a twist region with |w| odd past
  /// a child tangle flips that tangle, so every choice is a flype of the
  /// default diagram.
  const std::vector<int>* twist_positions = nullptr;
};

struct CompiledDiagram {
  Diagram diagram;
  /// Per vertex: first crossing port met from each side of Tangle(v),
  /// indexed by Side, in v's own (unrotated) frame.
  std::vector<std::array<std::optional<PortRef>, 4>> boundary_ports;
};

inline CompiledDiagram compile_with_ports(const PlaneTree& tree, const CompileOptions& opt = {}) {
  const int n = tree.size();
  auto label = [&](VertexId v) { return opt.vertex_labels ? opt.vertex_labels->at(v) : v; };
  std::vector<std::optional<Tangle>> done(n);
  std::vector<std::array<std::optional<PortRef>, 4>> ports(n);
  auto order = tree.preorder();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const VertexId v = *it;
    const auto& kids = tree.children(v);
    const std::size_t slot = opt.twist_positions ? static_cast<std::size_t>(opt.twist_positions->at(v)) : 0;
    if (slot > kids.size()) throw PreconditionError("twist position out of range");
    const bool odd = tree.weight(v) % 2 != 0;
    std::optional<Tangle> t;
    auto append = [&](Tangle piece) { t = t ? tangle_sum(*t, piece) : std::move(piece); };
    for (std::size_t i = 0; i <= kids.size(); ++i) {
      if (i == slot) append(Tangle::twist(tree.weight(v), label(v), opt.layout));
      if (i == kids.size()) break;
      const VertexId c = kids[i];
      Tangle child = done[c]->rotated();
      if (i < slot && odd) child = child.flipped();
      child.mark_box(label(c), label(v));
      append(std::move(child));
      done[c].reset();
    }
    for (int s = 0; s < 4; ++s) ports[v][s] = t->boundary_port(static_cast<Side>(s));
    done[v] = std::move(t);
  }
  return {numerator_closure(*done[tree.root()]), std::move(ports)};
}

inline Diagram compile(const PlaneTree& tree, const CompileOptions& opt = {}) {
  return compile_with_ports(tree, opt).diagram;
}

}  // namespace arbor
