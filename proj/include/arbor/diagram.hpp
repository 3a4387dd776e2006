#pragma once

// Closed link diagrams at the arc level: crossings reference the over arc and
// the two under arcs. Diagrams produced by compilation additionally carry the
// crossing tags, per-corner arc lookup and a planar layout for rendering.

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "arbor/error.hpp"
#include "arbor/plane_tree.hpp"
#include "arbor/union_find.hpp"

namespace arbor {

/// Corners of a crossing cell in its own frame. Straight-through strands are
/// NW-SE and SW-NE.
enum Corner : int { kCornerNW = 0, kCornerNE = 1, kCornerSE = 2, kCornerSW = 3 };

/// Identifies a crossing by the tree vertex whose twist region produced it and
/// its index inside that region.
struct CrossingTag {
  VertexId vertex = kNoVertex;
  int index = 0;
  friend auto operator<=>(const CrossingTag&, const CrossingTag&) = default;
};

/// A strand end at one corner of a tagged crossing.
struct PortRef {
  CrossingTag tag;
  int corner = 0;
  friend auto operator<=>(const PortRef&, const PortRef&) = default;
};

struct DiagramCrossing {
  int id = 0;
  int over = 0;
  int under_in = 0;
  int under_out = 0;
  int sign = 1;
  friend bool operator==(const DiagramCrossing&, const DiagramCrossing&) = default;
};

struct Point {
  double x = 0;
  double y = 0;
};

struct LayoutWire {
  std::vector<Point> path;
  int arc = 0;
};

struct LayoutBox {
  VertexId vertex = kNoVertex;
  VertexId parent = kNoVertex;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct Layout {
  std::vector<LayoutWire> wires;
  std::vector<std::array<Point, 4>> corners;  // per crossing, indexed by Corner
  std::vector<LayoutBox> boxes;
};

/// Which corners carry the over strand, and the under strand ends, for a
/// crossing of the given sign. Positive: over strand runs SW to NE.
inline std::array<int, 4> corner_roles(int sign) {
  // {over_a, over_b, under_in, under_out}
  return sign > 0 ? std::array<int, 4>{kCornerSW, kCornerNE, kCornerNW, kCornerSE}
                  : std::array<int, 4>{kCornerNW, kCornerSE, kCornerSW, kCornerNE};
}

class Diagram {
 public:
  Diagram(int arc_count, std::vector<DiagramCrossing> crossings) : arc_count_(arc_count), crossings_(std::move(crossings)) {
    if (arc_count_ < 0) throw PreconditionError("negative arc count");
    for (std::size_t i = 0; i < crossings_.size(); ++i) {
      const auto& c = crossings_[i];
      if (c.id != static_cast<int>(i)) throw PreconditionError("crossing ids must be dense and ordered");
      for (int a : {c.over, c.under_in, c.under_out})
        if (a < 0 || a >= arc_count_) throw PreconditionError("crossing references unknown arc " + std::to_string(a));
      if (c.sign != 1 && c.sign != -1) throw PreconditionError("crossing sign must be +1 or -1");
    }
    components_ = compute_components();
  }

  int arc_count() const noexcept { return arc_count_; }
  int crossing_count() const noexcept { return static_cast<int>(crossings_.size()); }
  const std::vector<DiagramCrossing>& crossings() const noexcept { return crossings_; }
  int components() const noexcept { return components_; }

  /// Connected projection: every arc reachable from every other via crossings.
  bool is_connected() const {
    if (arc_count_ == 0) return false;
    detail::UnionFind uf(arc_count_);
    for (const auto& c : crossings_) {
      uf.unite(c.over, c.under_in);
      uf.unite(c.over, c.under_out);
    }
    return uf.classes() == 1;
  }

  /// No crossing has its over arc equal to one of its under arcs.
  bool is_kink_free() const {
    return std::none_of(crossings_.begin(), crossings_.end(),
                        [](const DiagramCrossing& c) { return c.over == c.under_in || c.over == c.under_out; });
  }

  // --- compilation metadata (absent on imported diagrams) ---

  bool has_ports() const noexcept { return !port_arcs_.empty(); }
  const std::vector<CrossingTag>& tags() const noexcept { return tags_; }
  const std::optional<Layout>& layout() const noexcept { return layout_; }

  std::optional<int> crossing_with_tag(CrossingTag tag) const {
    auto it = tag_index_.find(tag);
    if (it == tag_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Arc through the given corner of a crossing.
  int arc_at(int crossing, int corner) const { return port_arcs_.at(crossing).at(corner); }

  std::optional<int> arc_at(const PortRef& port) const {
    auto idx = crossing_with_tag(port.tag);
    if (!idx) return std::nullopt;
    return arc_at(*idx, port.corner);
  }

  /// First corner (in crossing order) lying on `arc`; stable handle across
  /// diagrams compiled from trees sharing vertex ids.
  std::optional<PortRef> port_on_arc(int arc) const {
    for (std::size_t i = 0; i < port_arcs_.size(); ++i)
      for (int k = 0; k < 4; ++k)
        if (port_arcs_[i][k] == arc) return PortRef{tags_[i], k};
    return std::nullopt;
  }

  void attach_metadata(std::vector<CrossingTag> tags, std::vector<std::array<int, 4>> port_arcs,
                       std::optional<Layout> layout) {
    if (tags.size() != crossings_.size() || port_arcs.size() != crossings_.size())
      throw PreconditionError("metadata size mismatch");
    tags_ = std::move(tags);
    port_arcs_ = std::move(port_arcs);
    layout_ = std::move(layout);
    tag_index_.clear();
    for (std::size_t i = 0; i < tags_.size(); ++i) tag_index_[tags_[i]] = static_cast<int>(i);
  }

 private:
  int compute_components() const {
    // Under strands join the arcs on either side; over passages stay inside one arc.
    detail::UnionFind uf(arc_count_);
    for (const auto& c : crossings_) uf.unite(c.under_in, c.under_out);
    return uf.classes();
  }

  int arc_count_;
  std::vector<DiagramCrossing> crossings_;
  int components_ = 0;
  std::vector<CrossingTag> tags_;
  std::vector<std::array<int, 4>> port_arcs_;
  std::map<CrossingTag, int> tag_index_;
  std::optional<Layout> layout_;
};

/// Number of link components; over/under is irrelevant to the count.
inline int count_components(const Diagram& d) { return d.components(); }

/// Renumbers arcs by first appearance (over, under_in, under_out per crossing).
inline Diagram canonical_form(const Diagram& d) {
  std::vector<int> remap(d.arc_count(), -1);
  int next = 0;
  auto id = [&](int a) {
    if (remap[a] < 0) remap[a] = next++;
    return remap[a];
  };
  std::vector<DiagramCrossing> out;
  for (const auto& c : d.crossings()) out.push_back({c.id, id(c.over), id(c.under_in), id(c.under_out), c.sign});
  for (int a = 0; a < d.arc_count(); ++a) id(a);
  return Diagram(d.arc_count(), std::move(out));
}

/// Same crossings, signs and arc incidences up to arc renumbering.
inline bool structurally_equal(const Diagram& a, const Diagram& b) {
  if (a.arc_count() != b.arc_count() || a.crossing_count() != b.crossing_count()) return false;
  return canonical_form(a).crossings() == canonical_form(b).crossings();
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json diagram_to_json(const Diagram& d) {
  nlohmann::json crossings = nlohmann::json::array();
  for (const auto& c : d.crossings())
    crossings.push_back({{"id", c.id},
                         {"over", {c.over, c.over}},
                         {"under_in", c.under_in},
                         {"under_out", c.under_out},
                         {"sign", c.sign}});
  nlohmann::json arcs = nlohmann::json::array();
  for (int a = 0; a < d.arc_count(); ++a) arcs.push_back(a);
  return {{"crossings", crossings}, {"arcs", arcs}, {"components", d.components()}};
}

inline std::string export_diagram(const Diagram& d) { return diagram_to_json(d).dump(); }

inline Diagram diagram_from_json(const nlohmann::json& j) {
  try {
    const auto& arcs = j.at("arcs");
    for (std::size_t i = 0; i < arcs.size(); ++i)
      if (arcs[i].get<int>() != static_cast<int>(i)) throw PreconditionError("arc ids must be dense 0-based");
    std::vector<DiagramCrossing> crossings;
    for (const auto& c : j.at("crossings")) {
      const auto& over = c.at("over");
      if (over.size() != 2 || over[0] != over[1]) throw PreconditionError("over must list the same arc twice");
      crossings.push_back({c.at("id").get<int>(), over[0].get<int>(), c.at("under_in").get<int>(),
                           c.at("under_out").get<int>(), c.at("sign").get<int>()});
    }
    Diagram d(static_cast<int>(arcs.size()), std::move(crossings));
    if (j.contains("components") && j.at("components").get<int>() != d.components())
      throw PreconditionError("recorded component count disagrees with the crossings");
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("malformed diagram JSON: ") + e.what());
  }
}

inline Diagram import_diagram(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("malformed diagram JSON: ") + e.what());
  }
  return diagram_from_json(j);
}

// ---------------------------------------------------------------------------
// SVG

namespace detail {

inline std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

/// Renders a compiled diagram. Under strands stop short of each crossing.
inline std::string render_svg(const Diagram& d) {
  if (!d.layout()) throw PreconditionError("diagram has no layout; only compiled diagrams can be rendered");
  const Layout& lay = *d.layout();
  constexpr double kScale = 36.0;
  constexpr double kMargin = 24.0;
  constexpr double kGap = 0.36;  // fraction of the diagonal cut out on each side

  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool first = true;
  auto grow = [&](Point p) {
    if (first) {
      x0 = x1 = p.x;
      y0 = y1 = p.y;
      first = false;
    }
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  };
  for (const auto& w : lay.wires)
    for (Point p : w.path) grow(p);
  for (const auto& c : lay.corners)
    for (Point p : c) grow(p);

  auto X = [&](double x) { return detail::fmt_coord((x - x0) * kScale + kMargin); };
  auto Y = [&](double y) { return detail::fmt_coord((y - y0) * kScale + kMargin); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt_coord((x1 - x0) * kScale + 2 * kMargin)
      << "\" height=\"" << detail::fmt_coord((y1 - y0) * kScale + 2 * kMargin) << "\">\n";
  out << "<g class=\"boxes\" fill=\"none\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\">\n";
  for (const auto& b : lay.boxes) {
    out << "<rect class=\"tangle-box\" data-vertex=\"" << b.vertex << "\" data-parent=\"" << b.parent << "\" x=\""
        << X(b.x0 - 0.1) << "\" y=\"" << Y(b.y0 - 0.1) << "\" width=\"" << detail::fmt_coord((b.x1 - b.x0 + 0.2) * kScale)
        << "\" height=\"" << detail::fmt_coord((b.y1 - b.y0 + 0.2) * kScale) << "\"/>\n";
  }
  out << "</g>\n<g class=\"wires\" fill=\"none\" stroke=\"black\" stroke-width=\"2.5\">\n";
  for (const auto& w : lay.wires) {
    out << "<polyline class=\"wire\" data-arc=\"" << w.arc << "\" points=\"";
    for (std::size_t i = 0; i < w.path.size(); ++i) out << (i ? " " : "") << X(w.path[i].x) << ',' << Y(w.path[i].y);
    out << "\"/>\n";
  }
  out << "</g>\n<g class=\"crossings\" stroke=\"black\" stroke-width=\"2.5\">\n";
  for (const auto& c : d.crossings()) {
    const auto& corners = lay.corners.at(c.id);
    const auto roles = corner_roles(c.sign);
    const Point oa = corners[roles[0]], ob = corners[roles[1]];
    const Point ua = corners[roles[2]], ub = corners[roles[3]];
    auto toward = [](Point from, Point to, double t) { return Point{from.x + (to.x - from.x) * t, from.y + (to.y - from.y) * t}; };
    const Point ua_end = toward(ua, ub, kGap), ub_end = toward(ub, ua, kGap);
    out << "<g class=\"crossing\" data-id=\"" << c.id << "\">";
    out << "<line class=\"under\" x1=\"" << X(ua.x) << "\" y1=\"" << Y(ua.y) << "\" x2=\"" << X(ua_end.x) << "\" y2=\""
        << Y(ua_end.y) << "\"/>";
    out << "<line class=\"under\" x1=\"" << X(ub.x) << "\" y1=\"" << Y(ub.y) << "\" x2=\"" << X(ub_end.x) << "\" y2=\""
        << Y(ub_end.y) << "\"/>";
    out << "<line class=\"over\" x1=\"" << X(oa.x) << "\" y1=\"" << Y(oa.y) << "\" x2=\"" << X(ob.x) << "\" y2=\""
        << Y(ob.y) << "\"/>";
    out << "</g>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

}  // namespace arbor
