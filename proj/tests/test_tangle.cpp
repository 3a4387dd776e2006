#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <regex>

#include "arbor/components.hpp"
#include "arbor/diagram.hpp"
#include "arbor/flatten.hpp"
#include "arbor/tangle.hpp"
#include "oracles.hpp"

using namespace arbor;

namespace {

Diagram plain(const PlaneTree& t) {
  CompileOptions opt;
  opt.layout = false;
  return compile(t, opt);
}

PlaneTree path(const std::vector<Weight>& w) {
  std::vector<std::vector<VertexId>> ch(w.size());
  for (std::size_t i = 0; i + 1 < w.size(); ++i) ch[i] = {static_cast<VertexId>(i + 1)};
  return PlaneTree(w, ch, 0);
}

std::vector<int> random_positions(const PlaneTree& t, std::mt19937_64& rng) {
  std::vector<int> pos(t.size());
  for (VertexId v = 0; v < t.size(); ++v)
    pos[v] = std::uniform_int_distribution<int>(0, static_cast<int>(t.children(v).size()))(rng);
  return pos;
}

RandomTreeOptions opts(int max_vertices) {
  RandomTreeOptions o;
  o.max_vertices = max_vertices;
  return o;
}

}  // namespace

TEST(CfValue, Examples) {
  EXPECT_EQ(cf_value({3}), (Fraction{3, 1}));
  EXPECT_EQ(cf_value({2, 3}), (Fraction{5, 3}));
  EXPECT_EQ(cf_value({2, 2, 2}), (Fraction{4, 3}));
}

TEST(CfValue, ExtendedRationals) {
  EXPECT_EQ(cf_value({0}), (Fraction{0, 1}));
  EXPECT_EQ(cf_value({1, 1}), (Fraction{0, 1}));
  // 1 - 1/(1 - 1/1) = 1 - 1/0
  EXPECT_TRUE(cf_value({1, 1, 1}).is_infinite());
  EXPECT_EQ(cf_value({1, 1, 1, 1}), (Fraction{1, 1}));
  EXPECT_TRUE(cf_value({2, 0}).is_infinite());
  EXPECT_EQ(cf_value({-2, 3}), (Fraction{-7, 3}));
  EXPECT_THROW(cf_value(std::span<const Weight>{}), PreconditionError);
}

TEST(CfValue, LowestTermsWithPositiveDenominator) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    std::vector<Weight> w(std::uniform_int_distribution<int>(1, 6)(rng));
    for (auto& x : w) x = std::uniform_int_distribution<int>(-5, 5)(rng);
    auto f = cf_value(std::span<const Weight>(w));
    EXPECT_GE(f.denominator, 0);
    EXPECT_EQ(std::gcd(f.numerator, f.denominator), 1);
  }
}

TEST(Twist, Zero) {
  auto t = twist(0);
  EXPECT_EQ(t.crossing_count(), 0);
  EXPECT_EQ(t.partner(Side::NW), Side::NE);
  EXPECT_EQ(t.partner(Side::SW), Side::SE);
}

TEST(Twist, Single) { EXPECT_EQ(twist(1).crossing_count(), 1); }

TEST(Twist, MirrorHasOppositeSigns) {
  for (Weight w : {1, 2, 5}) {
    auto a = numerator_closure(twist(w)), b = numerator_closure(twist(-w));
    ASSERT_EQ(a.crossing_count(), b.crossing_count());
    EXPECT_EQ(a.arc_count(), b.arc_count());
    for (int i = 0; i < a.crossing_count(); ++i) EXPECT_EQ(a.crossings()[i].sign, -b.crossings()[i].sign);
    EXPECT_EQ(count_components(a), count_components(b));
  }
}

TEST(TangleSum, TwistsAdd) {
  for (Weight a = 0; a <= 4; ++a)
    for (Weight b = 0; b <= 4; ++b) {
      auto s = tangle_sum(twist(a), twist(b));
      EXPECT_EQ(s.crossing_count(), a + b);
      if (a + b > 0) {
        EXPECT_TRUE(structurally_equal(numerator_closure(s), numerator_closure(twist(a + b)))) << a << "+" << b;
      }
      EXPECT_EQ(s.fraction(), (Fraction{a + b, 1}));
    }
}

TEST(TangleSum, ZeroIsIdentity) {
  auto t = rational_tangle({2, 3});
  auto s = tangle_sum(t, twist(0));
  EXPECT_EQ(s.crossing_count(), t.crossing_count());
  for (Side side : {Side::NW, Side::NE, Side::SW, Side::SE}) EXPECT_EQ(s.partner(side), t.partner(side));
  EXPECT_TRUE(structurally_equal(numerator_closure(s), numerator_closure(t)));
}

TEST(TangleSum, CrossingCountsAdd) {
  auto a = rational_tangle({2, -3, 2}), b = rational_tangle({4, 1});
  EXPECT_EQ(tangle_sum(a, b).crossing_count(), a.crossing_count() + b.crossing_count());
}

TEST(TangleRotate, FourTurnsIsIdentity) {
  auto t = rational_tangle({3, -2, 2});
  auto r = t.rotated().rotated().rotated().rotated();
  EXPECT_EQ(r.fraction(), t.fraction());
  for (Side side : {Side::NW, Side::NE, Side::SW, Side::SE}) EXPECT_EQ(r.partner(side), t.partner(side));
  EXPECT_TRUE(structurally_equal(numerator_closure(r), numerator_closure(t)));
}

TEST(TangleRotate, ZeroBecomesVertical) {
  auto r = tangle_rotate(twist(0));
  EXPECT_EQ(r.partner(Side::NW), Side::SW);
  EXPECT_EQ(r.partner(Side::NE), Side::SE);
  EXPECT_TRUE(r.fraction()->is_infinite());
}

TEST(TangleRotate, FractionLaw) {
  EXPECT_EQ(rational_tangle({2, 3}).rotated().fraction(), (Fraction{-3, 5}));
  EXPECT_EQ(twist(4).rotated().fraction(), (Fraction{-1, 4}));
}

TEST(RationalTangle, Examples) {
  EXPECT_EQ(rational_tangle({3}).crossing_count(), 3);
  auto a = rational_tangle({2, 3});
  EXPECT_EQ(a.crossing_count(), 5);
  EXPECT_EQ(a.fraction(), (Fraction{5, 3}));
  auto b = rational_tangle({2, 2, 2});
  EXPECT_EQ(b.crossing_count(), 6);
  EXPECT_EQ(b.fraction(), (Fraction{4, 3}));
}

TEST(RationalTangle, FractionMatchesContinuedFraction) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    std::vector<Weight> w(std::uniform_int_distribution<int>(1, 5)(rng));
    for (auto& x : w) x = std::uniform_int_distribution<int>(-4, 4)(rng);
    EXPECT_EQ(rational_tangle(std::span<const Weight>(w)).fraction(), cf_value(std::span<const Weight>(w)));
  }
}

TEST(NumeratorClosure, Unlink) {
  auto d = numerator_closure(twist(0));
  EXPECT_EQ(d.crossing_count(), 0);
  EXPECT_EQ(count_components(d), 2);
  EXPECT_EQ(d.arc_count(), 2);
}

TEST(NumeratorClosure, Trefoil) {
  auto d = numerator_closure(twist(3));
  EXPECT_EQ(d.crossing_count(), 3);
  EXPECT_EQ(d.arc_count(), 3);
  EXPECT_EQ(count_components(d), 1);
  EXPECT_TRUE(d.is_kink_free());
  // Every arc is the over arc of exactly one crossing and each crossing has
  // three distinct arcs.
  std::vector<int> over(3, 0);
  for (const auto& c : d.crossings()) {
    ++over[c.over];
    EXPECT_NE(c.over, c.under_in);
    EXPECT_NE(c.over, c.under_out);
    EXPECT_NE(c.under_in, c.under_out);
  }
  EXPECT_EQ(over, (std::vector<int>{1, 1, 1}));
  EXPECT_EQ(oracle::determinant(d), 3);
}

TEST(NumeratorClosure, TwoBridgeFiveThirds) {
  auto d = numerator_closure(rational_tangle({2, 3}));
  EXPECT_EQ(d.crossing_count(), 5);
  EXPECT_EQ(d.arc_count(), 5);
  EXPECT_EQ(oracle::determinant(d), 5);
  EXPECT_EQ(count_components(d), 1);
}

TEST(NumeratorClosure, TwistComponentsByParity) {
  for (Weight w = -7; w <= 7; ++w)
    EXPECT_EQ(count_components(numerator_closure(twist(w))), w % 2 == 0 ? 2 : 1) << w;
  EXPECT_EQ(count_components(numerator_closure(twist(4))), 2);
}

TEST(Compile, TrefoilFromSingleVertex) {
  EXPECT_TRUE(structurally_equal(compile(parse_tree("(3)")), numerator_closure(twist(3))));
}

TEST(Compile, PathEqualsRationalClosure) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    std::vector<Weight> w(std::uniform_int_distribution<int>(1, 5)(rng));
    for (auto& x : w) x = std::uniform_int_distribution<int>(-4, 4)(rng);
    EXPECT_TRUE(structurally_equal(plain(path(w)), numerator_closure(rational_tangle(std::span<const Weight>(w)))));
  }
  EXPECT_TRUE(structurally_equal(compile(parse_tree("(2 (3))")), numerator_closure(rational_tangle({2, 3}))));
}

TEST(Compile, MontesinosStar) {
  auto d = compile(parse_tree("(0 (2) (2) (2))"));
  EXPECT_EQ(d.crossing_count(), 6);
  EXPECT_EQ(count_components(d), 3);
  EXPECT_TRUE(d.is_connected());
}

TEST(Compile, ArcsEqualCrossingsOnConnectedDiagrams) {
  int checked = 0, balanced = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto d = plain(random_tree(opts(10), seed));
    if (!d.is_connected() || d.crossing_count() == 0) continue;
    ++checked;
    // A component that never passes under is one arc with no ends.
    std::vector<char> ends(d.arc_count(), 0);
    for (const auto& c : d.crossings()) ends[c.under_in] = ends[c.under_out] = 1;
    const int closed = static_cast<int>(std::count(ends.begin(), ends.end(), 0));
    EXPECT_EQ(d.arc_count(), d.crossing_count() + closed);
    if (closed == 0) ++balanced;
  }
  EXPECT_GT(checked, 200);
  EXPECT_GT(balanced, 200);
}

TEST(Compile, DeterminantMatchesTangleFractions) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto t = random_tree(opts(9), seed);
    auto d = plain(t);
    EXPECT_EQ(oracle::determinant(d), oracle::tree_determinant(t)) << serialize(t);
  }
}

TEST(Compile, TwoBridgeComponentsAndDeterminant) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    std::vector<Weight> w(std::uniform_int_distribution<int>(1, 5)(rng));
    for (auto& x : w) x = std::uniform_int_distribution<int>(-5, 5)(rng);
    const auto f = cf_value(std::span<const Weight>(w));
    auto d = plain(path(w));
    EXPECT_EQ(oracle::determinant(d), std::llabs(f.numerator));
    EXPECT_EQ(count_components(d), f.numerator % 2 == 0 ? 2 : 1);
  }
}

TEST(Compile, TwistPositionsPreserveInvariants) {
  std::mt19937_64 rng(17);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto t = random_tree(opts(10), seed);
    auto base = plain(t);
    auto pos = random_positions(t, rng);
    CompileOptions opt;
    opt.layout = false;
    opt.twist_positions = &pos;
    auto moved = compile(t, opt);
    EXPECT_EQ(moved.crossing_count(), base.crossing_count());
    EXPECT_EQ(count_components(moved), count_components(base));
    EXPECT_EQ(oracle::determinant(moved), oracle::determinant(base)) << serialize(t);
  }
}

TEST(Compile, DefaultTwistPositionsAreSlotZero) {
  auto t = parse_tree("(3 (2) (-3 (2)) (5))");
  std::vector<int> zeros(t.size(), 0);
  CompileOptions opt;
  opt.twist_positions = &zeros;
  EXPECT_TRUE(structurally_equal(compile(t, opt), compile(t)));
  std::vector<int> bad(t.size(), 0);
  bad[0] = 4;
  opt.twist_positions = &bad;
  EXPECT_THROW(compile(t, opt), PreconditionError);
}

TEST(Compile, ParityInvariance) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto t = random_tree(opts(9), seed);
    auto report = check_parity_reduction(t, 5, seed);
    EXPECT_TRUE(report.violations.empty()) << serialize(t);
  }
}

TEST(Compile, ComponentsNeverExceedFormula) {
  std::mt19937_64 rng(19);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto t = random_tree(opts(10), seed);
    std::vector<Weight> w(t.size());
    for (auto& x : w) x = std::uniform_int_distribution<int>(-4, 4)(rng);
    EXPECT_LE(link_components(t, w), max_component_formula(t));
  }
}

TEST(ExportDiagram, TrefoilSchema) {
  auto j = nlohmann::json::parse(export_diagram(compile(parse_tree("(3)"))));
  ASSERT_EQ(j["crossings"].size(), 3u);
  EXPECT_EQ(j["arcs"].size(), 3u);
  EXPECT_EQ(j["components"], 1);
  for (const auto& c : j["crossings"]) {
    ASSERT_EQ(c["over"].size(), 2u);
    EXPECT_EQ(c["over"][0], c["over"][1]);
    EXPECT_TRUE(c["sign"] == 1 || c["sign"] == -1);
    EXPECT_TRUE(c.contains("under_in"));
    EXPECT_TRUE(c.contains("under_out"));
  }
}

TEST(ExportDiagram, UnlinkHasNoCrossings) {
  auto j = nlohmann::json::parse(export_diagram(numerator_closure(twist(0))));
  EXPECT_TRUE(j["crossings"].empty());
  EXPECT_EQ(j["components"], 2);
}

TEST(ExportDiagram, RoundTrip) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto d = compile(random_tree(opts(10), seed));
    auto back = import_diagram(export_diagram(d));
    EXPECT_TRUE(structurally_equal(back, d));
    EXPECT_EQ(count_components(back), count_components(d));
  }
}

TEST(ImportDiagram, RejectsMalformed) {
  EXPECT_THROW(import_diagram("{"), PreconditionError);
  EXPECT_THROW(import_diagram(R"({"arcs":[0],"crossings":[{"id":0,"over":[0,1],"under_in":0,"under_out":0,"sign":1}]})"),
               PreconditionError);
  EXPECT_THROW(import_diagram(R"({"arcs":[0,2],"crossings":[]})"), PreconditionError);
  EXPECT_THROW(import_diagram(R"({"arcs":[0],"crossings":[],"components":3})"), PreconditionError);
}

TEST(RenderSvg, TrefoilHasThreeGaps) {
  const auto svg = render_svg(compile(parse_tree("(3)")));
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  std::regex crossing("class=\"crossing\"");
  EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), crossing), std::sregex_iterator()), 3);
  std::regex under("class=\"under\"");
  EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), under), std::sregex_iterator()), 6);
}

TEST(RenderSvg, Deterministic) {
  auto t = parse_tree("(1 (2) (-3 (2)) (4))");
  EXPECT_EQ(render_svg(compile(t)), render_svg(compile(t)));
}

TEST(RenderSvg, StarBoxesInARow) {
  const auto svg = render_svg(compile(parse_tree("(0 (2) (3) (2) (5))")));
  std::regex box("class=\"tangle-box\" data-vertex=\"(\\d+)\" data-parent=\"0\" x=\"([0-9.]+)\" y=\"([0-9.]+)\"");
  std::vector<double> xs, ys;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), box); it != std::sregex_iterator(); ++it) {
    xs.push_back(std::stod((*it)[2]));
    ys.push_back(std::stod((*it)[3]));
  }
  ASSERT_EQ(xs.size(), 4u);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    EXPECT_GT(xs[i], xs[i - 1]);
    EXPECT_DOUBLE_EQ(ys[i], ys[0]);
  }
}

TEST(RenderSvg, RequiresLayout) {
  EXPECT_THROW(render_svg(plain(parse_tree("(3)"))), PreconditionError);
}
