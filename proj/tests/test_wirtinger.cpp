#include <gtest/gtest.h>

#include <random>

#include "arbor/components.hpp"
#include "arbor/flatten.hpp"
#include "arbor/wirtinger.hpp"
#include "oracles.hpp"

using namespace arbor;

namespace {

Diagram plain(const PlaneTree& t) {
  CompileOptions opt;
  opt.layout = false;
  return compile(t, opt);
}

std::vector<char> mask_of(const Coloring& c) {
  std::vector<char> m(c.arc_count());
  for (int a : c.arcs()) m[a] = 1;
  return m;
}

Coloring random_coloring(int arcs, std::mt19937_64& rng, double p) {
  Coloring c(arcs);
  std::bernoulli_distribution coin(p);
  for (int a = 0; a < arcs; ++a)
    if (coin(rng)) c.insert(a);
  return c;
}

// Connected diagrams with at least one crossing from random trees.
std::vector<Diagram> corpus(int count, int max_vertices, std::uint64_t seed0 = 0) {
  std::vector<Diagram> out;
  RandomTreeOptions opt;
  opt.max_vertices = max_vertices;
  for (std::uint64_t seed = seed0; static_cast<int>(out.size()) < count; ++seed) {
    auto d = plain(random_tree(opt, seed));
    if (d.is_connected() && d.crossing_count() > 0) out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

TEST(Coloring, Basics) {
  Coloring c(4, {1, 3, 1});
  EXPECT_EQ(c.size(), 2);
  EXPECT_EQ(c.arcs(), (std::vector<int>{1, 3}));
  EXPECT_FALSE(c.full());
  EXPECT_TRUE(Coloring(4, {1}).subset_of(c));
  EXPECT_FALSE(c.subset_of(Coloring(4, {1})));
  EXPECT_THROW(c.insert(4), PreconditionError);
  EXPECT_THROW(Coloring(2, {-1}), PreconditionError);
}

TEST(Closure, AllArcsStayAll) {
  auto d = compile(parse_tree("(3)"));
  EXPECT_TRUE(closure(d, Coloring(3, {0, 1, 2})).full());
}

TEST(Closure, EmptyStaysEmpty) {
  auto d = compile(parse_tree("(2 (3))"));
  EXPECT_EQ(closure(d, Coloring(d.arc_count())).size(), 0);
}

TEST(Closure, TrefoilTwoSeedsColourEverything) {
  auto d = compile(parse_tree("(3)"));
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) EXPECT_TRUE(closure(d, Coloring(3, {a, b})).full());
  for (int a = 0; a < 3; ++a) EXPECT_EQ(closure(d, Coloring(3, {a})).size(), 1);
}

TEST(Closure, RejectsDisconnectedDiagram) {
  auto d = compile(parse_tree("(0)"));
  EXPECT_FALSE(d.is_connected());
  EXPECT_THROW(closure(d, Coloring(d.arc_count())), PreconditionError);
}

TEST(Closure, RejectsForeignColoring) {
  auto d = compile(parse_tree("(3)"));
  EXPECT_THROW(closure(d, Coloring(5)), PreconditionError);
}

TEST(Closure, MatchesSweepOracle) {
  std::mt19937_64 rng(1);
  for (const auto& d : corpus(150, 9)) {
    auto seeds = random_coloring(d.arc_count(), rng, 0.3);
    EXPECT_EQ(mask_of(closure(d, seeds)), oracle::naive_closure(d, mask_of(seeds)));
  }
}

TEST(Closure, ExtensiveIdempotentMonotone) {
  std::mt19937_64 rng(2);
  for (const auto& d : corpus(300, 10, 1000)) {
    auto s = random_coloring(d.arc_count(), rng, 0.25);
    auto bigger = s;
    for (int a : random_coloring(d.arc_count(), rng, 0.2).arcs()) bigger.insert(a);
    const auto cs = closure(d, s);
    EXPECT_TRUE(s.subset_of(cs));
    EXPECT_EQ(closure(d, cs), cs);
    EXPECT_TRUE(cs.subset_of(closure(d, bigger)));
  }
}

TEST(Closure, SingleSeedDoesNotSpreadWithoutKinks) {
  int checked = 0;
  for (const auto& d : corpus(200, 10, 5000)) {
    if (!d.is_kink_free()) continue;
    ++checked;
    for (int a = 0; a < d.arc_count(); ++a) EXPECT_EQ(closure(d, Coloring(d.arc_count(), {a})).size(), 1);
  }
  EXPECT_GT(checked, 100);
}

TEST(WirtingerExact, Examples) {
  EXPECT_EQ(wirtinger_exact(compile(parse_tree("(3)")), 5).value, 2);
  EXPECT_EQ(wirtinger_exact(numerator_closure(rational_tangle({2, 3})), 5).value, 2);
  EXPECT_EQ(wirtinger_exact(numerator_closure(rational_tangle({2, 2, 2})), 5).value, 2);
}

TEST(WirtingerExact, WitnessColoursEverything) {
  for (const auto& d : corpus(60, 8, 300)) {
    auto r = wirtinger_exact(d, 10);
    ASSERT_TRUE(r.value);
    EXPECT_EQ(static_cast<int>(r.seeds.size()), *r.value);
    EXPECT_TRUE(closure(d, Coloring(d.arc_count(), r.seeds)).full());
  }
}

TEST(WirtingerExact, MatchesSubsetOracle) {
  int checked = 0;
  for (const auto& d : corpus(200, 7, 700)) {
    if (d.arc_count() > 14) continue;
    ++checked;
    EXPECT_EQ(wirtinger_exact(d, d.arc_count()).value, oracle::wirtinger_number(d));
  }
  EXPECT_GT(checked, 50);
}

TEST(WirtingerExact, KMaxExhaustedIsDistinct) {
  auto d = compile(parse_tree("(0 (2) (2) (2))"));
  auto r = wirtinger_exact(d, 2);
  EXPECT_FALSE(r.value);
  EXPECT_TRUE(r.seeds.empty());
  EXPECT_EQ(wirtinger_exact(d, 3).value, 3);
}

TEST(WirtingerExact, Guards) {
  EXPECT_THROW(wirtinger_exact(compile(parse_tree("(41)")), 2), GuardExceeded);
  EXPECT_NO_THROW(wirtinger_exact(compile(parse_tree("(40)")), 2));
  EXPECT_THROW(wirtinger_exact(compile(parse_tree("(0)")), 2), PreconditionError);
}

TEST(WirtingerExact, KinkFreeNeedsTwo) {
  for (const auto& d : corpus(100, 8, 9000)) {
    if (!d.is_kink_free() || d.arc_count() > kExactArcGuard) continue;
    EXPECT_GE(*wirtinger_exact(d, d.arc_count()).value, 2);
  }
}

TEST(SeedSearch, PathBaseCase) {
  auto t = parse_tree("(2 (3))");
  auto out = seed_search_budget(t, compile(t), 2, 0);
  ASSERT_TRUE(out.certificate);
  EXPECT_EQ(out.certificate->seeds.size(), 2u);
  EXPECT_TRUE(verify_certificate(*out.certificate));
}

TEST(SeedSearch, Star) {
  auto t = parse_tree("(0 (2) (2) (2))");
  auto out = seed_search_budget(t, compile(t), 3, 0);
  ASSERT_TRUE(out.certificate);
  EXPECT_EQ(out.certificate->bound, 3);
  EXPECT_TRUE(verify_certificate(*out.certificate));
}

TEST(SeedSearch, StarWithValencyFourRamification) {
  auto star = parse_tree("(0 (2) (2) (2))");
  auto t = add_ramification(star, star.root(), 1, 3, {{2}, {3}, {-2}});
  ASSERT_EQ(flattening_number(t).value + 2, 5);
  auto out = seed_search_budget(t, compile(t), 5, 0);
  ASSERT_TRUE(out.certificate);
  EXPECT_EQ(out.certificate->seeds.size(), 5u);
  EXPECT_TRUE(verify_certificate(*out.certificate));
}

TEST(SeedSearch, TooFewArcsFails) {
  auto t = parse_tree("(1)");
  auto d = compile(t);
  auto out = seed_search_budget(t, d, 2, 0);
  EXPECT_FALSE(out.certificate);
  EXPECT_FALSE(out.failure.reason.empty());
}

TEST(SeedSearch, FlypedPresentationWhenDefaultDiagramNeedsMore) {
  // Exact search shows the default diagram needs more than f + 2 seeds.
  auto t = parse_tree("(2 (2 (2 (2) (2)) (2 (2))))");
  const int bound = flattening_number(t).value + 2;
  auto d = plain(t);
  EXPECT_FALSE(wirtinger_exact(d, bound).value);
  auto cert = bridge_upper_bound(t, 0);
  EXPECT_EQ(cert.bound, bound);
  EXPECT_FALSE(cert.twist_positions.empty());
  EXPECT_TRUE(verify_certificate(cert));
  EXPECT_EQ(wirtinger_exact(cert.diagram, bound).value, bound);
  EXPECT_EQ(oracle::determinant(cert.diagram), oracle::determinant(d));
  EXPECT_EQ(count_components(cert.diagram), count_components(d));
}

TEST(BridgeUpperBound, PathsGiveTwo) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 40; ++i) {
    std::vector<Weight> w(std::uniform_int_distribution<int>(1, 5)(rng));
    for (auto& x : w) x = std::uniform_int_distribution<int>(2, 5)(rng) * (rng() % 2 ? 1 : -1);
    std::vector<std::vector<VertexId>> ch(w.size());
    for (std::size_t k = 0; k + 1 < w.size(); ++k) ch[k] = {static_cast<VertexId>(k + 1)};
    auto cert = bridge_upper_bound(PlaneTree(w, ch, 0));
    EXPECT_EQ(cert.bound, 2);
    EXPECT_TRUE(verify_certificate(cert));
  }
}

TEST(BridgeUpperBound, StarsGiveValency) {
  for (int n = 3; n <= 7; ++n) {
    std::vector<Weight> w(n + 1, 3);
    std::vector<std::vector<VertexId>> ch(n + 1);
    for (int i = 1; i <= n; ++i) ch[0].push_back(i);
    auto cert = bridge_upper_bound(PlaneTree(w, ch, 0));
    EXPECT_EQ(cert.bound, n);
    EXPECT_TRUE(verify_certificate(cert));
  }
}

TEST(BridgeUpperBound, RandomTreesCertifyAndBoundComponents) {
  RandomTreeOptions opt;
  opt.max_vertices = 11;
  std::mt19937_64 rng(8);
  int certified = 0;
  for (std::uint64_t seed = 0; certified < 60; ++seed) {
    auto t = random_tree(opt, seed);
    auto d = compile(t);
    const int bound = flattening_number(t).value + 2;
    if (!d.is_connected() || d.arc_count() < bound) {
      EXPECT_THROW(bridge_upper_bound(t, seed), PreconditionError);
      continue;
    }
    auto cert = bridge_upper_bound(t, seed);
    ++certified;
    EXPECT_EQ(cert.bound, bound);
    EXPECT_EQ(static_cast<int>(cert.seeds.size()), bound);
    EXPECT_TRUE(verify_certificate(cert));
    std::vector<Weight> w(t.size());
    for (auto& x : w) x = std::uniform_int_distribution<int>(-5, 5)(rng);
    EXPECT_LE(link_components(t, w), cert.bound);
    if (cert.diagram.arc_count() <= kExactArcGuard) {
      EXPECT_LE(*wirtinger_exact(cert.diagram, bound).value, bound);
    }
  }
}

TEST(BridgeUpperBound, Deterministic) {
  auto t = parse_tree("(2 (-3) (2 (3) (2)) (4))");
  auto a = bridge_upper_bound(t, 5), b = bridge_upper_bound(t, 5);
  EXPECT_EQ(a.seeds, b.seeds);
  EXPECT_EQ(a.twist_positions, b.twist_positions);
}

TEST(BridgeUpperBound, Preconditions) {
  EXPECT_THROW(bridge_upper_bound(parse_tree("(0)")), PreconditionError);
  EXPECT_THROW(bridge_upper_bound(parse_tree("(1)")), PreconditionError);
}

TEST(VerifyCertificate, RejectsTampering) {
  auto t = parse_tree("(2 (3) (-2) (2 (2)))");
  auto cert = bridge_upper_bound(t);
  ASSERT_TRUE(verify_certificate(cert));

  auto short_cert = cert;
  short_cert.seeds.pop_back();
  EXPECT_FALSE(verify_certificate(short_cert));

  auto dup = cert;
  dup.seeds.back() = dup.seeds.front();
  EXPECT_FALSE(verify_certificate(dup));

  auto out_of_range = cert;
  out_of_range.seeds.back() = cert.diagram.arc_count();
  EXPECT_FALSE(verify_certificate(out_of_range));

  // Too few seeds for any diagram of this link.
  auto weak = cert;
  weak.bound = 2;
  weak.seeds.resize(2);
  EXPECT_FALSE(verify_certificate(weak));

  auto moved = cert;
  moved.twist_positions.assign(t.size(), 0);
  moved.twist_positions[0] = 3;
  EXPECT_FALSE(verify_certificate(moved));
}

TEST(CertificateJson, Schema) {
  auto cert = bridge_upper_bound(parse_tree("(0 (2) (2) (2))"));
  auto j = certificate_to_json(cert);
  EXPECT_EQ(j["tree"], "(0 (2) (2) (2))");
  EXPECT_EQ(j["bound"], 3);
  EXPECT_EQ(j["seeds"].size(), 3u);
  EXPECT_EQ(j["verified"], true);
}
