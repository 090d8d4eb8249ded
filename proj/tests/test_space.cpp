// Tests for finite graded spaces, morphisms, fiber products, properness.

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "fixtures.hpp"
#include "gsk/space.hpp"

using namespace gsk;
using fixtures::line3;
using fixtures::pseudo_circle;
using fixtures::sierpinski;

TEST_CASE("poset basics") {
  FinitePoset p(3, {{0, 1}, {0, 2}});
  REQUIRE(p.leq(0, 1));
  REQUIRE_FALSE(p.leq(1, 2));
  REQUIRE(p.min_open(0) == PointSet{0, 1, 2});
  REQUIRE(p.min_open(1) == PointSet{1});
  REQUIRE(p.closure(1) == PointSet{0, 1});
  REQUIRE(p.is_open(PointSet{1, 2}));
  REQUIRE_FALSE(p.is_open(PointSet{0}));
  REQUIRE(p.is_closed(PointSet{0}));
  REQUIRE(p.chain_length() == 1);
  REQUIRE(pseudo_circle().poset().chain_length() == 1);

  REQUIRE_THROWS(FinitePoset(2, {{0, 1}, {1, 0}}));  // not antisymmetric
}

TEST_CASE("locally closed subsets") {
  auto l3 = line3();
  REQUIRE(l3.poset().is_locally_closed({0}));        // closed point
  REQUIRE(l3.poset().is_locally_closed({1, 2}));     // open
  REQUIRE(l3.poset().is_locally_closed({1}));        // open piece of open
  REQUIRE(l3.poset().is_locally_closed(l3.poset().whole()));
}

TEST_CASE("validate_space") {
  REQUIRE(GradedSpace::point().validate().empty());
  REQUIRE(line3().validate().empty());
  REQUIRE(pseudo_circle().validate().empty());

  // A non-composing restriction triple is reported with the failing pair.
  FinitePoset chain(3, {{0, 1}, {1, 2}}, {"a", "b", "c"});
  GradingGroup z4({4});
  std::map<std::pair<int, int>, GradingHom> res;
  res[{0, 1}] = GradingHom(z4, z4, IntMat::from_rows({{1}}));
  res[{1, 2}] = GradingHom(z4, z4, IntMat::from_rows({{1}}));
  res[{0, 2}] = GradingHom(z4, z4, IntMat::from_rows({{3}}));
  GradedSpace bad(chain, {z4, z4, z4}, res);
  auto diag = bad.validate();
  REQUIRE_FALSE(diag.empty());
  REQUIRE(diag[0].find("a <= b <= c") != std::string::npos);
}

TEST_CASE("sections of lambda") {
  auto l3 = line3();
  // Λ(X): components at u± live in the trivial group, c gives Z/3.
  auto secs = sections_of_lambda(l3, l3.poset().whole());
  REQUIRE(secs.group.orders() == std::vector<Int>{3});
  // U = U_x has a least element, so Λ(U_x) = Λ_x.
  for (int x = 0; x < l3.size(); ++x) {
    auto u = sections_of_lambda(l3, l3.poset().min_open(x));
    REQUIRE(u.group == l3.lambda(x));
    REQUIRE(u.project.at(x).is_isomorphism());
  }
  // Empty set: trivial group.
  REQUIRE(sections_of_lambda(l3, {}).group.is_trivial());
  REQUIRE_THROWS(sections_of_lambda(l3, PointSet{0}));  // not open

  // A kernel-style example with nonzero restrictions: two opens over a
  // closed point with restriction multiplication by 2 on Z.
  FinitePoset p(2, {{0, 1}}, {"lo", "hi"});
  GradingGroup z({0});
  std::map<std::pair<int, int>, GradingHom> res;
  res[{0, 1}] = GradingHom(z, z, IntMat::from_rows({{2}}));
  GradedSpace s(p, {z, z}, res);
  auto glob = sections_of_lambda(s, s.poset().whole());
  // families (a, b) with 2a = b: free of rank 1
  REQUIRE(glob.group.orders() == std::vector<Int>{0});
}

TEST_CASE("map composition and strictness") {
  auto l3 = line3();
  auto id = GradedSpaceMap::identity(l3);
  REQUIRE_FALSE(id.is_strict() == false);
  auto c = compose_maps(id, id);
  for (int x = 0; x < l3.size(); ++x) REQUIRE(c.apply(x) == x);

  // LINE3 -> PT -> PT via the graded points.
  auto p1 = map_to_point_with_global_sections(l3);
  auto pt = p1.codomain();
  auto p2 = GradedSpaceMap::identity(pt);
  auto chain = compose_maps(p2, p1);
  for (int x = 0; x < l3.size(); ++x) {
    REQUIRE(chain.apply(x) == 0);
    REQUIRE(chain.flat(x) == p1.flat(x));
  }

  // Strict maps compose to strict maps.
  REQUIRE(compose_maps(id, id).is_strict());
}

TEST_CASE("fiber product pushout gradings") {
  // Y1 = Y2 = PT with Λ = Z/2, X = PT with Λ = 0 -> Λ_Z = Z/2 ⊕ Z/2.
  GradedSpace pt_z2 = GradedSpace::point(GradingGroup({2}));
  GradedSpace pt_triv = GradedSpace::point();
  auto to_triv = [&](const GradedSpace& s) {
    return GradedSpaceMap(s, pt_triv, {0},
                          {GradingHom::zero(GradingGroup::trivial(), s.lambda(0))});
  };
  auto fp = fiber_product(to_triv(pt_z2), to_triv(pt_z2));
  REQUIRE(fp.space.size() == 1);
  REQUIRE(fp.space.lambda(0).orders() == std::vector<Int>({2, 2}));

  // Diagonal pushout: X = PT Λ=Z, both legs identity on Z -> Λ_Z ≅ Z.
  GradedSpace pt_z = GradedSpace::point(GradingGroup({0}));
  auto idm = GradedSpaceMap::identity(pt_z);
  auto fp2 = fiber_product(idm, idm);
  REQUIRE(fp2.space.lambda(0).orders() == std::vector<Int>{0});

  // Pullback along the identity on one leg gives back the other space.
  auto l3 = line3();
  auto j = fixtures::line3_open_part(l3).inclusion;
  auto fp3 = fiber_product(j, GradedSpaceMap::identity(l3));
  REQUIRE(fp3.space.size() == j.domain().size());
  REQUIRE(fp3.to_y1.is_strict());
}

TEST_CASE("fiber product universal property on small fixtures") {
  // For test maps agreeing over X, a unique factoring point map exists.
  auto l3 = line3();
  auto j = fixtures::line3_open_part(l3).inclusion;
  auto fp = fiber_product(j, GradedSpaceMap::identity(l3));
  // test space: a point mapping into both legs compatibly
  for (int a = 0; a < j.domain().size(); ++a) {
    int x = j.apply(a);
    // the pair (a, x) must appear exactly once among fp.points
    int count = 0;
    for (auto [p1, p2] : fp.points)
      if (p1 == a && p2 == x) ++count;
    REQUIRE(count == 1);
  }
}

TEST_CASE("strictness preserved by base change of strict maps") {
  // Pushout of an isomorphism is an isomorphism.
  GradedSpace pt_z4 = GradedSpace::point(GradingGroup({4}));
  GradedSpace pt_z4b = GradedSpace::point(GradingGroup({4}));
  auto strict_leg = GradedSpaceMap(
      pt_z4, pt_z4b, {0},
      {GradingHom(pt_z4b.lambda(0), pt_z4.lambda(0), IntMat::from_rows({{3}}))});
  REQUIRE(strict_leg.is_strict());
  GradedSpace pt_z8 = GradedSpace::point(GradingGroup({8}));
  auto other_leg = GradedSpaceMap(
      pt_z8, pt_z4b, {0},
      {GradingHom(pt_z4b.lambda(0), pt_z8.lambda(0), IntMat::from_rows({{2}}))});
  auto fp = fiber_product(strict_leg, other_leg);
  REQUIRE(fp.to_y2.is_strict());  // base change of the strict leg
}

TEST_CASE("properness") {
  auto l3 = line3();
  auto id = GradedSpaceMap::identity(l3);
  // identity: any valid support (closed in the preimage of the target open)
  REQUIRE(is_proper_on(id, {0, 1}));
  REQUIRE(is_proper_on(id, {}));
  REQUIRE(is_proper(id));

  // open inclusion j: {u-,u+} -> LINE3 is not proper on {u-}.
  auto j = fixtures::line3_open_part(l3).inclusion;
  REQUIRE_FALSE(is_proper_on(j, {0}));  // point u- of the subspace
  REQUIRE(is_proper_on(j, {}));
  REQUIRE_FALSE(is_proper(j));

  // closed inclusion {c} -> LINE3 is proper.
  auto i = subspace(l3, {0}).inclusion;
  REQUIRE(is_proper(i));

  // monotone: proper on S implies proper on closed subsets of S.
  for (int x = 0; x < l3.size(); ++x) {
    PointSet s = l3.poset().closure(x);
    if (is_proper_on(id, s))
      for (int y : s) REQUIRE(is_proper_on(id, l3.poset().closure(y)));
  }
}

TEST_CASE("continuity equals monotonicity") {
  auto l3 = line3();
  auto j = fixtures::line3_open_part(l3).inclusion;
  // preimage of every minimal open is an up-set
  for (int y = 0; y < l3.size(); ++y)
    REQUIRE(j.domain().poset().is_up_set(j.preimage(l3.poset().min_open(y))));
  // a non-monotone point map is rejected outright
  auto sp = sierpinski();
  REQUIRE_THROWS(GradedSpaceMap(
      sp, sp, {1, 0},
      {GradingHom::zero(GradingGroup::trivial(), GradingGroup::trivial()),
       GradingHom::zero(GradingGroup::trivial(), GradingGroup::trivial())}));
}
