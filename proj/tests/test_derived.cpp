#include <catch2/catch_amalgamated.hpp>

#include "gsk/derived.hpp"
#include "fixtures.hpp"

using namespace gsk;
using namespace fixtures;

static const Ring F2 = Ring::prime_field(2);

namespace {

// A one-dimensional module over F2 normalizes to rank 0 with divisor 2.
const ModuleInvariants KD{0, {2}};

GradedSpaceMap line3_to_sierpinski(const GradedSpace& l3,
                                   const GradedSpace& sp) {
  std::vector<GradingHom> flat;
  for (int x = 0; x < l3.size(); ++x)
    flat.push_back(GradingHom::zero(GradingGroup::trivial(), l3.lambda(x)));
  return GradedSpaceMap(l3, sp, {0, 1, 1}, std::move(flat));
}

}  // namespace

TEST_CASE("cohomology of small complexes") {
  GradedSpace l3 = line3(3);
  GradedSheaf k = constant_line(l3, F2);

  auto one = complex_from_sheaf(k, 2);
  one.validate();
  auto h = cohomology(one);
  REQUIRE(h.count(2));
  CHECK(invariant_table(h.at(2)) == invariant_table(k));
  for (const auto& [n, sh] : h)
    if (n != 2) CHECK(sh.is_zero());

  ComplexOfSheaves ident;
  ident.space = l3;
  ident.ring = F2;
  ident.terms.emplace(0, k);
  ident.terms.emplace(1, k);
  ident.diffs.emplace(0, SheafMap::identity(k));
  ident.validate();
  for (const auto& [n, sh] : cohomology(ident)) CHECK(sh.is_zero());

  auto seq = basic_exact_sequence(k, {1, 2});
  ComplexOfSheaves three;
  three.space = l3;
  three.ring = F2;
  three.terms.emplace(0, seq.sub);
  three.terms.emplace(1, k);
  three.terms.emplace(2, seq.quot);
  three.diffs.emplace(0, seq.incl);
  three.diffs.emplace(1, seq.proj);
  three.validate();
  for (const auto& [n, sh] : cohomology(three)) CHECK(sh.is_zero());
}

TEST_CASE("godement resolutions are flabby and exact") {
  GradedSpace pt = GradedSpace::point(GradingGroup({2}));
  GradedSheaf fpt =
      GradedSheaf(pt,
                  {GradedModule::concentrated(F2, pt.lambda(0), Degree({1}),
                                              Module::free(F2, 2))},
                  {})
          .with_ring(F2);
  auto gpt = godement_resolution(fpt);
  gpt.complex.validate();
  CHECK(gpt.complex.terms.size() == 1);
  auto hpt = cohomology(gpt.complex);
  REQUIRE(hpt.count(0));
  CHECK(invariant_table(hpt.at(0)) == invariant_table(fpt));

  GradedSpace l3 = line3(3);
  GradedSheaf k = constant_line(l3, F2);
  auto g = godement_resolution(k);
  g.complex.validate();
  CHECK(g.complex.max_degree() == poset_height(l3.poset()));
  CHECK(g.complex.terms.at(0).stalk(0).part(Degree({0})).invariants() ==
        ModuleInvariants{0, {2, 2, 2}});
  for (const auto& [n, t] : g.complex.terms) CHECK(is_flabby(t));
  auto h = cohomology(g.complex);
  REQUIRE(h.count(0));
  CHECK(invariant_table(h.at(0)) == invariant_table(k));
  for (const auto& [n, sh] : h)
    if (n != 0) CHECK(sh.is_zero());

  auto gz = godement_resolution(
      GradedSheaf(l3,
                  {GradedModule(F2, l3.lambda(0)),
                   GradedModule(F2, l3.lambda(1)),
                   GradedModule(F2, l3.lambda(2))},
                  {})
          .with_ring(F2));
  CHECK(gz.complex.terms.empty());
}

TEST_CASE("flat resolutions resolve and certify") {
  GradedSpace l3 = line3(3);
  for (const GradedSheaf& f :
       {constant_line(l3, F2), line3_skyscraper(l3, F2, 1),
        constant_line(l3, Ring::integers())}) {
    auto fr = flat_resolution(f);
    fr.complex.validate();
    auto h = cohomology(fr.complex);
    REQUIRE(h.count(0));
    CHECK(invariant_table(h.at(0)) == invariant_table(f));
    for (const auto& [n, sh] : h)
      if (n != 0) CHECK(sh.is_zero());
    if (!f.ring().is_field())
      for (const auto& [n, t] : fr.complex.terms)
        if (!(fr.cut && n == fr.complex.min_degree()))
          for (int x = 0; x < t.size(); ++x)
            for (const auto& d : t.stalk(x).support())
              CHECK(t.stalk(x).part(d).invariants().divisors.empty());
  }

  // torsion stalk over Z/4: the kernel keeps 2-torsion at every stage
  Ring z4 = Ring::integers_mod(4);
  GradedModule tm = GradedModule::concentrated(z4, l3.lambda(0), {0},
                                               Module::cyclic(z4, 2));
  CHECK_THROWS_AS(flat_resolution(skyscraper(l3, 0, tm).with_ring(z4)),
                  FlatnessUndecidedError);
}

TEST_CASE("derived pushforward") {
  GradedSpace l3 = line3(3);
  GradedSheaf k = constant_line(l3, F2);
  GradedSheaf sky = line3_skyscraper(l3, F2, 1);

  // identity map: quasi-isomorphic to the input
  GradedSpaceMap id = subspace(l3, {0, 1, 2}).inclusion;
  for (const GradedSheaf& f : {k, sky}) {
    auto c = complex_from_sheaf(f);
    auto rp = derived_pushforward(id, c);
    rp.validate();
    CHECK(same_cohomology(rp, c));
  }

  // pseudo-circle to the point: one-dimensional H^0 and H^1
  GradedSpace pc = pseudo_circle();
  GradedSpaceMap p = map_to_trivial_point(pc);
  auto rg = derived_pushforward(p, complex_from_sheaf(constant_line(pc, F2)));
  rg.validate();
  auto h = cohomology(rg);
  REQUIRE(h.count(0));
  REQUIRE(h.count(1));
  CHECK(h.at(0).stalk(0).part(Degree()).invariants() == KD);
  CHECK(h.at(1).stalk(0).part(Degree()).invariants() == KD);
  for (const auto& [n, sh] : h)
    if (n != 0 && n != 1) CHECK(sh.is_zero());

  // compactly supported sections agree on the finite model
  auto rc = derived_shriek_pushforward(p,
                                       complex_from_sheaf(constant_line(pc, F2)));
  rc.validate();
  CHECK(same_cohomology(rg, rc));

  // Sierpinski to the point: contractible
  GradedSpace sp = sierpinski();
  auto rs = derived_pushforward(map_to_trivial_point(sp),
                                complex_from_sheaf(constant_line(sp, F2)));
  auto hs = cohomology(rs);
  REQUIRE(hs.count(0));
  CHECK(hs.at(0).stalk(0).part(Degree()).invariants() == KD);
  for (const auto& [n, sh] : hs)
    if (n != 0) CHECK(sh.is_zero());
}

TEST_CASE("derived tensor") {
  GradedSpace l3 = line3(3);
  GradedSheaf k = constant_line(l3, F2);
  GradedSheaf sky = line3_skyscraper(l3, F2, 1);

  // unit law
  auto c = complex_from_sheaf(sky);
  auto t = derived_tensor(complex_from_sheaf(k), c);
  t.validate();
  CHECK(same_cohomology(t, c));

  // Tor over Z on a point: Z/2 tensor^L Z/2 has H^0 and H^-1 of order 2
  GradedSpace pt = GradedSpace::point();
  Ring z = Ring::integers();
  GradedSheaf half = constant_sheaf(pt, Module::cyclic(z, 2));
  auto tor = derived_tensor(complex_from_sheaf(half), complex_from_sheaf(half));
  tor.validate();
  auto h = cohomology(tor);
  REQUIRE(h.count(0));
  REQUIRE(h.count(-1));
  CHECK(h.at(0).stalk(0).part(Degree()).invariants() == ModuleInvariants{0, {2}});
  CHECK(h.at(-1).stalk(0).part(Degree()).invariants() ==
        ModuleInvariants{0, {2}});
}

TEST_CASE("derived hom") {
  GradedSpace l3 = line3(3);
  GradedSheaf k = constant_line(l3, F2);

  auto c = complex_from_sheaf(k);
  auto rh = derived_hom(c, c);
  rh.validate();
  auto h = cohomology(rh);
  REQUIRE(h.count(0));
  CHECK_FALSE(h.at(0).is_zero());
  // identity lives in degree zero: global endomorphisms do not vanish
  CHECK_FALSE(h.at(0).stalk(0).part(Degree({0})).is_zero());

  // non-field bases are rejected
  GradedSheaf kz = constant_line(l3, Ring::integers());
  CHECK_THROWS_AS(derived_hom(complex_from_sheaf(kz), complex_from_sheaf(kz)),
                  NonFieldBaseError);

  // Hom into a flabby Godement term is flabby
  auto g = godement_resolution(k);
  CHECK(is_flabby(sheaf_hom(line3_skyscraper(l3, F2, 1),
                            g.complex.terms.at(0))));
}

TEST_CASE("basic triangle") {
  GradedSpace l3 = line3(3);
  GradedSheaf k = constant_line(l3, F2);

  auto tri = basic_triangle(k, {1, 2});
  CHECK(tri.exact);
  CHECK(tri.seq.sub.stalk(0).part(Degree({0})).is_zero());
  CHECK(k.stalk(0).part(Degree({0})).invariants() == KD);
  CHECK(tri.seq.quot.stalk(0).part(Degree({0})).invariants() == KD);

  CHECK(basic_triangle(k, {0, 1, 2}).exact);
  CHECK(basic_triangle(k, {}).exact);
  CHECK(basic_triangle(line3_skyscraper(l3, F2, 2), {1, 2}).exact);
}

TEST_CASE("projection formula") {
  GradedSpace l3 = line3(3);
  GradedSpaceMap id = subspace(l3, {0, 1, 2}).inclusion;
  GradedSheaf k = constant_line(l3, F2);

  CHECK(projection_formula_check(id, k, constant_line(l3, F2)).ok);
  CHECK(projection_formula_check(id, k, line3_skyscraper(l3, F2, 1)).ok);

  Subspace u = line3_open_part(l3);
  GradedSheaf ku = constant_line(u.space, F2);
  CHECK(projection_formula_check(u.inclusion, ku, constant_line(l3, F2)).ok);
  CHECK(
      projection_formula_check(u.inclusion, ku, line3_skyscraper(l3, F2, 2)).ok);
}

TEST_CASE("derived base change") {
  GradedSpace l3 = line3(3);
  GradedSpaceMap id = subspace(l3, {0, 1, 2}).inclusion;
  GradedSheaf k = constant_line(l3, F2);

  CHECK(derived_base_change_check(id, id, complex_from_sheaf(k)).ok);

  // closed point against the complementary open part
  Subspace cp = subspace(l3, {0});
  Subspace u = line3_open_part(l3);
  auto c = complex_from_sheaf(constant_line(cp.space, F2));
  CHECK(derived_base_change_check(cp.inclusion, u.inclusion, c).ok);
  CHECK(derived_base_change_check(u.inclusion, cp.inclusion,
                                  complex_from_sheaf(constant_line(u.space, F2)))
            .ok);

  // ringed input is rejected outright
  auto rs = constant_ringed_space(l3, F2);
  CHECK_THROWS_AS(derived_base_change_check(id, id, free_r_module(rs)),
                  std::invalid_argument);
}

TEST_CASE("composition identities") {
  GradedSpace l3 = line3(3);
  GradedSpace sp = sierpinski();
  GradedSpaceMap f = line3_to_sierpinski(l3, sp);
  GradedSpaceMap g = map_to_trivial_point(sp);

  for (const GradedSheaf& sh :
       {constant_line(l3, F2), line3_skyscraper(l3, F2, 1)}) {
    auto rep = composition_identities_check(f, g, complex_from_sheaf(sh));
    CHECK(rep.push_ok);
    CHECK(rep.shriek_ok);
  }

  // a closed inclusion is proper: both pushforwards agree
  Subspace cp = subspace(l3, {0});
  auto c = complex_from_sheaf(constant_line(cp.space, F2));
  CHECK(same_cohomology(derived_pushforward(cp.inclusion, c),
                        derived_shriek_pushforward(cp.inclusion, c)));
}
