#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "gsk/functors.hpp"

using namespace gsk;
using namespace fixtures;

static const Ring F2 = Ring::prime_field(2);

static GradedSpace graded_point(Int n) {
  return GradedSpace::point(GradingGroup({n}));
}

TEST_CASE("inverse image") {
  auto l3 = line3();
  auto f = constant_line(l3, F2);

  // along the identity: unchanged
  auto idm = GradedSpaceMap::identity(l3);
  CHECK(inverse_image_gr(idm, f) == f);

  // regrading a point: Z/4 degrees folded onto Z/2
  GradedSpace x2 = graded_point(2), y4 = graded_point(4);
  GradedSpaceMap fold(x2, y4, {0},
                      {GradingHom(GradingGroup({4}), GradingGroup({2}),
                                  IntMat::identity(1))});
  GradedModule g(F2, GradingGroup({4}));
  g.set_part({0}, Module::unit(F2));
  g.set_part({1}, Module::unit(F2));
  g.set_part({2}, Module::unit(F2));
  GradedSheaf gs(y4, {g}, {});
  auto pulled = inverse_image_gr(fold, gs);
  CHECK(pulled.stalk(0).part({0}).invariants().divisors ==
        (std::vector<Int>{2, 2}));
  CHECK(pulled.stalk(0).part({1}).invariants().divisors ==
        std::vector<Int>{2});

  // trivial target grading: everything lands in degree zero
  GradedSpace y0 = GradedSpace::point();
  GradedSpaceMap forget(x2, y0, {0},
                        {GradingHom::zero(GradingGroup::trivial(),
                                          GradingGroup({2}))});
  GradedModule h = GradedModule::concentrated(F2, GradingGroup::trivial(),
                                              Degree{}, Module::free(F2, 3));
  auto back = inverse_image_gr(forget, GradedSheaf(y0, {h}, {}));
  CHECK(back.stalk(0).part({0}).invariants().rank == 0);
  CHECK(back.stalk(0).part({0}).invariants().divisors ==
        (std::vector<Int>{2, 2, 2}));

  // inverse image is exact
  auto seq = basic_exact_sequence(f, {1, 2});
  auto pi = inverse_image_map(idm, seq.proj, inverse_image_gr(idm, f),
                              inverse_image_gr(idm, seq.quot));
  auto iota = inverse_image_map(idm, seq.incl, inverse_image_gr(idm, seq.sub),
                                inverse_image_gr(idm, f));
  CHECK(is_exact_sheaf_pair(iota, pi));
}

TEST_CASE("pushforward") {
  auto l3 = line3();
  auto f = constant_line(l3, F2);

  auto idm = GradedSpaceMap::identity(l3);
  CHECK(pushforward_gr(idm, f).sheaf == f);

  // the finite stand-in for the punctured-line example: stalk at c sees k^2
  // in every one of the 3 degrees
  auto sub = line3_open_part(l3);
  auto fu = constant_line(sub.space, F2);
  auto push = pushforward_gr(sub.inclusion, fu);
  CHECK(push.sheaf.validate().empty());
  for (Int d : {0, 1, 2})
    CHECK(push.sheaf.stalk(0).part({d}).invariants().divisors ==
          (std::vector<Int>{2, 2}));
  CHECK(push.sheaf.stalk(1).part(Degree{}).invariants().divisors ==
        std::vector<Int>{2});

  // with an infinite grading group at c the stalk has infinite support
  auto l3z = line3(0);
  auto subz = line3_open_part(l3z);
  auto fz = constant_line(subz.space, F2);
  CHECK_THROWS_AS(pushforward_gr(subz.inclusion, fz), InfiniteSupportError);

  // identity on the Z-graded space still works: supports stay finite
  auto fzw = constant_line(l3z, F2);
  CHECK(pushforward_gr(GradedSpaceMap::identity(l3z), fzw).sheaf == fzw);

  // pushforward to a point computes graded global sections
  auto p = map_to_point_with_global_sections(l3);
  auto glob = pushforward_gr(p, f);
  auto sr = sections(f, l3.poset().whole());
  CHECK(glob.sheaf.stalk(0).isomorphic(sr.module));
}

TEST_CASE("proper pushforward") {
  auto l3 = line3();
  auto sub = line3_open_part(l3);
  auto fu = constant_line(sub.space, F2);

  // open inclusion: extension by zero
  auto shr = shriek_pushforward_gr(sub.inclusion, fu);
  CHECK(shr.sheaf.stalk(0).is_zero());
  CHECK(shr.sheaf.stalk(1).part(Degree{}).invariants().divisors ==
        std::vector<Int>{2});
  CHECK(shr.sheaf.validate().empty());

  // closed inclusion is proper: both pushforwards agree
  auto cl = subspace(l3, {0});
  GradedModule m(F2, l3.lambda(0));
  m.set_part({0}, Module::unit(F2));
  m.set_part({2}, Module::free(F2, 2));
  GradedSheaf g(cl.space, {m}, {});
  auto a = shriek_pushforward_gr(cl.inclusion, g);
  auto b = pushforward_gr(cl.inclusion, g);
  CHECK(a.sheaf == b.sheaf);

  // compact base: compactly supported = ordinary global sections
  auto f = constant_line(l3, F2);
  auto gc = compactly_supported_sections(f);
  auto sr = sections(f, l3.poset().whole());
  CHECK(gc.isomorphic(sr.module));

  // left exactness of the shriek pushforward on the basic sequence
  auto seq = basic_exact_sequence(fu, {0});
  auto ka = shriek_pushforward_gr(sub.inclusion, seq.sub);
  CHECK(ka.sheaf.validate().empty());
}

TEST_CASE("adjunction certificates") {
  auto l3 = line3();
  auto f = constant_line(l3, F2);

  // identity
  auto idm = GradedSpaceMap::identity(l3);
  auto cert = check_sheaf_adjunction(idm, f, f);
  CHECK(cert.triangles_ok);
  CHECK(cert.hom_bijection_ok);

  // open inclusion into line3
  auto sub = line3_open_part(l3);
  auto fu = constant_line(sub.space, F2);
  auto cert2 = check_sheaf_adjunction(sub.inclusion, fu, f);
  CHECK(cert2.triangles_ok);
  CHECK(cert2.hom_bijection_ok);

  // collapse to an ungraded point: the classical global sections adjunction
  auto tp = map_to_trivial_point(trivially_graded(l3));
  auto ft = constant_line(trivially_graded(l3), F2);
  GradedSheaf gpt(tp.codomain(),
                  {GradedModule::concentrated(F2, GradingGroup::trivial(),
                                              Degree{}, Module::free(F2, 2))},
                  {});
  auto cert3 = check_sheaf_adjunction(tp, ft, gpt);
  CHECK(cert3.triangles_ok);
  CHECK(cert3.hom_bijection_ok);

  // skyscraper against constant, mixed degrees
  auto sky = line3_skyscraper(l3, F2, 1);
  auto cert4 = check_sheaf_adjunction(sub.inclusion, fu, sky);
  CHECK(cert4.triangles_ok);
  CHECK(cert4.hom_bijection_ok);
}

TEST_CASE("base change") {
  auto l3 = line3();
  auto sub = line3_open_part(l3);
  auto fu = constant_line(sub.space, F2);

  // against the identity
  auto rep = base_change_check(sub.inclusion, GradedSpaceMap::identity(l3), fu);
  CHECK(rep.ok);

  // against the open point u-
  auto um = subspace(l3, {1});
  auto rep2 = base_change_check(sub.inclusion, um.inclusion, fu);
  CHECK(rep2.ok);

  // against the closed point: the fiber is empty, both sides vanish
  auto cl = subspace(l3, {0});
  auto rep3 = base_change_check(sub.inclusion, cl.inclusion, fu);
  CHECK(rep3.ok);

  // one-point legs with a torsion grading pushout: Z/4 over Z/2 against the
  // ungraded point; the pushout is Z/2 and both sides come out as k in the
  // surviving degree
  GradedSpace x2 = graded_point(2), y4 = graded_point(4);
  GradedSpace y0 = GradedSpace::point();
  IntMat two(1, 1);
  two(0, 0) = 2;
  GradedSpaceMap dbl(y4, x2, {0},
                     {GradingHom(GradingGroup({2}), GradingGroup({4}), two)});
  GradedSpaceMap coll(y0, x2, {0},
                      {GradingHom::zero(GradingGroup({2}),
                                        GradingGroup::trivial())});
  GradedModule g(F2, GradingGroup({4}));
  g.set_part({0}, Module::unit(F2));
  g.set_part({1}, Module::free(F2, 2));
  g.set_part({3}, Module::unit(F2));
  auto rep4 = base_change_check(dbl, coll, GradedSheaf(y4, {g}, {}));
  CHECK(rep4.ok);
  CHECK(rep4.left.stalk(0).part(Degree{}).invariants().divisors ==
        std::vector<Int>{2});

  // collapsing both gradings overcounts on the left: the comparison map
  // exists but is reported as a non-isomorphism
  GradedSpaceMap fold(x2, y4, {0},
                      {GradingHom(GradingGroup({4}), GradingGroup({2}),
                                  IntMat::identity(1))});
  GradedSpaceMap coll4(y0, y4, {0},
                       {GradingHom::zero(GradingGroup({4}),
                                         GradingGroup::trivial())});
  GradedModule h(F2, GradingGroup({2}));
  h.set_part({0}, Module::unit(F2));
  h.set_part({1}, Module::free(F2, 2));
  auto rep5 = base_change_check(fold, coll4, GradedSheaf(x2, {h}, {}));
  CHECK_FALSE(rep5.ok);
  CHECK_FALSE(rep5.failure.empty());
}

TEST_CASE("functor composition on points") {
  // (Z/2 point) -> (Z/4 point) -> (trivial point): composed pushforward
  // equals pushforward of the composition
  GradedSpace x2 = graded_point(2), y4 = graded_point(4);
  GradedSpace z = GradedSpace::point();
  GradedSpaceMap fxy(x2, y4, {0},
                     {GradingHom(GradingGroup({4}), GradingGroup({2}),
                                 IntMat::identity(1))});
  GradedSpaceMap gyz(y4, z, {0},
                     {GradingHom::zero(GradingGroup::trivial(),
                                       GradingGroup({4}))});
  GradedModule m(F2, GradingGroup({2}));
  m.set_part({0}, Module::unit(F2));
  m.set_part({1}, Module::unit(F2));
  GradedSheaf f(x2, {m}, {});
  auto once = pushforward_gr(compose_maps(gyz, fxy), f);
  auto twice = pushforward_gr(gyz, pushforward_gr(fxy, f).sheaf);
  CHECK(once.sheaf.stalk(0).isomorphic(twice.sheaf.stalk(0)));
}
