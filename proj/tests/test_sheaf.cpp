#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "gsk/hom_solver.hpp"
#include "gsk/presheaf.hpp"
#include "gsk/sheaf.hpp"

using namespace gsk;
using namespace fixtures;

static const Ring F2 = Ring::prime_field(2);

TEST_CASE("constant sheaf basics") {
  auto l3 = line3();
  auto f = constant_line(l3, F2);
  CHECK(f.validate().empty());
  for (int x = 0; x < 3; ++x) {
    CHECK(f.stalk(x).part(l3.lambda(x).zero()).orders() ==
          std::vector<Int>{2});
  }

  // sections over the whole space: k in degree 0 of Lambda(X) = Z/3
  auto sr = sections(f, l3.poset().whole());
  CHECK(sr.lambda.group.orders() == std::vector<Int>{3});
  CHECK(sr.module.support().size() == 1);
  CHECK(sr.module.part(sr.lambda.group.zero()).invariants().divisors ==
        std::vector<Int>{2});

  // sections over a minimal open give the stalk
  auto s1 = sections(f, l3.poset().min_open(1));
  CHECK(s1.module.total().invariants() ==
        f.stalk(1).total().invariants());

  // empty set: zero
  auto s0 = sections(f, {});
  CHECK(s0.module.is_zero());

  // non-open throws
  CHECK_THROWS_AS(sections(f, PointSet{0}), std::invalid_argument);
}

TEST_CASE("skyscraper and extension by zero") {
  auto l3 = line3();
  auto sky = line3_skyscraper(l3, F2, 1);
  CHECK(sky.validate().empty());
  CHECK(sky.stalk(0).part({1}).orders() == std::vector<Int>{2});
  CHECK(sky.stalk(1).is_zero());

  auto f = constant_line(l3, F2);
  auto whole = extend_by_zero(f, l3.poset().whole());
  CHECK(whole == f);
  auto none = extend_by_zero(f, {});
  CHECK(none.is_zero());
  auto um = extend_by_zero(f, {1});
  CHECK(um.stalk(1).part(Degree{}).orders() == std::vector<Int>{2});
  CHECK(um.stalk(0).is_zero());
  CHECK(um.stalk(2).is_zero());

  // a non locally closed subset: the two ends of a 3-chain
  FinitePoset chain(3, {{0, 1}, {1, 2}}, {"a", "b", "c"});
  GradingGroup t = GradingGroup::trivial();
  std::map<std::pair<int, int>, GradingHom> cres;
  cres[{0, 1}] = GradingHom::identity(t);
  cres[{1, 2}] = GradingHom::identity(t);
  GradedSpace cs(chain, {t, t, t}, cres);
  auto g = constant_line(cs, F2);
  CHECK_THROWS_AS(extend_by_zero(g, PointSet{0, 2}), std::invalid_argument);
}

TEST_CASE("basic exact sequence") {
  auto l3 = line3();
  auto f = constant_line(l3, F2);
  auto seq = basic_exact_sequence(f, {1, 2});
  CHECK(seq.incl.validate().empty());
  CHECK(seq.proj.validate().empty());
  CHECK(is_exact_sheaf_pair(seq.incl, seq.proj));
  // at the closed point: 0 -> k -> k
  CHECK(seq.sub.stalk(0).is_zero());
  CHECK(seq.quot.stalk(0).part(l3.lambda(0).zero()).orders() ==
        std::vector<Int>{2});

  // degenerate ends
  auto all = basic_exact_sequence(f, l3.poset().whole());
  CHECK(all.quot.is_zero());
  CHECK(is_exact_sheaf_pair(all.incl, all.proj));
  auto nothing = basic_exact_sequence(f, {});
  CHECK(nothing.sub.is_zero());
  CHECK(is_exact_sheaf_pair(nothing.incl, nothing.proj));
}

TEST_CASE("kernel image cokernel of sheaf maps") {
  auto l3 = line3();
  auto f = constant_line(l3, F2);
  auto seq = basic_exact_sequence(f, {1, 2});
  auto ker = sheaf_kernel(seq.proj);
  auto im = sheaf_image(seq.incl);
  for (int x = 0; x < 3; ++x)
    CHECK(ker.sheaf.stalk(x).isomorphic(im.sheaf.stalk(x)));
  auto coker = sheaf_cokernel(seq.incl);
  for (int x = 0; x < 3; ++x)
    CHECK(coker.sheaf.stalk(x).isomorphic(seq.quot.stalk(x)));
  CHECK(coker.sheaf.validate().empty());
  CHECK(ker.map.validate().empty());
  CHECK(coker.map.validate().empty());

  // iso on stalks means iso
  auto id = SheafMap::identity(f);
  CHECK(id.is_isomorphism());
  CHECK_FALSE(seq.proj.is_isomorphism());
}

TEST_CASE("shift sheaf") {
  auto l3 = line3();
  auto sky = line3_skyscraper(l3, F2, 1);
  DegreeFamily zero{{0, {0}}, {1, {}}, {2, {}}};
  CHECK(shift_sheaf(sky, zero) == sky);
  DegreeFamily lam{{0, {1}}, {1, {}}, {2, {}}};
  DegreeFamily mlam{{0, {-1}}, {1, {}}, {2, {}}};
  auto sh = shift_sheaf(sky, lam);
  // <1> moves the degree-1 part to degree 0
  CHECK(sh.stalk(0).part({0}).orders() == std::vector<Int>{2});
  CHECK(shift_sheaf(sh, mlam) == sky);
  DegreeFamily bad{{0, {1}}, {1, {}}, {2, {}}};
  (void)bad;  // any family over line3 is compatible since the targets are 0
}

TEST_CASE("tensor of sheaves") {
  auto l3 = line3();
  auto f = constant_line(l3, F2);
  auto sky1 = line3_skyscraper(l3, F2, 1);
  auto sky2 = line3_skyscraper(l3, F2, 2);

  // unit
  auto t = tensor_sheaf(f, sky1);
  for (int x = 0; x < 3; ++x) CHECK(t.stalk(x).isomorphic(sky1.stalk(x)));
  CHECK(t.validate().empty());

  // convolution of degrees in Z/3: 1 + 2 = 0
  auto tt = tensor_sheaf(sky1, sky2);
  CHECK(tt.stalk(0).support() == std::vector<Degree>{{0}});
  CHECK(tt.stalk(0).part({0}).invariants().divisors == std::vector<Int>{2});

  // disjoint supports
  auto a = extend_by_zero(f, {1});
  auto b = extend_by_zero(f, {2});
  CHECK(tensor_sheaf(a, b).is_zero());

  // restriction maps of a tensor of constants stay the identity
  auto ff = tensor_sheaf(f, f);
  CHECK(ff.validate().empty());
  CHECK(ff.restriction(0, 1, l3.lambda(0).zero()).matrix()(0, 0) == 1);
}

TEST_CASE("degree piece") {
  auto l3 = line3();
  auto f = constant_line(l3, F2);
  DegreeFamily lam{{0, {1}}, {1, {}}, {2, {}}};
  auto piece = degree_piece(f, lam);
  CHECK(piece.space().has_trivial_grading());
  CHECK(piece.stalk(0).is_zero());
  CHECK(piece.stalk(1).part(Degree{}).orders() == std::vector<Int>{2});

  DegreeFamily zero{{0, {0}}, {1, {}}, {2, {}}};
  auto p0 = degree_piece(f, zero);
  for (int x = 0; x < 3; ++x)
    CHECK(p0.stalk(x).total().invariants() == f.stalk(x).total().invariants());
}

TEST_CASE("flabby and soft") {
  auto l3 = line3();
  auto zero_sheaf = skyscraper(l3, 0, GradedModule(F2, l3.lambda(0)));
  CHECK(is_flabby(zero_sheaf));
  CHECK(is_soft(zero_sheaf));

  // the constant sheaf on line3 cannot spread a section of {u-, u+} to X
  auto f = constant_line(l3, F2);
  CHECK_FALSE(is_flabby(f));

  // skyscraper at the closed point is flabby
  auto sky = line3_skyscraper(l3, F2, 0);
  CHECK(is_flabby(sky));
}

TEST_CASE("limits over subsets") {
  auto l3 = line3();
  auto f = constant_line(l3, F2);
  DegreeFamily fam{{0, {0}}, {1, {}}, {2, {}}};
  auto lim = limit_over(f, l3.poset().whole(), fam);
  CHECK(lim.module.invariants().divisors == std::vector<Int>{2});
  DegreeFamily sub{{1, {}}, {2, {}}};
  auto lim2 = limit_over(f, {1, 2}, sub);
  CHECK(lim2.module.invariants().divisors == (std::vector<Int>{2, 2}));
  auto r = limit_restriction(lim, lim2);
  CHECK(r.is_injective());
  CHECK_FALSE(r.is_surjective());
  // components agree with the inclusion
  auto c = lim.component(0);
  CHECK(c.matrix().rows() == 1);
}

TEST_CASE("sheaf hom") {
  auto l3 = line3();
  auto f = constant_line(l3, F2);

  // End(F) on the closed stalk: scalars only
  auto endo = sheaf_hom(f, f);
  CHECK(endo.validate().empty());
  CHECK(endo.stalk(0).part({0}).invariants().divisors == std::vector<Int>{2});
  // at an open point U_x = {x}: End(k) = k
  CHECK(endo.stalk(1).part(Degree{}).invariants().divisors ==
        std::vector<Int>{2});

  // Hom(constant, skyscraper at closed c) = skyscraper at c
  auto sky = line3_skyscraper(l3, F2, 0);
  auto h = sheaf_hom(f, sky);
  CHECK(h.stalk(0).part({0}).invariants().divisors == std::vector<Int>{2});
  CHECK(h.stalk(1).is_zero());
  CHECK(h.stalk(2).is_zero());

  // Hom(extension by zero from u-, constant)
  auto jm = extend_by_zero(f, {1});
  auto h2 = sheaf_hom(jm, f);
  CHECK(h2.stalk(0).part({0}).invariants().divisors == std::vector<Int>{2});
  CHECK(h2.stalk(1).part(Degree{}).invariants().divisors ==
        std::vector<Int>{2});
  CHECK(h2.stalk(2).is_zero());

  // identity is among the enumerated maps
  auto maps = all_sheaf_maps(f, f);
  bool has_id = false;
  for (const auto& m : maps)
    if (m == SheafMap::identity(f)) has_id = true;
  CHECK(has_id);
  CHECK(maps.size() == 2);  // 0 and id: sections of End over X in degree 0
}

TEST_CASE("presheaf tables and sheafification") {
  auto l3 = line3();
  auto f = constant_line(l3, F2);
  auto table = table_of(f);
  CHECK(table.validate().empty());
  auto again = sheafify(table);
  CHECK(again == f);
  for (const auto& u : l3.poset().all_opens()) {
    if (u.empty()) continue;
    for (const auto& [d, unit] : sheafify_unit(table, again, u))
      CHECK(unit.is_isomorphism());
  }

  // a presheaf section killed on a cover dies in the sheafification
  FinitePoset two(2, {}, {"a", "b"});
  GradedSpace disc(two, {GradingGroup::trivial(), GradingGroup::trivial()}, {});
  GradedPresheafTable p;
  p.space = disc;
  for (const auto& u : two.all_opens()) {
    p.lambda[u] = sections_of_lambda(disc, u);
    GradedModule v(F2, p.lambda[u].group);
    if (u == two.whole()) v.set_part(Degree{}, Module::unit(F2));
    p.value[u] = v;
  }
  // restrictions default to zero: the global section dies on {a} and {b}
  CHECK(p.validate().empty());
  auto sh = sheafify(p);
  CHECK(sh.is_zero());
  auto unit = sheafify_unit(p, sh, two.whole());
  CHECK(unit.at(Degree{}).is_zero());
}

TEST_CASE("graded sheaf condition does not see ungraded gluing") {
  // Two open points over Z/2-graded closed point; sections in the two degrees
  // cannot be glued into one ungraded section, but the graded sheaf is fine.
  FinitePoset p(3, {{0, 1}, {0, 2}}, {"c", "a", "b"});
  GradingGroup l2({2}), t = GradingGroup::trivial();
  std::map<std::pair<int, int>, GradingHom> res;
  res[{0, 1}] = GradingHom::zero(l2, t);
  res[{0, 2}] = GradingHom::zero(l2, t);
  GradedSpace s(p, {l2, t, t}, res);
  GradedModule stc(F2, l2);
  stc.set_part({0}, Module::unit(F2));
  stc.set_part({1}, Module::unit(F2));
  GradedModule sto = GradedModule::concentrated(F2, t, Degree{},
                                                Module::unit(F2));
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> sres;
  sres[{0, 1}][Degree{0}] = ModuleHom::identity(Module::unit(F2));
  sres[{0, 2}][Degree{1}] = ModuleHom::identity(Module::unit(F2));
  GradedSheaf f(s, {stc, sto, sto}, sres);
  CHECK(f.validate().empty());
  // the two global degrees carry different section spaces over X
  auto sr = sections(f, p.whole());
  CHECK(sr.module.part({0}).invariants().divisors == std::vector<Int>{2});
  CHECK(sr.module.part({1}).invariants().divisors == std::vector<Int>{2});
  // ungraded comparison: total sections over X are smaller than the limit of
  // the total stalks would be if grading were forgotten pointwise
  Int graded_total = sr.module.total().cardinality();
  // forgetting the grading: the ungraded constant-style limit glues any pair
  // of germs, giving |k|^2 sections; the graded sheaf only allows 4 as well
  // but split across distinct degrees, so a single ungraded section carrying
  // both germs does not exist in any one degree.
  CHECK(graded_total == 4);
  for (const auto& d : sr.module.support())
    CHECK(sr.module.part(d).cardinality() == 2);
}
