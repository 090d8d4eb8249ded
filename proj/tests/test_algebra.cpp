// Unit tests for the exact module arithmetic core.

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "gsk/graded_module.hpp"
#include "gsk/module.hpp"
#include "gsk/snf.hpp"

using namespace gsk;

namespace {

// Independent oracle: check U*M*V = D by direct multiplication and that D is
// a divisibility chain.
void check_snf(const IntMat& m) {
  auto s = smith_normal_form(m);
  REQUIRE(s.u * m * s.v == s.d);
  REQUIRE(s.u * s.u_inv == IntMat::identity(m.rows()));
  REQUIRE(s.v * s.v_inv == IntMat::identity(m.cols()));
  for (size_t i = 0; i + 1 < s.divisors.size(); ++i) {
    Int a = s.divisors[i], b = s.divisors[i + 1];
    REQUIRE(a >= 0);
    if (a == 0)
      REQUIRE(b == 0);
    else
      REQUIRE(b % a == 0);
  }
  for (int i = 0; i < s.d.rows(); ++i)
    for (int j = 0; j < s.d.cols(); ++j)
      if (i != j) REQUIRE(s.d(i, j) == 0);
}

}  // namespace

TEST_CASE("smith normal form on the spec matrices") {
  IntMat m = IntMat::from_rows({{2, 0}, {0, 3}});
  auto s = smith_normal_form(m);
  check_snf(m);
  REQUIRE(s.divisors == std::vector<Int>{1, 6});

  IntMat id = IntMat::identity(3);
  auto si = smith_normal_form(id);
  REQUIRE(si.divisors == std::vector<Int>{1, 1, 1});

  IntMat z(2, 2);
  auto sz = smith_normal_form(z);
  REQUIRE(sz.divisors == std::vector<Int>{0, 0});
}

TEST_CASE("smith normal form randomized") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> dim(0, 5), ent(-9, 9);
  for (int trial = 0; trial < 200; ++trial) {
    IntMat m(dim(rng), dim(rng));
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) m(i, j) = ent(rng);
    check_snf(m);
  }
}

TEST_CASE("module presentation invariants") {
  Ring z = Ring::integers();
  // Z^2 / <(2,0),(0,3)> = Z/2 + Z/3 = Z/6
  auto p = present_rows(z, IntMat::from_rows({{2, 0}, {0, 3}}));
  REQUIRE(p.module.invariants().rank == 0);
  REQUIRE(p.module.invariants().divisors == std::vector<Int>{6});

  auto free2 = present_rows(z, IntMat(0, 2));
  REQUIRE(free2.module.invariants().rank == 2);

  // The zero module has empty invariants.
  REQUIRE(Module::zero(z).invariants().is_zero());
  auto killed = present_rows(z, IntMat::from_rows({{1}}));
  REQUIRE(killed.module.is_zero());
}

TEST_CASE("hom of cyclic modules") {
  Ring z = Ring::integers();
  Module z2 = Module::cyclic(z, 2);
  Module z4 = Module::cyclic(z, 4);
  Module zz = Module::unit(z);

  // Oracle for Hom(Z/2, Z/4): all maps on the generator that kill 2.
  int homcount = 0;
  for (int c = 0; c < 4; ++c)
    if ((2 * c) % 4 == 0) ++homcount;
  auto h = hom_module(z2, z4);
  REQUIRE(h.module.cardinality() == homcount);
  REQUIRE(h.module.invariants().divisors == std::vector<Int>{2});

  // Hom(Z, M) = M, Hom(Z/2, Z) = 0.
  Module m(z, {0, 6});
  REQUIRE(hom_module(zz, m).module.isomorphic(m));
  REQUIRE(hom_module(z2, zz).module.is_zero());

  // Every enumerated element really is a homomorphism, and they are distinct.
  auto all = hom_module(z2, z4).all_homs();
  REQUIRE(static_cast<int>(all.size()) == homcount);
  for (const auto& f : all) REQUIRE(f.well_defined());
}

TEST_CASE("tensor of cyclic modules") {
  Ring z = Ring::integers();
  REQUIRE(tensor_module(Module::cyclic(z, 2), Module::cyclic(z, 3)).module.is_zero());
  REQUIRE(tensor_module(Module::cyclic(z, 4), Module::cyclic(z, 6))
              .module.invariants()
              .divisors == std::vector<Int>{2});
  Module m(z, {0, 5});
  REQUIRE(tensor_module(Module::unit(z), m).module.isomorphic(m));
}

TEST_CASE("tensor via standard presentation oracle") {
  // Oracle: present A ⊗ B by the Kronecker presentation and compare.
  Ring z = Ring::integers();
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> ord(0, 8);
  for (int trial = 0; trial < 60; ++trial) {
    Module a(z, {ord(rng), ord(rng)});
    Module b(z, {ord(rng), ord(rng)});
    auto t = tensor_module(a, b);
    // relations: a_i * (e_i ⊗ e_j) and b_j * (e_i ⊗ e_j)
    std::vector<std::vector<Int>> rel;
    for (int i = 0; i < a.gens(); ++i)
      for (int j = 0; j < b.gens(); ++j) {
        std::vector<Int> r1(4, 0), r2(4, 0);
        r1[i * 2 + j] = a.order(i);
        r2[i * 2 + j] = b.order(j);
        rel.push_back(r1);
        rel.push_back(r2);
      }
    auto oracle = present_rows(z, IntMat::from_rows(rel));
    REQUIRE(t.module.isomorphic(oracle.module));
  }
}

TEST_CASE("hom and tensor are additive") {
  Ring z = Ring::integers();
  std::mt19937 rng(13);
  std::uniform_int_distribution<int> ord(0, 6);
  for (int trial = 0; trial < 40; ++trial) {
    Module a(z, {ord(rng)});
    Module a2(z, {ord(rng)});
    Module b(z, {ord(rng), ord(rng)});
    Module sum = direct_sum({a, a2}, z).module;
    auto lhs_h = hom_module(sum, b).module.invariants();
    auto rhs_h =
        direct_sum({hom_module(a, b).module, hom_module(a2, b).module}, z)
            .module.invariants();
    REQUIRE(lhs_h == rhs_h);
    auto lhs_t = tensor_module(sum, b).module.invariants();
    auto rhs_t =
        direct_sum({tensor_module(a, b).module, tensor_module(a2, b).module}, z)
            .module.invariants();
    REQUIRE(lhs_t == rhs_t);
  }
}

TEST_CASE("kernel image cokernel") {
  Ring z = Ring::integers();
  Module dom(z, {0});   // Z
  Module cod(z, {4});   // Z/4
  // multiplication by 2: Z -> Z/4
  ModuleHom h(dom, cod, IntMat::from_rows({{2}}));
  REQUIRE(h.image().module.invariants().divisors == std::vector<Int>{2});
  REQUIRE(h.kernel().module.invariants().rank == 1);
  REQUIRE(h.cokernel().module.invariants().divisors == std::vector<Int>{2});

  // Kernel inclusion really lands in the kernel.
  auto k = h.kernel();
  REQUIRE(h.compose_after(k.map).is_zero());
  // Cokernel projection is surjective and kills the image.
  auto c = h.cokernel();
  REQUIRE(c.map.is_surjective());
  REQUIRE(c.map.compose_after(h).is_zero());
}

TEST_CASE("exactness is decidable") {
  Ring z = Ring::integers();
  Module zz = Module::unit(z);
  Module z4 = Module::cyclic(z, 4);
  Module z2 = Module::cyclic(z, 2);
  // Z --x2--> Z/4 --proj--> Z/2 is exact at Z/4.
  ModuleHom f(zz, z4, IntMat::from_rows({{2}}));
  ModuleHom g(z4, z2, IntMat::from_rows({{1}}));
  REQUIRE(is_exact_pair(f, g));
  // Z --x4--> Z/4 --proj--> Z/2 is not.
  ModuleHom f2(zz, z4, IntMat::from_rows({{4}}));
  REQUIRE_FALSE(is_exact_pair(f2, g));
}

TEST_CASE("tensor hom adjunction cardinalities") {
  // |Hom(A ⊗ B, C)| = |Hom(A, Hom(B, C))| on finite instances.
  Ring z = Ring::integers();
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> ord(1, 6);
  for (int trial = 0; trial < 50; ++trial) {
    Module a(z, {ord(rng)});
    Module b(z, {ord(rng)});
    Module c(z, {ord(rng)});
    auto lhs = hom_module(tensor_module(a, b).module, c).module;
    auto rhs = hom_module(a, hom_module(b, c).module).module;
    REQUIRE(lhs.cardinality() == rhs.cardinality());
    REQUIRE(lhs.isomorphic(rhs));
  }
}

TEST_CASE("modules over quotient rings and fields") {
  Ring z6 = Ring::integers_mod(6);
  // A "free" generator over Z/6 is Z/6.
  REQUIRE(Module::unit(z6).cardinality() == 6);
  REQUIRE(Module(z6, {4}).orders() == std::vector<Int>{2});  // gcd with 6

  Ring f2 = Ring::prime_field(2);
  Module v = Module::free(f2, 3);
  REQUIRE(v.cardinality() == 8);
  REQUIRE(hom_module(v, v).module.cardinality() == 512);

  Ring q = Ring::rationals();
  Module qq(q, {0, 0});
  REQUIRE(qq.invariants().rank == 2);
  REQUIRE(Module(q, {5}).is_zero());  // torsion dies over Q
}

TEST_CASE("hom module coords round trip") {
  Ring z = Ring::integers();
  Module a(z, {4, 0});
  Module b(z, {8, 2});
  auto h = hom_module(a, b);
  for (const auto& e : h.module.elements()) {
    auto f = h.hom_of(e);
    REQUIRE(f.well_defined());
    REQUIRE(h.coords_of(f) == e);
  }
}

TEST_CASE("inverse of isomorphism") {
  Ring z = Ring::integers();
  Module m(z, {0, 6});
  ModuleHom f(m, m, IntMat::from_rows({{1, 0}, {3, 1}}));
  REQUIRE(f.is_isomorphism());
  auto g = f.inverse();
  REQUIRE(g.compose_after(f) == ModuleHom::identity(m));
  REQUIRE(f.compose_after(g) == ModuleHom::identity(m));
}
