#pragma once

/**
 * @file module.hpp
 * @brief Finitely generated modules over the supported base rings.
 *
 * A module is kept in cyclic normal form: a list of generator orders, where
 * order 0 means a free cyclic summand and order d > 0 a summand R/(d).  Every
 * construction (kernels, images, cokernels, Hom, tensor) is reduced to Smith
 * normal form of an integer matrix, so all arithmetic is exact.
 *
 * Homomorphisms are integer matrices acting on the cyclic generators, read
 * modulo the codomain orders.
 */

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gsk/snf.hpp"

namespace gsk {

/// Base coefficient ring: Z, Z/n, F_p or Q.
class Ring {
public:
  enum class Kind { Integers, IntegersModN, PrimeField, Rationals };

  static Ring integers() { return Ring(Kind::Integers, 0); }
  static Ring integers_mod(Int n) {
    if (n < 2) throw std::invalid_argument("Z/n requires n >= 2");
    return Ring(Kind::IntegersModN, n);
  }
  static Ring prime_field(Int p) {
    if (p < 2 || !is_prime(p)) throw std::invalid_argument("F_p requires prime p");
    return Ring(Kind::PrimeField, p);
  }
  static Ring rationals() { return Ring(Kind::Rationals, 0); }

  Kind kind() const { return kind_; }
  /// 0 for Z and Q, else the modulus n (= p for prime fields).
  Int modulus() const { return mod_; }

  bool is_field() const {
    return kind_ == Kind::PrimeField || kind_ == Kind::Rationals;
  }

  bool operator==(const Ring& o) const {
    return kind_ == o.kind_ && mod_ == o.mod_;
  }
  bool operator!=(const Ring& o) const { return !(*this == o); }

  std::string name() const {
    switch (kind_) {
      case Kind::Integers: return "Z";
      case Kind::IntegersModN: return "Z/" + std::to_string(mod_);
      case Kind::PrimeField: return "F" + std::to_string(mod_);
      case Kind::Rationals: return "Q";
    }
    return "?";
  }

  static bool is_prime(Int p) {
    if (p < 2) return false;
    for (Int d = 2; d * d <= p; ++d)
      if (p % d == 0) return false;
    return true;
  }

private:
  Ring(Kind k, Int m) : kind_(k), mod_(m) {}
  Kind kind_;
  Int mod_;
};

inline void require_same_ring(const Ring& a, const Ring& b) {
  if (a != b)
    throw std::invalid_argument("mixed base rings: " + a.name() + " vs " + b.name());
}

/// Canonical isomorphism invariants: free rank + elementary divisors >= 2.
struct ModuleInvariants {
  int rank = 0;
  std::vector<Int> divisors;  // each >= 2, d_i | d_{i+1}

  bool operator==(const ModuleInvariants& o) const {
    return rank == o.rank && divisors == o.divisors;
  }
  bool operator!=(const ModuleInvariants& o) const { return !(*this == o); }

  bool is_zero() const { return rank == 0 && divisors.empty(); }

  std::string to_string(const std::string& ring = "Z") const {
    if (is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    if (rank > 0) {
      os << ring;
      if (rank > 1) os << "^" << rank;
      first = false;
    }
    for (Int d : divisors) {
      if (!first) os << " + ";
      os << ring << "/" << d;
      first = false;
    }
    return os.str();
  }
};

/// A finitely generated module in cyclic form over a base ring.
class Module {
public:
  Module() : ring_(Ring::integers()) {}

  /// Module with the given generator orders (0 = free summand).
  Module(Ring ring, std::vector<Int> orders)
      : ring_(std::move(ring)), orders_(std::move(orders)) {
    for (auto& d : orders_) {
      if (d < 0) d = -d;
      d = clamp_order(ring_, d);
    }
  }

  static Module zero(const Ring& r) { return Module(r, {}); }

  /// The ring as a module over itself.
  static Module unit(const Ring& r) { return Module(r, {r.modulus()}); }

  static Module free(const Ring& r, int rank) {
    return Module(r, std::vector<Int>(rank, r.modulus()));
  }

  static Module cyclic(const Ring& r, Int order) { return Module(r, {order}); }

  const Ring& ring() const { return ring_; }
  int gens() const { return static_cast<int>(orders_.size()); }
  const std::vector<Int>& orders() const { return orders_; }
  Int order(int i) const { return orders_[i]; }

  bool is_zero() const {
    for (Int d : orders_)
      if (d != 1) return false;
    return true;
  }

  /// All orders positive, i.e. the underlying set is finite.
  bool is_finite() const {
    for (Int d : orders_)
      if (d == 0) return false;
    return ring_.kind() != Ring::Kind::Rationals || is_zero();
  }

  Int cardinality() const {
    if (!is_finite()) throw std::logic_error("cardinality of infinite module");
    Int c = 1;
    for (Int d : orders_) c *= d;
    return c;
  }

  ModuleInvariants invariants() const {
    // Diagonalize diag(orders) to obtain the canonical divisor chain.
    std::vector<Int> tor;
    int rank = 0;
    for (Int d : orders_) {
      if (d == 0)
        ++rank;
      else if (d > 1)
        tor.push_back(d);
    }
    IntMat diag(static_cast<int>(tor.size()), static_cast<int>(tor.size()));
    for (size_t i = 0; i < tor.size(); ++i)
      diag(static_cast<int>(i), static_cast<int>(i)) = tor[i];
    auto s = smith_normal_form(diag);
    ModuleInvariants inv;
    inv.rank = rank;
    for (Int d : s.divisors)
      if (d >= 2) inv.divisors.push_back(d);
    return inv;
  }

  bool isomorphic(const Module& o) const {
    return ring_ == o.ring_ && invariants() == o.invariants();
  }

  /// Reduce a coefficient vector componentwise modulo the orders.
  std::vector<Int> reduce(std::vector<Int> x) const {
    if (static_cast<int>(x.size()) != gens())
      throw std::invalid_argument("element length mismatch");
    for (int i = 0; i < gens(); ++i) x[i] = reduce_mod(x[i], orders_[i]);
    return x;
  }

  std::vector<Int> zero_element() const { return std::vector<Int>(gens(), 0); }

  /// Enumerate all elements (finite modules only).
  std::vector<std::vector<Int>> elements() const {
    if (!is_finite()) throw std::logic_error("enumerating infinite module");
    std::vector<std::vector<Int>> out;
    std::vector<Int> cur(gens(), 0);
    for (;;) {
      out.push_back(cur);
      int i = 0;
      while (i < gens()) {
        if (++cur[i] < orders_[i]) break;
        cur[i] = 0;
        ++i;
      }
      if (i == gens()) break;
    }
    if (gens() == 0) out = {std::vector<Int>{}};
    return out;
  }

  static Int reduce_mod(Int x, Int d) {
    if (d == 0) return x;
    x %= d;
    return x < 0 ? x + d : x;
  }

  static Int clamp_order(const Ring& r, Int d) {
    switch (r.kind()) {
      case Ring::Kind::Integers: return d;
      case Ring::Kind::Rationals: return d == 0 ? 0 : 1;  // torsion dies over Q
      case Ring::Kind::IntegersModN:
      case Ring::Kind::PrimeField:
        return d == 0 ? r.modulus() : std::gcd(d, r.modulus());
    }
    return d;
  }

private:
  Ring ring_;
  std::vector<Int> orders_;
};

/// A module presented as generators with a relation lattice.
struct PresentedModule {
  Module module;
  IntMat to_canonical;    ///< presentation coords -> cyclic coords
  IntMat from_canonical;  ///< cyclic coords -> presentation coords (a lift)
};

/// Z^g modulo the column span of `relations` (g x r), over `ring`.
inline PresentedModule present(const Ring& ring, const IntMat& relations) {
  int g = relations.rows();
  IntMat rel = relations;
  if (ring.modulus() != 0) {
    IntMat extra(g, g);
    for (int i = 0; i < g; ++i) extra(i, i) = ring.modulus();
    rel = IntMat::hcat(rel, extra);
  }
  auto s = smith_normal_form(rel);
  // x ~ x' iff Ux = Ux' componentwise modulo the divisors.
  std::vector<Int> orders(g, 0);
  int n = std::min(rel.rows(), rel.cols());
  for (int i = 0; i < n; ++i) orders[i] = s.divisors[i];
  // Keep only coordinates with order != 1.
  std::vector<int> keep;
  for (int i = 0; i < g; ++i)
    if (orders[i] != 1) keep.push_back(i);
  PresentedModule out;
  std::vector<Int> kept_orders;
  for (int i : keep) kept_orders.push_back(orders[i]);
  out.module = Module(ring, kept_orders);
  out.to_canonical = IntMat(static_cast<int>(keep.size()), g);
  out.from_canonical = IntMat(g, static_cast<int>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k)
    for (int j = 0; j < g; ++j) {
      out.to_canonical(static_cast<int>(k), j) = s.u(keep[k], j);
      out.from_canonical(j, static_cast<int>(k)) = s.u_inv(j, keep[k]);
    }
  return out;
}

/// Presentation given as a (relations x generators) matrix, spec-style.
inline PresentedModule present_rows(const Ring& ring, const IntMat& rel_rows) {
  return present(ring, rel_rows.transposed());
}

/// Integer solution lattice of  M x ≡ 0 (mod orders)  as columns of a matrix.
///
/// Orders of length M.rows(); order 0 means the congruence is an equality.
inline IntMat congruence_kernel(const IntMat& m, const std::vector<Int>& orders) {
  int rows = m.rows(), cols = m.cols();
  // Solve [M | -diag(d_j), d_j != 0] (x, y) = 0 and project to x.
  std::vector<int> modrows;
  for (int j = 0; j < rows; ++j)
    if (orders[j] != 0) modrows.push_back(j);
  IntMat k(rows, cols + static_cast<int>(modrows.size()));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) k(i, j) = m(i, j);
  for (size_t t = 0; t < modrows.size(); ++t)
    k(modrows[t], cols + static_cast<int>(t)) = -orders[modrows[t]];
  auto s = smith_normal_form(k);
  std::vector<std::vector<Int>> basis;
  for (int j = 0; j < k.cols(); ++j) {
    bool in_kernel = j >= std::min(k.rows(), k.cols()) || s.divisors[j] == 0;
    if (!in_kernel) continue;
    std::vector<Int> x(cols);
    for (int i = 0; i < cols; ++i) x[i] = s.v(i, j);
    basis.push_back(std::move(x));
  }
  IntMat out(cols, static_cast<int>(basis.size()));
  for (size_t b = 0; b < basis.size(); ++b)
    for (int i = 0; i < cols; ++i) out(i, static_cast<int>(b)) = basis[b][i];
  return out;
}

class ModuleHom;
struct SubquotientResult;

/// Homomorphism between modules in cyclic form.
class ModuleHom {
public:
  ModuleHom() = default;
  ModuleHom(Module dom, Module cod, IntMat mat, bool check = true)
      : dom_(std::move(dom)), cod_(std::move(cod)), mat_(std::move(mat)) {
    require_same_ring(dom_.ring(), cod_.ring());
    if (mat_.rows() != cod_.gens() || mat_.cols() != dom_.gens())
      throw std::invalid_argument("hom matrix shape mismatch");
    reduce_entries();
    if (check && !well_defined())
      throw std::invalid_argument("matrix does not define a module homomorphism");
  }

  static ModuleHom zero(const Module& dom, const Module& cod) {
    return ModuleHom(dom, cod, IntMat(cod.gens(), dom.gens()), false);
  }

  static ModuleHom identity(const Module& m) {
    return ModuleHom(m, m, IntMat::identity(m.gens()), false);
  }

  const Module& domain() const { return dom_; }
  const Module& codomain() const { return cod_; }
  const IntMat& matrix() const { return mat_; }

  bool well_defined() const {
    // mat(j,i) * order_dom(i) must vanish modulo order_cod(j).
    for (int i = 0; i < dom_.gens(); ++i)
      for (int j = 0; j < cod_.gens(); ++j) {
        Int prod = mat_(j, i) * dom_.order(i);
        Int b = cod_.order(j);
        if (b == 0 ? (dom_.order(i) != 0 ? prod != 0 : false)
                   : (dom_.order(i) == 0 ? false : prod % b != 0))
          return false;
      }
    return true;
  }

  std::vector<Int> apply(const std::vector<Int>& x) const {
    return cod_.reduce(mat_.apply(x));
  }

  ModuleHom compose_after(const ModuleHom& first) const {
    // this ∘ first
    if (!(first.cod_.orders() == dom_.orders()))
      throw std::invalid_argument("hom composition mismatch");
    return ModuleHom(first.dom_, cod_, mat_ * first.mat_, false);
  }

  ModuleHom operator+(const ModuleHom& o) const {
    return ModuleHom(dom_, cod_, mat_ + o.mat_, false);
  }
  ModuleHom operator-(const ModuleHom& o) const {
    return ModuleHom(dom_, cod_, mat_ - o.mat_, false);
  }

  bool is_zero() const { return mat_.is_zero(); }

  bool operator==(const ModuleHom& o) const {
    return dom_.orders() == o.dom_.orders() && cod_.orders() == o.cod_.orders() &&
           mat_ == o.mat_;
  }

  SubquotientResult kernel() const;
  SubquotientResult image() const;
  /// Cokernel with its projection map.
  SubquotientResult cokernel() const;

  bool is_injective() const;
  bool is_surjective() const;
  bool is_isomorphism() const { return is_injective() && is_surjective(); }

  /// Inverse (isomorphisms only).
  ModuleHom inverse() const;

private:
  void reduce_entries() {
    for (int j = 0; j < cod_.gens(); ++j)
      for (int i = 0; i < dom_.gens(); ++i)
        mat_(j, i) = Module::reduce_mod(mat_(j, i), cod_.order(j));
  }

  Module dom_, cod_;
  IntMat mat_;
};

/// A module produced from another one, with the connecting homomorphism.
///
/// For kernels and images `map` is the inclusion into the ambient module;
/// for cokernels it is the projection from it.
struct SubquotientResult {
  Module module;
  ModuleHom map;
};

/// Submodule of `ambient` generated by the columns of `g`.
inline SubquotientResult submodule(const Module& ambient, const IntMat& g) {
  // Relations among the generators: c with  g c ≡ 0  in the ambient module.
  IntMat rel = congruence_kernel(g, ambient.orders());
  PresentedModule p = present(ambient.ring(), rel);
  // Inclusion: cyclic coords -> Z^s -> ambient.
  IntMat incl = g * p.from_canonical;
  SubquotientResult out;
  out.module = p.module;
  out.map = ModuleHom(p.module, ambient, incl, false);
  return out;
}

/// Quotient of `ambient` by the submodule generated by the columns of `g`.
inline SubquotientResult quotient(const Module& ambient, const IntMat& g) {
  IntMat rel = g;
  std::vector<int> tors;
  for (int i = 0; i < ambient.gens(); ++i)
    if (ambient.order(i) != 0) tors.push_back(i);
  IntMat extra(ambient.gens(), static_cast<int>(tors.size()));
  for (size_t t = 0; t < tors.size(); ++t)
    extra(tors[t], static_cast<int>(t)) = ambient.order(tors[t]);
  rel = IntMat::hcat(rel, extra);
  PresentedModule p = present(ambient.ring(), rel);
  SubquotientResult out;
  out.module = p.module;
  out.map = ModuleHom(ambient, p.module, p.to_canonical, false);
  return out;
}

inline SubquotientResult ModuleHom::kernel() const {
  IntMat lat = congruence_kernel(mat_, cod_.orders());
  return submodule(dom_, lat);
}

inline SubquotientResult ModuleHom::image() const { return submodule(cod_, mat_); }

inline SubquotientResult ModuleHom::cokernel() const {
  return quotient(cod_, mat_);
}

inline bool ModuleHom::is_injective() const {
  return kernel().module.is_zero();
}

inline bool ModuleHom::is_surjective() const {
  return cokernel().module.is_zero();
}

inline ModuleHom ModuleHom::inverse() const {
  if (dom_.gens() == 0 && cod_.gens() == 0) return *this;
  if (!is_isomorphism()) throw std::logic_error("inverse of non-isomorphism");
  // Solve mat * x ≡ e_j (mod cod orders) for each codomain generator.
  IntMat inv(dom_.gens(), cod_.gens());
  for (int j = 0; j < cod_.gens(); ++j) {
    // Augment with the torsion columns so solutions are congruences.
    std::vector<int> tors;
    for (int r = 0; r < cod_.gens(); ++r)
      if (cod_.order(r) != 0) tors.push_back(r);
    IntMat aug(cod_.gens(), dom_.gens() + static_cast<int>(tors.size()));
    for (int r = 0; r < cod_.gens(); ++r)
      for (int c = 0; c < dom_.gens(); ++c) aug(r, c) = mat_(r, c);
    for (size_t t = 0; t < tors.size(); ++t)
      aug(tors[t], dom_.gens() + static_cast<int>(t)) = cod_.order(tors[t]);
    std::vector<Int> e(cod_.gens(), 0);
    e[j] = 1;
    std::vector<Int> x;
    if (!solve_integer(aug, e, x))
      throw std::logic_error("inverse: no integral solution");
    for (int i = 0; i < dom_.gens(); ++i) inv(i, j) = x[i];
  }
  return ModuleHom(cod_, dom_, inv, false);
}

// ---------------------------------------------------------------------------
// Direct sums
// ---------------------------------------------------------------------------

struct DirectSum {
  Module module;
  std::vector<ModuleHom> inclusions;
  std::vector<ModuleHom> projections;
};

inline DirectSum direct_sum(const std::vector<Module>& parts, const Ring& ring) {
  std::vector<Int> orders;
  std::vector<int> offsets;
  for (const auto& p : parts) {
    require_same_ring(p.ring(), ring);
    offsets.push_back(static_cast<int>(orders.size()));
    for (Int d : p.orders()) orders.push_back(d);
  }
  DirectSum out;
  out.module = Module(ring, orders);
  int total = out.module.gens();
  for (size_t k = 0; k < parts.size(); ++k) {
    IntMat in(total, parts[k].gens());
    IntMat pr(parts[k].gens(), total);
    for (int i = 0; i < parts[k].gens(); ++i) {
      in(offsets[k] + i, i) = 1;
      pr(i, offsets[k] + i) = 1;
    }
    out.inclusions.emplace_back(parts[k], out.module, in, false);
    out.projections.emplace_back(out.module, parts[k], pr, false);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hom and tensor
// ---------------------------------------------------------------------------

/// Order of Hom(R/a, R/b) together with the image of the canonical generator.
inline Int hom_cyclic_order(Int a, Int b, Int& mult) {
  if (a == 0) {  // Hom(R, R/b) = R/b via evaluation at 1
    mult = 1;
    return b;
  }
  if (b == 0) {  // torsion into free
    mult = 0;
    return 1;
  }
  Int g = std::gcd(a, b);
  mult = b / g;
  return g;
}

/// Hom(A, B) with enough bookkeeping to pass between elements of the Hom
/// module and actual homomorphisms.
struct HomModule {
  Module module;                          ///< ⊕ over generator pairs
  std::vector<std::pair<int, int>> pairs; ///< (dom gen, cod gen) per summand
  std::vector<Int> mults;                 ///< generator sends e_i -> mult * e_j
  Module dom, cod;

  ModuleHom hom_of(const std::vector<Int>& coords) const {
    IntMat m(cod.gens(), dom.gens());
    for (size_t k = 0; k < pairs.size(); ++k)
      m(pairs[k].second, pairs[k].first) += coords[k] * mults[k];
    return ModuleHom(dom, cod, m, false);
  }

  std::vector<Int> coords_of(const ModuleHom& h) const {
    std::vector<Int> out(pairs.size(), 0);
    for (size_t k = 0; k < pairs.size(); ++k) {
      auto [i, j] = pairs[k];
      Int c = Module::reduce_mod(h.matrix()(j, i), cod.order(j));
      Int m = mults[k];
      if (m == 0) {
        out[k] = 0;
        continue;
      }
      if (c % m != 0)
        throw std::logic_error("hom entry not in the canonical generator span");
      out[k] = Module::reduce_mod(c / m, module.order(static_cast<int>(k)));
    }
    return out;
  }

  std::vector<ModuleHom> all_homs() const {
    std::vector<ModuleHom> out;
    for (const auto& e : module.elements()) out.push_back(hom_of(e));
    return out;
  }
};

inline HomModule hom_module(const Module& a, const Module& b) {
  require_same_ring(a.ring(), b.ring());
  HomModule out;
  out.dom = a;
  out.cod = b;
  std::vector<Int> orders;
  for (int i = 0; i < a.gens(); ++i)
    for (int j = 0; j < b.gens(); ++j) {
      Int mult = 0;
      Int d = hom_cyclic_order(a.order(i), b.order(j), mult);
      orders.push_back(d);
      out.pairs.emplace_back(i, j);
      out.mults.push_back(mult);
    }
  out.module = Module(a.ring(), orders);
  return out;
}

/// A ⊗ B with generator-pair bookkeeping.
struct TensorModule {
  Module module;
  std::vector<std::pair<int, int>> pairs;  // (gen of A, gen of B)
  Module left, right;

  int pair_index(int i, int j) const { return i * right.gens() + j; }
};

inline TensorModule tensor_module(const Module& a, const Module& b) {
  require_same_ring(a.ring(), b.ring());
  TensorModule out;
  out.left = a;
  out.right = b;
  std::vector<Int> orders;
  for (int i = 0; i < a.gens(); ++i)
    for (int j = 0; j < b.gens(); ++j) {
      orders.push_back(std::gcd(a.order(i), b.order(j)));
      out.pairs.emplace_back(i, j);
    }
  out.module = Module(a.ring(), orders);
  return out;
}

/// f ⊗ g on the canonical tensor generators.
inline ModuleHom tensor_hom(const TensorModule& src, const TensorModule& dst,
                            const ModuleHom& f, const ModuleHom& g) {
  IntMat m(dst.module.gens(), src.module.gens());
  for (size_t k = 0; k < src.pairs.size(); ++k) {
    auto [i, j] = src.pairs[k];
    for (int p = 0; p < f.codomain().gens(); ++p) {
      Int fc = f.matrix()(p, i);
      if (fc == 0) continue;
      for (int q = 0; q < g.codomain().gens(); ++q) {
        Int gc = g.matrix()(q, j);
        if (gc == 0) continue;
        m(dst.pair_index(p, q), static_cast<int>(k)) += fc * gc;
      }
    }
  }
  return ModuleHom(src.module, dst.module, m, false);
}

/// Solve  through * x ≡ target  columnwise; `through` need not be injective,
/// but the solution is only canonical when it is.
inline ModuleHom factor_through(const ModuleHom& mono, const ModuleHom& map) {
  // both land in the same ambient module
  const Module& amb = mono.codomain();
  if (!(map.codomain().orders() == amb.orders()))
    throw std::invalid_argument("factor_through: ambient mismatch");
  std::vector<int> tors;
  for (int r = 0; r < amb.gens(); ++r)
    if (amb.order(r) != 0) tors.push_back(r);
  IntMat aug(amb.gens(), mono.domain().gens() + static_cast<int>(tors.size()));
  for (int r = 0; r < amb.gens(); ++r)
    for (int c = 0; c < mono.domain().gens(); ++c) aug(r, c) = mono.matrix()(r, c);
  for (size_t t = 0; t < tors.size(); ++t)
    aug(tors[t], mono.domain().gens() + static_cast<int>(t)) = amb.order(tors[t]);
  IntMat sol(mono.domain().gens(), map.domain().gens());
  for (int j = 0; j < map.domain().gens(); ++j) {
    std::vector<Int> x;
    if (!solve_integer(aug, map.matrix().col(j), x))
      throw std::logic_error("factor_through: map does not factor");
    for (int i = 0; i < mono.domain().gens(); ++i) sol(i, j) = x[i];
  }
  return ModuleHom(map.domain(), mono.domain(), sol, false);
}

/// A right inverse of a surjection (a choice of preimage per generator).
inline ModuleHom surjection_lift(const ModuleHom& epi) {
  return factor_through(epi, ModuleHom::identity(epi.codomain()));
}

/// Exactness at B of  A --f--> B --g--> C  (requires g ∘ f = 0).
inline bool is_exact_pair(const ModuleHom& f, const ModuleHom& g) {
  if (!g.compose_after(f).is_zero())
    throw std::invalid_argument("is_exact_pair: g∘f != 0");
  return g.kernel().module.invariants() == f.image().module.invariants();
}

}  // namespace gsk
