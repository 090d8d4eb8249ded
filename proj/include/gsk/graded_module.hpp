#pragma once

/**
 * @file graded_module.hpp
 * @brief Finitely generated grading groups and graded modules.
 *
 * A grading group is a finitely generated abelian group kept in Smith form,
 * so degree equality is componentwise reduction.  A graded module is a finite
 * map from degrees to nonzero modules.
 */

#include <map>
#include <vector>

#include "gsk/errors.hpp"
#include "gsk/module.hpp"

namespace gsk {

using Degree = std::vector<Int>;

/// Finitely generated abelian group of degrees, in Smith coordinates.
class GradingGroup {
public:
  GradingGroup() = default;

  /// Group ⊕ Z/orders[i] (order 0 = free Z summand).
  explicit GradingGroup(std::vector<Int> orders)
      : grp_(Ring::integers(), std::move(orders)) {}

  static GradingGroup trivial() { return GradingGroup(std::vector<Int>{}); }

  /// Z^gens modulo the rows of the relation matrix.
  static GradingGroup from_presentation(int gens, const IntMat& rel_rows) {
    IntMat rel(gens, rel_rows.rows());
    for (int i = 0; i < rel_rows.rows(); ++i)
      for (int j = 0; j < gens; ++j) rel(j, i) = rel_rows(i, j);
    auto p = present(Ring::integers(), rel);
    GradingGroup g;
    g.grp_ = p.module;
    return g;
  }

  const Module& as_module() const { return grp_; }
  int rank_gens() const { return grp_.gens(); }
  const std::vector<Int>& orders() const { return grp_.orders(); }

  bool is_trivial() const { return grp_.gens() == 0 || grp_.is_zero(); }
  bool is_finite() const { return grp_.is_finite(); }

  /// nf is idempotent and additive; equality of elements is equality of nf.
  Degree normal_form(const Degree& d) const { return grp_.reduce(d); }

  Degree zero() const { return Degree(grp_.gens(), 0); }

  Degree add(const Degree& a, const Degree& b) const {
    Degree c(a);
    for (size_t i = 0; i < c.size(); ++i) c[i] += b[i];
    return normal_form(c);
  }

  Degree negate(const Degree& a) const {
    Degree c(a);
    for (auto& v : c) v = -v;
    return normal_form(c);
  }

  Degree sub(const Degree& a, const Degree& b) const {
    return add(a, negate(b));
  }

  std::vector<Degree> elements() const {
    if (!is_finite())
      throw InfiniteSupportError("grading group", "group is infinite");
    return grp_.elements();
  }

  bool operator==(const GradingGroup& o) const {
    return grp_.orders() == o.grp_.orders();
  }
  bool operator!=(const GradingGroup& o) const { return !(*this == o); }

  std::string to_string() const {
    if (is_trivial()) return "0";
    std::string s;
    for (size_t i = 0; i < orders().size(); ++i) {
      if (i) s += "+";
      s += orders()[i] == 0 ? "Z" : "Z/" + std::to_string(orders()[i]);
    }
    return s;
  }

private:
  Module grp_{Ring::integers(), {}};
};

/// Homomorphism of grading groups.
class GradingHom {
public:
  GradingHom() = default;
  GradingHom(GradingGroup dom, GradingGroup cod, IntMat mat)
      : dom_(std::move(dom)),
        cod_(std::move(cod)),
        hom_(dom_.as_module(), cod_.as_module(), std::move(mat)) {}

  static GradingHom identity(const GradingGroup& g) {
    return GradingHom(g, g, IntMat::identity(g.rank_gens()));
  }
  static GradingHom zero(const GradingGroup& dom, const GradingGroup& cod) {
    return GradingHom(dom, cod, IntMat(cod.rank_gens(), dom.rank_gens()));
  }

  const GradingGroup& domain() const { return dom_; }
  const GradingGroup& codomain() const { return cod_; }
  const IntMat& matrix() const { return hom_.matrix(); }
  const ModuleHom& as_module_hom() const { return hom_; }

  Degree apply(const Degree& d) const { return hom_.apply(d); }

  GradingHom compose_after(const GradingHom& first) const {
    GradingHom out;
    out.dom_ = first.dom_;
    out.cod_ = cod_;
    out.hom_ = hom_.compose_after(first.hom_);
    return out;
  }

  bool is_isomorphism() const { return hom_.is_isomorphism(); }

  GradingHom inverse() const {
    GradingHom out;
    out.dom_ = cod_;
    out.cod_ = dom_;
    out.hom_ = hom_.inverse();
    return out;
  }

  /// All degrees mapping to `target` (finite domain only).
  std::vector<Degree> fiber(const Degree& target) const {
    std::vector<Degree> out;
    for (const auto& d : dom_.elements())
      if (apply(d) == cod_.normal_form(target)) out.push_back(d);
    return out;
  }

  bool operator==(const GradingHom& o) const { return hom_ == o.hom_; }

private:
  GradingGroup dom_, cod_;
  ModuleHom hom_;
};

/// Graded module: finite support map degree -> nonzero module.
class GradedModule {
public:
  GradedModule() : ring_(Ring::integers()) {}
  GradedModule(Ring ring, GradingGroup grading)
      : ring_(std::move(ring)), grading_(std::move(grading)) {}

  static GradedModule concentrated(const Ring& r, const GradingGroup& g,
                                   const Degree& d, const Module& m) {
    GradedModule out(r, g);
    out.set_part(d, m);
    return out;
  }

  const Ring& ring() const { return ring_; }
  const GradingGroup& grading() const { return grading_; }
  const std::map<Degree, Module>& parts() const { return parts_; }

  bool is_zero() const { return parts_.empty(); }

  /// Degrees are stored in normal form and no stored part is zero.
  void set_part(const Degree& d, const Module& m) {
    require_same_ring(m.ring(), ring_);
    Degree nd = grading_.normal_form(d);
    if (m.is_zero())
      parts_.erase(nd);
    else
      parts_[nd] = m;
  }

  const Module& part(const Degree& d) const {
    auto it = parts_.find(grading_.normal_form(d));
    if (it != parts_.end()) return it->second;
    zero_cache_ = Module::zero(ring_);
    return zero_cache_;
  }

  bool has_part(const Degree& d) const {
    return parts_.count(grading_.normal_form(d)) > 0;
  }

  std::vector<Degree> support() const {
    std::vector<Degree> out;
    for (const auto& [d, m] : parts_) out.push_back(d);
    return out;
  }

  bool isomorphic(const GradedModule& o) const {
    if (grading_ != o.grading_ || parts_.size() != o.parts_.size()) return false;
    for (const auto& [d, m] : parts_) {
      auto it = o.parts_.find(d);
      if (it == o.parts_.end() || !m.isomorphic(it->second)) return false;
    }
    return true;
  }

  /// Total underlying module (forgetting the grading).
  Module total() const {
    std::vector<Int> orders;
    for (const auto& [d, m] : parts_)
      for (Int o : m.orders()) orders.push_back(o);
    return Module(ring_, orders);
  }

private:
  Ring ring_;
  GradingGroup grading_;
  std::map<Degree, Module> parts_;
  mutable Module zero_cache_{Ring::integers(), {}};
};

/// shift(A, λ): part at μ of the result is part at μ+λ of A.
inline GradedModule shift_module(const GradedModule& a, const Degree& lambda) {
  GradedModule out(a.ring(), a.grading());
  for (const auto& [d, m] : a.parts())
    out.set_part(a.grading().sub(d, lambda), m);
  return out;
}

/// Convolution-graded tensor product.
inline GradedModule graded_tensor(const GradedModule& a, const GradedModule& b) {
  if (a.grading() != b.grading())
    throw std::invalid_argument("graded_tensor: mismatched grading groups");
  GradedModule out(a.ring(), a.grading());
  std::map<Degree, std::vector<Module>> acc;
  for (const auto& [mu, am] : a.parts())
    for (const auto& [nu, bm] : b.parts())
      acc[a.grading().add(mu, nu)].push_back(tensor_module(am, bm).module);
  for (const auto& [d, mods] : acc)
    out.set_part(d, direct_sum(mods, a.ring()).module);
  return out;
}

/// Part at λ = degree-preserving homomorphisms A -> shift(B, λ)... i.e.
/// ⊕_μ Hom(A_μ, B_{μ+λ}).
inline GradedModule graded_hom(const GradedModule& a, const GradedModule& b) {
  if (a.grading() != b.grading())
    throw std::invalid_argument("graded_hom: mismatched grading groups");
  GradedModule out(a.ring(), a.grading());
  std::map<Degree, std::vector<Module>> acc;
  for (const auto& [mu, am] : a.parts())
    for (const auto& [nu, bm] : b.parts())
      acc[a.grading().sub(nu, mu)].push_back(hom_module(am, bm).module);
  for (const auto& [d, mods] : acc)
    out.set_part(d, direct_sum(mods, a.ring()).module);
  return out;
}

inline GradedModule graded_direct_sum(const GradedModule& a,
                                      const GradedModule& b) {
  GradedModule out(a.ring(), a.grading());
  for (const auto& [d, m] : a.parts()) out.set_part(d, m);
  for (const auto& [d, m] : b.parts())
    out.set_part(d, direct_sum({out.part(d), m}, a.ring()).module);
  return out;
}

/// Regrade along a grading homomorphism h: Λ -> Λ' (pushforward of degrees):
/// part at λ' = ⊕ over h-preimages λ of A_λ.
inline GradedModule regrade_along(const GradedModule& a, const GradingHom& h) {
  GradedModule out(a.ring(), h.codomain());
  std::map<Degree, std::vector<Module>> acc;
  for (const auto& [d, m] : a.parts()) acc[h.apply(d)].push_back(m);
  for (const auto& [d, mods] : acc)
    out.set_part(d, direct_sum(mods, a.ring()).module);
  return out;
}

/// Regrade along h in the contravariant direction (pullback of degrees):
/// part at λ of the result is A_{h(λ)}.  Requires the result to have finite
/// support: infinitely many λ hitting a nonzero part raises InfiniteSupport.
inline GradedModule regrade_pullback(const GradedModule& a, const GradingHom& h,
                                     const std::string& where = "regrade") {
  GradedModule out(a.ring(), h.domain());
  if (h.domain().is_finite()) {
    for (const auto& lam : h.domain().elements()) {
      const Module& m = a.part(h.apply(lam));
      if (!m.is_zero()) out.set_part(lam, m);
    }
    return out;
  }
  // Infinite domain: the preimage of any nonzero degree is either empty or an
  // infinite coset, unless the kernel is finite.
  auto ker = h.as_module_hom().kernel();
  if (!ker.module.is_finite()) {
    for (const auto& [d, m] : a.parts()) {
      // Does d have a preimage at all?
      std::vector<Int> sol;
      std::vector<int> tors;
      const Module& cm = h.codomain().as_module();
      IntMat aug = h.matrix();
      for (int r = 0; r < cm.gens(); ++r)
        if (cm.order(r) != 0) tors.push_back(r);
      IntMat ext(cm.gens(), static_cast<int>(tors.size()));
      for (size_t t = 0; t < tors.size(); ++t)
        ext(tors[t], static_cast<int>(t)) = cm.order(tors[t]);
      aug = IntMat::hcat(aug, ext);
      std::vector<Int> target(d);
      if (solve_integer(aug, target, sol))
        throw InfiniteSupportError(
            where, "infinitely many degrees pull back to a nonzero part");
    }
    return out;  // all parts miss the image: result is zero
  }
  // Finite kernel: enumerate preimages degree by degree.
  for (const auto& [d, m] : a.parts()) {
    std::vector<Int> sol;
    std::vector<int> tors;
    const Module& cm = h.codomain().as_module();
    IntMat aug = h.matrix();
    for (int r = 0; r < cm.gens(); ++r)
      if (cm.order(r) != 0) tors.push_back(r);
    IntMat ext(cm.gens(), static_cast<int>(tors.size()));
    for (size_t t = 0; t < tors.size(); ++t)
      ext(tors[t], static_cast<int>(t)) = cm.order(tors[t]);
    aug = IntMat::hcat(aug, ext);
    std::vector<Int> target(d);
    if (!solve_integer(aug, target, sol)) continue;
    Degree base(sol.begin(), sol.begin() + h.domain().rank_gens());
    for (const auto& k : ker.module.elements()) {
      Degree kd = ker.map.apply(k);
      Degree lam = h.domain().add(base, kd);
      if (!m.is_zero()) out.set_part(lam, m);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Graded rings (structure constants)
// ---------------------------------------------------------------------------

/// Commutative unital graded ring with finitely many homogeneous generators.
///
/// Stored as a graded module together with multiplication tables: for each
/// pair of stored degrees (λ, μ) a matrix sending basis pairs of
/// part_λ ⊗ part_μ into part_{λ+μ}.  Validated eagerly at construction.
class GradedRingData {
public:
  GradedRingData() = default;

  /// parts + a multiplication table keyed by degree pairs.  The matrix for
  /// (λ, μ) has rows indexed by part_{λ+μ} generators and columns by pairs
  /// (i, j) of generators of part_λ, part_μ in row-major order.
  GradedRingData(GradedModule parts,
                 std::map<std::pair<Degree, Degree>, IntMat> mult)
      : parts_(std::move(parts)), mult_(std::move(mult)) {
    validate();
  }

  /// The base ring concentrated in degree 0.
  static GradedRingData constant(const Ring& r, const GradingGroup& g) {
    GradedModule p(r, g);
    p.set_part(g.zero(), Module::unit(r));
    std::map<std::pair<Degree, Degree>, IntMat> mult;
    mult[{g.zero(), g.zero()}] = IntMat::identity(1);
    return GradedRingData(std::move(p), std::move(mult));
  }

  /// Truncated polynomial ring k[t]/t^m with deg t = tdeg.
  static GradedRingData truncated_polynomial(const Ring& r,
                                             const GradingGroup& g, int m,
                                             const Degree& tdeg) {
    GradedModule p(r, g);
    std::map<Degree, std::vector<int>> powers_at;  // degree -> powers of t
    Degree d = g.zero();
    for (int i = 0; i < m; ++i) {
      powers_at[d].push_back(i);
      d = g.add(d, tdeg);
    }
    for (const auto& [deg, pw] : powers_at)
      p.set_part(deg, Module::free(r, static_cast<int>(pw.size())));
    std::map<std::pair<Degree, Degree>, IntMat> mult;
    for (const auto& [d1, p1] : powers_at)
      for (const auto& [d2, p2] : powers_at) {
        Degree d12 = g.add(d1, d2);
        auto it = powers_at.find(d12);
        int rows = it == powers_at.end() ? 0 : static_cast<int>(it->second.size());
        IntMat m12(rows, static_cast<int>(p1.size() * p2.size()));
        for (size_t i = 0; i < p1.size(); ++i)
          for (size_t j = 0; j < p2.size(); ++j) {
            int pow = p1[i] + p2[j];
            if (pow >= m || it == powers_at.end()) continue;
            for (int k = 0; k < rows; ++k)
              if (it->second[k] == pow)
                m12(k, static_cast<int>(i * p2.size() + j)) = 1;
          }
        mult[{d1, d2}] = m12;
      }
    return GradedRingData(std::move(p), std::move(mult));
  }

  const GradedModule& parts() const { return parts_; }
  const Ring& ring() const { return parts_.ring(); }
  const GradingGroup& grading() const { return parts_.grading(); }

  bool is_constant_base() const {
    return parts_.parts().size() == 1 && parts_.has_part(grading().zero()) &&
           parts_.part(grading().zero()).isomorphic(Module::unit(ring())) &&
           mult_.size() == 1;
  }

  /// Product of basis element i in degree d1 with basis element j in degree
  /// d2, as a coefficient vector in part_{d1+d2}.
  std::vector<Int> multiply(const Degree& d1, int i, const Degree& d2,
                            int j) const {
    Degree n1 = grading().normal_form(d1), n2 = grading().normal_form(d2);
    Degree sum = grading().add(n1, n2);
    const Module& target = parts_.part(sum);
    auto it = mult_.find({n1, n2});
    if (it == mult_.end()) return std::vector<Int>(target.gens(), 0);
    const IntMat& m = it->second;
    int cols2 = parts_.part(n2).gens();
    std::vector<Int> out(target.gens(), 0);
    for (int k = 0; k < target.gens(); ++k) out[k] = m(k, i * cols2 + j);
    return target.reduce(out);
  }

  /// Multiplication by the homogeneous basis element (d1, i) as a module map
  /// part_{d2} -> part_{d1+d2}.
  ModuleHom mult_by(const Degree& d1, int i, const Degree& d2) const {
    const Module& src = parts_.part(grading().normal_form(d2));
    const Module& dst = parts_.part(grading().add(d1, d2));
    IntMat m(dst.gens(), src.gens());
    for (int j = 0; j < src.gens(); ++j) {
      auto col = multiply(d1, i, d2, j);
      for (int k = 0; k < dst.gens(); ++k) m(k, j) = col[k];
    }
    return ModuleHom(src, dst, m, false);
  }

private:
  void validate() const {
    const auto& g = grading();
    // Unit in degree 0.
    const Module& deg0 = parts_.part(g.zero());
    if (deg0.is_zero())
      throw std::invalid_argument("graded ring: no unit component in degree 0");
    // Commutativity and associativity on generators.
    auto degs = parts_.support();
    for (const auto& d1 : degs)
      for (const auto& d2 : degs) {
        int n1 = parts_.part(d1).gens(), n2 = parts_.part(d2).gens();
        for (int i = 0; i < n1; ++i)
          for (int j = 0; j < n2; ++j) {
            auto ab = multiply(d1, i, d2, j);
            auto ba = multiply(d2, j, d1, i);
            if (ab != ba)
              throw std::invalid_argument("graded ring: not commutative");
          }
      }
    for (const auto& d1 : degs)
      for (const auto& d2 : degs)
        for (const auto& d3 : degs) {
          int n1 = parts_.part(d1).gens(), n2 = parts_.part(d2).gens(),
              n3 = parts_.part(d3).gens();
          for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j)
              for (int k = 0; k < n3; ++k) {
                // (e_i e_j) e_k vs e_i (e_j e_k)
                Degree d12 = g.add(d1, d2);
                auto eij = multiply(d1, i, d2, j);
                std::vector<Int> lhs(parts_.part(g.add(d12, d3)).gens(), 0);
                for (int t = 0; t < static_cast<int>(eij.size()); ++t) {
                  if (eij[t] == 0) continue;
                  auto v = multiply(d12, t, d3, k);
                  for (size_t s = 0; s < lhs.size(); ++s) lhs[s] += eij[t] * v[s];
                }
                Degree d23 = g.add(d2, d3);
                auto ejk = multiply(d2, j, d3, k);
                std::vector<Int> rhs(parts_.part(g.add(d1, d23)).gens(), 0);
                for (int t = 0; t < static_cast<int>(ejk.size()); ++t) {
                  if (ejk[t] == 0) continue;
                  auto v = multiply(d1, i, d23, t);
                  for (size_t s = 0; s < rhs.size(); ++s) rhs[s] += ejk[t] * v[s];
                }
                const Module& tgt = parts_.part(g.add(d12, d3));
                if (tgt.reduce(lhs) != tgt.reduce(rhs))
                  throw std::invalid_argument("graded ring: not associative");
              }
        }
  }

  GradedModule parts_;
  std::map<std::pair<Degree, Degree>, IntMat> mult_;
};

}  // namespace gsk
