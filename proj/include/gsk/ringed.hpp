#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gsk/functors.hpp"
#include "gsk/hom_solver.hpp"

namespace gsk {

// ---------------------------------------------------------------------------
// Structure sheaves

/// Solve A x ≡ b modulo the given row orders (torsion-augmented columns).
inline bool solve_congruence(const IntMat& a, const std::vector<Int>& b,
                             const std::vector<Int>& row_orders,
                             std::vector<Int>& x_out) {
  std::vector<int> tors;
  for (size_t r = 0; r < row_orders.size(); ++r)
    if (row_orders[r] != 0) tors.push_back(static_cast<int>(r));
  IntMat aug(a.rows(), a.cols() + static_cast<int>(tors.size()));
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) aug(i, j) = a(i, j);
  for (size_t t = 0; t < tors.size(); ++t)
    aug(tors[t], a.cols() + static_cast<int>(t)) = row_orders[tors[t]];
  std::vector<Int> sol;
  if (!solve_integer(aug, b, sol)) return false;
  x_out.assign(sol.begin(), sol.begin() + a.cols());
  return true;
}

inline ModuleHom scale_hom(const ModuleHom& h, Int c) {
  IntMat m = h.matrix();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) *= c;
  return ModuleHom(h.domain(), h.codomain(), m, false);
}

/// Coordinates of the multiplicative unit in the degree-0 part.
inline std::vector<Int> ring_unit_coords(const GradedRingData& r) {
  const auto& g = r.grading();
  const Module& d0 = r.parts().part(g.zero());
  std::vector<std::vector<Int>> rows;
  std::vector<Int> rhs, row_orders;
  for (const auto& [d, p] : r.parts().parts()) {
    for (int j = 0; j < p.gens(); ++j) {
      std::vector<std::vector<Int>> block(p.gens(),
                                          std::vector<Int>(d0.gens(), 0));
      for (int k = 0; k < d0.gens(); ++k) {
        auto col = r.multiply(g.zero(), k, d, j);
        for (int i = 0; i < p.gens(); ++i) block[i][k] = col[i];
      }
      for (int i = 0; i < p.gens(); ++i) {
        rows.push_back(block[i]);
        rhs.push_back(i == j ? 1 : 0);
        row_orders.push_back(p.order(i));
      }
    }
  }
  IntMat a(static_cast<int>(rows.size()), d0.gens());
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < d0.gens(); ++j) a(static_cast<int>(i), j) = rows[i][j];
  std::vector<Int> u;
  if (!solve_congruence(a, rhs, row_orders, u))
    throw std::invalid_argument("graded ring has no unit");
  return d0.reduce(u);
}

/// A space together with a graded sheaf of commutative rings: structure data
/// per stalk plus ring-homomorphism restriction maps.
struct RingedGradedSpace {
  GradedSpace base;
  std::vector<GradedRingData> rings;
  GradedSheaf structure;  ///< the same data packaged as a sheaf

  bool constant_base() const {
    for (const auto& r : rings)
      if (!r.is_constant_base()) return false;
    return true;
  }
  const Ring& coeff() const { return structure.ring(); }
};

inline RingedGradedSpace ringed_space(
    GradedSpace base, std::vector<GradedRingData> rings,
    std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res) {
  RingedGradedSpace out;
  out.base = std::move(base);
  out.rings = std::move(rings);
  std::vector<GradedModule> stalks;
  for (const auto& r : out.rings) stalks.push_back(r.parts());
  out.structure = GradedSheaf(out.base, std::move(stalks), std::move(res));
  // restrictions must be unital ring homomorphisms
  for (auto [lo, hi] : out.base.poset().covers()) {
    const GradedRingData& rx = out.rings[lo];
    const GradedRingData& ry = out.rings[hi];
    auto u = ring_unit_coords(rx);
    auto hu = out.structure.restriction(lo, hi, rx.grading().zero()).apply(u);
    if (ry.parts().part(ry.grading().zero()).reduce(hu) != ring_unit_coords(ry))
      throw std::invalid_argument("ring restriction does not preserve the unit");
    for (const auto& [d1, p1] : rx.parts().parts())
      for (const auto& [d2, p2] : rx.parts().parts()) {
        Degree d12 = rx.grading().add(d1, d2);
        ModuleHom h12 = out.structure.restriction(lo, hi, d12);
        ModuleHom h1 = out.structure.restriction(lo, hi, d1);
        ModuleHom h2 = out.structure.restriction(lo, hi, d2);
        const auto& ghi = out.base.lambda(hi);
        Degree t1 = ghi.normal_form(out.base.restriction(lo, hi).apply(d1));
        Degree t2 = ghi.normal_form(out.base.restriction(lo, hi).apply(d2));
        const Module& tgt = ry.parts().part(ry.grading().add(t1, t2));
        for (int i = 0; i < p1.gens(); ++i)
          for (int j = 0; j < p2.gens(); ++j) {
            auto lhs = h12.apply(rx.multiply(d1, i, d2, j));
            std::vector<Int> e1(p1.gens(), 0), e2(p2.gens(), 0);
            e1[i] = 1;
            e2[j] = 1;
            auto a = h1.apply(e1);
            auto b = h2.apply(e2);
            std::vector<Int> rhs(tgt.gens(), 0);
            for (size_t s = 0; s < a.size(); ++s)
              for (size_t t = 0; t < b.size(); ++t) {
                if (a[s] == 0 || b[t] == 0) continue;
                auto prod = ry.multiply(t1, static_cast<int>(s), t2,
                                        static_cast<int>(t));
                for (size_t q = 0; q < rhs.size(); ++q)
                  rhs[q] += a[s] * b[t] * prod[q];
              }
            if (tgt.reduce(lhs) != tgt.reduce(rhs))
              throw std::invalid_argument(
                  "ring restriction is not multiplicative on cover " +
                  out.base.poset().name(lo) + " <= " +
                  out.base.poset().name(hi));
          }
      }
  }
  return out;
}

/// Constant structure sheaf: the base ring in degree zero everywhere.
inline RingedGradedSpace constant_ringed_space(const GradedSpace& s,
                                               const Ring& k) {
  std::vector<GradedRingData> rings;
  for (int x = 0; x < s.size(); ++x)
    rings.push_back(GradedRingData::constant(k, s.lambda(x)));
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  for (auto [lo, hi] : s.poset().covers())
    res[{lo, hi}][s.lambda(lo).zero()] = ModuleHom::identity(Module::unit(k));
  return ringed_space(s, std::move(rings), std::move(res));
}

// ---------------------------------------------------------------------------
// Module sheaves

/// Per-point action tables: for (ring degree d1, module degree d2) a matrix
/// with rows indexed by part_{d1+d2} generators and columns by pairs
/// (i ring gen, j module gen) in row-major order.
using ActionTable = std::map<std::pair<Degree, Degree>, IntMat>;

/// Multiplication by ring basis element (d1, i) as part_{d2} -> part_{d1+d2}.
inline ModuleHom action_hom(const GradedModule& rp, const GradedModule& mp,
                            const ActionTable& act, const Degree& d1, int i,
                            const Degree& d2) {
  const auto& g = mp.grading();
  Degree n1 = g.normal_form(d1), n2 = g.normal_form(d2);
  const Module& src = mp.part(n2);
  const Module& dst = mp.part(g.add(n1, n2));
  auto it = act.find({n1, n2});
  if (it == act.end()) return ModuleHom::zero(src, dst);
  IntMat m(dst.gens(), src.gens());
  for (int j = 0; j < src.gens(); ++j)
    for (int k = 0; k < dst.gens(); ++k)
      m(k, j) = it->second(k, i * src.gens() + j);
  return ModuleHom(src, dst, m, false);
}

struct RModuleSheaf {
  RingedGradedSpace rs;
  GradedSheaf sheaf;
  std::vector<ActionTable> act;

  ModuleHom act_hom(int x, const Degree& d1, int i, const Degree& d2) const {
    return gsk::action_hom(rs.rings[x].parts(), sheaf.stalk(x), act[x], d1, i,
                           d2);
  }
};

/// Validates unitality, associativity, and restriction compatibility.
inline RModuleSheaf r_module(RingedGradedSpace rs, GradedSheaf sheaf,
                             std::vector<ActionTable> act) {
  RModuleSheaf out{std::move(rs), std::move(sheaf), std::move(act)};
  const auto& s = out.rs.base;
  for (int x = 0; x < s.size(); ++x) {
    const GradedRingData& r = out.rs.rings[x];
    const auto& g = s.lambda(x);
    auto u = ring_unit_coords(r);
    for (const auto& [d2, p2] : out.sheaf.stalk(x).parts()) {
      ModuleHom one = ModuleHom::zero(p2, p2);
      for (size_t k = 0; k < u.size(); ++k) {
        if (u[k] == 0) continue;
        one = one +
              scale_hom(out.act_hom(x, g.zero(), static_cast<int>(k), d2), u[k]);
      }
      if (!(one == ModuleHom::identity(p2)))
        throw std::invalid_argument("action is not unital at " +
                                    s.poset().name(x));
    }
    for (const auto& [d1, p1] : r.parts().parts())
      for (const auto& [d2, p2] : r.parts().parts())
        for (const auto& [d3, p3] : out.sheaf.stalk(x).parts())
          for (int i = 0; i < p1.gens(); ++i)
            for (int j = 0; j < p2.gens(); ++j) {
              Degree d23 = g.add(d2, d3);
              ModuleHom lhs = out.act_hom(x, d1, i, d23)
                                  .compose_after(out.act_hom(x, d2, j, d3));
              auto prod = r.multiply(d1, i, d2, j);
              Degree d12 = g.add(d1, d2);
              const Module& tgt = out.sheaf.stalk(x).part(g.add(d12, d3));
              ModuleHom rhs =
                  ModuleHom::zero(out.sheaf.stalk(x).part(d3), tgt);
              for (size_t k = 0; k < prod.size(); ++k) {
                if (prod[k] == 0) continue;
                rhs = rhs + scale_hom(out.act_hom(x, d12, static_cast<int>(k), d3),
                                      prod[k]);
              }
              if (!(lhs == rhs))
                throw std::invalid_argument("action is not associative at " +
                                            s.poset().name(x));
            }
  }
  for (auto [lo, hi] : s.poset().covers()) {
    const auto& glo = s.lambda(lo);
    for (const auto& [d1, p1] : out.rs.rings[lo].parts().parts())
      for (const auto& [d2, p2] : out.sheaf.stalk(lo).parts())
        for (int i = 0; i < p1.gens(); ++i) {
          Degree d12 = glo.add(d1, d2);
          ModuleHom lhs = out.sheaf.restriction(lo, hi, d12).compose_after(
              out.act_hom(lo, d1, i, d2));
          auto ri = out.rs.structure.restriction(lo, hi, d1)
                        .apply([&] {
                          std::vector<Int> e(p1.gens(), 0);
                          e[i] = 1;
                          return e;
                        }());
          Degree t1 = s.lambda(hi).normal_form(s.restriction(lo, hi).apply(d1));
          Degree t2 = s.lambda(hi).normal_form(s.restriction(lo, hi).apply(d2));
          ModuleHom resm = out.sheaf.restriction(lo, hi, d2);
          ModuleHom rhs = ModuleHom::zero(
              resm.domain(), out.sheaf.stalk(hi).part(
                                 s.lambda(hi).add(t1, t2)));
          for (size_t k = 0; k < ri.size(); ++k) {
            if (ri[k] == 0) continue;
            rhs = rhs + scale_hom(out.act_hom(hi, t1, static_cast<int>(k), t2)
                                      .compose_after(resm),
                                  ri[k]);
          }
          if (!(lhs == rhs))
            throw std::invalid_argument(
                "action does not commute with restriction on cover " +
                s.poset().name(lo) + " <= " + s.poset().name(hi));
        }
  }
  return out;
}

/// The structure sheaf as a module over itself.
inline RModuleSheaf free_r_module(const RingedGradedSpace& rs) {
  std::vector<ActionTable> act;
  for (int x = 0; x < rs.base.size(); ++x) {
    ActionTable t;
    const GradedRingData& r = rs.rings[x];
    for (const auto& [d1, p1] : r.parts().parts())
      for (const auto& [d2, p2] : r.parts().parts()) {
        const Module& tgt = r.parts().part(r.grading().add(d1, d2));
        if (tgt.gens() == 0) continue;
        IntMat m(tgt.gens(), p1.gens() * p2.gens());
        for (int i = 0; i < p1.gens(); ++i)
          for (int j = 0; j < p2.gens(); ++j) {
            auto col = r.multiply(d1, i, d2, j);
            for (int k = 0; k < tgt.gens(); ++k)
              m(k, i * p2.gens() + j) = col[k];
          }
        t[{d1, d2}] = m;
      }
    act.push_back(std::move(t));
  }
  return r_module(rs, rs.structure, std::move(act));
}

/// Any graded sheaf as a module over a constant structure sheaf.
inline RModuleSheaf over_constant(const RingedGradedSpace& rs,
                                  const GradedSheaf& f) {
  if (!rs.constant_base())
    throw std::invalid_argument("structure sheaf is not the constant base");
  std::vector<ActionTable> act;
  for (int x = 0; x < rs.base.size(); ++x) {
    ActionTable t;
    Degree z = rs.base.lambda(x).zero();
    for (const auto& [d, p] : f.stalk(x).parts())
      t[{z, d}] = IntMat::identity(p.gens());
    act.push_back(std::move(t));
  }
  return r_module(rs, f, std::move(act));
}

// ---------------------------------------------------------------------------
// Balanced tensor product

/// A graded module with an action of a fixed graded ring, detached from any
/// particular sheaf.
struct ActedStalk {
  GradedModule mod;
  ActionTable act;
};

struct BalancedStalk {
  GradedModule mod;                          ///< the quotients
  TensorStalk plain;                         ///< underlying plain tensor
  std::map<Degree, SubquotientResult> proj;  ///< plain part -> quotient
};

/// M ⊗_A N as a stalkwise coequalizer of the two actions.
inline BalancedStalk balanced_tensor_stalk(const GradedRingData& a,
                                           const ActedStalk& m,
                                           const ActedStalk& n) {
  BalancedStalk out;
  out.plain = tensor_stalk(m.mod, n.mod);
  const auto& g = m.mod.grading();
  out.mod = GradedModule(m.mod.ring(), g);
  for (const auto& [d, blocks] : out.plain.layout) {
    const Module& amb = out.plain.mod.part(d);
    if (amb.gens() == 0) continue;
    std::vector<std::vector<Int>> rels;
    for (const auto& [lam, rp] : a.parts().parts()) {
      for (const auto& [alpha, ma] : m.mod.parts())
        for (const auto& [beta, nb] : n.mod.parts()) {
          if (!(g.add(g.add(lam, alpha), beta) == d)) continue;
          for (int i = 0; i < rp.gens(); ++i) {
            ModuleHom ami = action_hom(a.parts(), m.mod, m.act, lam, i, alpha);
            ModuleHom ani = action_hom(a.parts(), n.mod, n.act, lam, i, beta);
            for (int p = 0; p < ma.gens(); ++p)
              for (int q = 0; q < nb.gens(); ++q) {
                std::vector<Int> v(amb.gens(), 0);
                // (a·m)⊗n into the (alpha+lam, beta) block
                for (const auto& [da, db, t, off] : blocks) {
                  if (da == g.add(alpha, lam) && db == beta) {
                    std::vector<Int> ep(ma.gens(), 0);
                    ep[p] = 1;
                    auto im = ami.apply(ep);
                    for (size_t s = 0; s < im.size(); ++s)
                      v[off + t.pair_index(static_cast<int>(s), q)] += im[s];
                  }
                  // m⊗(a·n) into the (alpha, beta+lam) block
                  if (da == alpha && db == g.add(beta, lam)) {
                    std::vector<Int> eq(nb.gens(), 0);
                    eq[q] = 1;
                    auto in = ani.apply(eq);
                    for (size_t s = 0; s < in.size(); ++s)
                      v[off + t.pair_index(p, static_cast<int>(s))] -= in[s];
                  }
                }
                rels.push_back(std::move(v));
              }
          }
        }
    }
    IntMat rel(amb.gens(), static_cast<int>(rels.size()));
    for (size_t j = 0; j < rels.size(); ++j)
      for (int i = 0; i < amb.gens(); ++i)
        rel(i, static_cast<int>(j)) = rels[j][i];
    auto q = quotient(amb, rel);
    if (!q.module.is_zero()) out.mod.set_part(d, q.module);
    out.proj.emplace(d, std::move(q));
  }
  return out;
}

inline ActedStalk acted_stalk(const RModuleSheaf& f, int x) {
  return ActedStalk{f.sheaf.stalk(x), f.act[x]};
}

/// F ⊗_R G with the induced R-action (through the left factor) and induced
/// restriction maps.
inline RModuleSheaf tensor_over_r(const RModuleSheaf& f,
                                  const RModuleSheaf& g) {
  const auto& s = f.rs.base;
  GradedSheaf plain = tensor_sheaf(f.sheaf, g.sheaf);
  std::vector<BalancedStalk> bal;
  std::vector<GradedModule> stalks;
  for (int x = 0; x < s.size(); ++x) {
    bal.push_back(
        balanced_tensor_stalk(f.rs.rings[x], acted_stalk(f, x), acted_stalk(g, x)));
    stalks.push_back(bal.back().mod);
  }
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  for (auto [lo, hi] : s.poset().covers()) {
    const auto& rho = s.restriction(lo, hi);
    for (const auto& [d, q] : bal[lo].proj) {
      if (q.module.is_zero()) continue;
      Degree td = s.lambda(hi).normal_form(rho.apply(d));
      auto it = bal[hi].proj.find(td);
      if (it == bal[hi].proj.end()) continue;
      ModuleHom pr = plain.restriction(lo, hi, d);
      res[{lo, hi}][d] = it->second.map.compose_after(pr).compose_after(
          surjection_lift(q.map));
    }
  }
  GradedSheaf tsheaf =
      GradedSheaf(s, std::move(stalks), std::move(res)).with_ring(f.sheaf.ring());
  // action through the left factor, descended to the quotients
  std::vector<ActionTable> act;
  for (int x = 0; x < s.size(); ++x) {
    ActionTable t;
    const auto& g0 = s.lambda(x);
    for (const auto& [d1, p1] : f.rs.rings[x].parts().parts())
      for (const auto& [d2, q2] : bal[x].proj) {
        if (q2.module.is_zero()) continue;
        Degree d12 = g0.add(d1, d2);
        auto qt = bal[x].proj.find(d12);
        if (qt == bal[x].proj.end() || qt->second.module.is_zero()) continue;
        IntMat m(qt->second.module.gens(),
                 p1.gens() * q2.module.gens());
        for (int i = 0; i < p1.gens(); ++i) {
          // plain-tensor action of (d1, i), blockwise via the left factor
          const Module& sa = bal[x].plain.mod.part(d2);
          const Module& sb = bal[x].plain.mod.part(d12);
          IntMat pm(sb.gens(), sa.gens());
          for (const auto& [da, db, tn, off] : bal[x].plain.layout.at(d2)) {
            ModuleHom af = action_hom(f.rs.rings[x].parts(), f.sheaf.stalk(x),
                                      f.act[x], d1, i, da);
            for (const auto& [ea, eb, tn2, off2] :
                 bal[x].plain.layout.at(d12)) {
              if (!(ea == g0.add(da, d1)) || !(eb == db)) continue;
              ModuleHom blk = tensor_hom(
                  tn, tn2, af, ModuleHom::identity(g.sheaf.stalk(x).part(db)));
              for (int r = 0; r < blk.matrix().rows(); ++r)
                for (int c = 0; c < blk.matrix().cols(); ++c)
                  pm(off2 + r, off + c) += blk.matrix()(r, c);
            }
          }
          ModuleHom down = qt->second.map
                               .compose_after(ModuleHom(sa, sb, pm, false))
                               .compose_after(surjection_lift(q2.map));
          for (int j = 0; j < q2.module.gens(); ++j)
            for (int k = 0; k < qt->second.module.gens(); ++k)
              m(k, i * q2.module.gens() + j) = down.matrix()(k, j);
        }
        t[{d1, d2}] = m;
      }
    act.push_back(std::move(t));
  }
  return r_module(f.rs, std::move(tsheaf), std::move(act));
}

// ---------------------------------------------------------------------------
// R-linear Hom

/// R-linear natural transformations: the subspace of a SheafHomSpace cut out
/// by the linearity constraints against every homogeneous ring generator.
struct RHomSpace {
  SheafHomSpace hs;
  Module module;
  ModuleHom to_hs;  ///< inclusion into hs.module

  SheafMap map_of(const std::vector<Int>& e) const {
    return hs.map_of(to_hs.apply(e));
  }
  std::vector<Int> coords_of_map(const SheafMap& phi) const {
    auto c = hs.coords_of_map(phi);
    IntMat m(hs.module.gens(), 1);
    for (int i = 0; i < hs.module.gens(); ++i) m(i, 0) = c[i];
    ModuleHom into(Module::free(hs.module.ring(), 1), hs.module, m, false);
    return factor_through(to_hs, into).matrix().col(0);
  }
  std::vector<SheafMap> all_maps() const {
    std::vector<SheafMap> out;
    for (const auto& e : module.elements()) out.push_back(map_of(e));
    return out;
  }
};

inline RHomSpace r_hom_space(const RModuleSheaf& f, const RModuleSheaf& g,
                             const PointSet& pts, const DegreeFamily& shift) {
  RHomSpace out;
  out.hs = sheaf_hom_space(f.sheaf, g.sheaf, pts, shift);
  const auto& s = f.rs.base;
  std::vector<std::vector<Int>> rows;
  std::vector<Int> row_orders;
  std::map<std::pair<int, Degree>, size_t> slot_index;
  for (size_t k = 0; k < out.hs.slots.size(); ++k)
    slot_index[out.hs.slots[k]] = k;
  for (int y : out.hs.pts) {
    const auto& gy = s.lambda(y);
    for (const auto& [lam, rp] : f.rs.rings[y].parts().parts())
      for (const auto& mu : f.sheaf.stalk(y).support())
        for (int i = 0; i < rp.gens(); ++i) {
          Degree lmu = gy.add(lam, mu);
          Degree tgt = gy.add(lmu, shift.at(y));
          HomModule t = hom_module(f.sheaf.stalk(y).part(mu),
                                   g.sheaf.stalk(y).part(tgt));
          std::vector<std::vector<Int>> block(
              t.module.gens(), std::vector<Int>(out.hs.ambient.gens(), 0));
          ModuleHom af = f.act_hom(y, lam, i, mu);
          ModuleHom ag = g.act_hom(y, lam, i, gy.add(mu, shift.at(y)));
          auto it = slot_index.find({y, mu});
          if (it != slot_index.end()) {
            size_t k = it->second;
            for (int j = 0; j < out.hs.homs[k].module.gens(); ++j) {
              std::vector<Int> e(out.hs.homs[k].module.gens(), 0);
              e[j] = 1;
              auto c = t.coords_of(ag.compose_after(out.hs.homs[k].hom_of(e)));
              for (int r = 0; r < t.module.gens(); ++r)
                block[r][out.hs.offset[k] + j] += c[r];
            }
          }
          auto it2 = slot_index.find({y, lmu});
          if (it2 != slot_index.end()) {
            size_t k = it2->second;
            for (int j = 0; j < out.hs.homs[k].module.gens(); ++j) {
              std::vector<Int> e(out.hs.homs[k].module.gens(), 0);
              e[j] = 1;
              auto c = t.coords_of(out.hs.homs[k].hom_of(e).compose_after(af));
              for (int r = 0; r < t.module.gens(); ++r)
                block[r][out.hs.offset[k] + j] -= c[r];
            }
          }
          for (int r = 0; r < t.module.gens(); ++r) {
            rows.push_back(std::move(block[r]));
            row_orders.push_back(t.module.order(r));
          }
        }
  }
  // evaluate the constraints on the generators of the naturality solution
  IntMat cons(static_cast<int>(rows.size()), out.hs.module.gens());
  for (size_t r = 0; r < rows.size(); ++r)
    for (int j = 0; j < out.hs.module.gens(); ++j) {
      Int v = 0;
      for (int a = 0; a < out.hs.ambient.gens(); ++a)
        v += rows[r][a] * out.hs.incl.matrix()(a, j);
      cons(static_cast<int>(r), j) = v;
    }
  auto sub = submodule(out.hs.module, congruence_kernel(cons, row_orders));
  out.module = sub.module;
  out.to_hs = sub.map;
  return out;
}

inline std::vector<SheafMap> all_r_maps(const RModuleSheaf& f,
                                        const RModuleSheaf& g) {
  DegreeFamily zero;
  for (int x = 0; x < f.rs.base.size(); ++x)
    zero[x] = f.rs.base.lambda(x).zero();
  return r_hom_space(f, g, f.rs.base.poset().whole(), zero).all_maps();
}

/// Internal Hom over R, with its R-action by post-composition.
struct RHomSheafData {
  RModuleSheaf sheaf;
  std::vector<std::map<Degree, RHomSpace>> data;
};

inline RHomSheafData hom_over_r(const RModuleSheaf& f, const RModuleSheaf& g) {
  const auto& s = f.rs.base;
  std::vector<GradedModule> stalks;
  std::vector<std::map<Degree, RHomSpace>> data(s.size());
  for (int x = 0; x < s.size(); ++x) {
    if (!s.lambda(x).is_finite())
      throw InfiniteSupportError("hom_over_r",
                                 "infinite grading at " + s.poset().name(x));
    PointSet ux = s.poset().min_open(x);
    GradedModule st(f.sheaf.ring(), s.lambda(x));
    for (const auto& lam : s.lambda(x).elements()) {
      DegreeFamily shift;
      for (int y : ux) shift[y] = s.restriction(x, y).apply(lam);
      RHomSpace hs = r_hom_space(f, g, ux, shift);
      if (!hs.module.is_zero()) st.set_part(lam, hs.module);
      data[x].emplace(lam, std::move(hs));
    }
    stalks.push_back(std::move(st));
  }
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  for (auto [lo, hi] : s.poset().covers()) {
    for (const auto& [lam, big] : data[lo]) {
      if (big.module.is_zero()) continue;
      Degree tlam =
          s.lambda(hi).normal_form(s.restriction(lo, hi).apply(lam));
      const RHomSpace& small = data[hi].at(tlam);
      if (small.module.is_zero()) continue;
      IntMat m(small.module.gens(), big.module.gens());
      for (int j = 0; j < big.module.gens(); ++j) {
        std::vector<Int> e(big.module.gens(), 0);
        e[j] = 1;
        auto c = small.coords_of_map(big.map_of(e));
        for (int i = 0; i < small.module.gens(); ++i) m(i, j) = c[i];
      }
      res[{lo, hi}][lam] =
          ModuleHom(big.module, small.module, m, false);
    }
  }
  GradedSheaf hsheaf = GradedSheaf(s, std::move(stalks), std::move(res))
                           .with_ring(f.sheaf.ring());
  // R-action: (r·φ)(m) = r·φ(m), slotwise post-composition after restricting r
  std::vector<ActionTable> act(s.size());
  for (int x = 0; x < s.size(); ++x) {
    const auto& gx = s.lambda(x);
    for (const auto& [d1, p1] : f.rs.rings[x].parts().parts())
      for (const auto& [d2, hs] : data[x]) {
        if (hs.module.is_zero()) continue;
        Degree d12 = gx.add(d1, d2);
        const RHomSpace& tgt = data[x].at(d12);
        if (tgt.module.is_zero()) continue;
        IntMat m(tgt.module.gens(), p1.gens() * hs.module.gens());
        for (int i = 0; i < p1.gens(); ++i)
          for (int j = 0; j < hs.module.gens(); ++j) {
            std::vector<Int> e(hs.module.gens(), 0);
            e[j] = 1;
            SheafMap phi = hs.map_of(e);
            // slot components of r·φ on the slots of the target space
            std::map<int, std::map<Degree, ModuleHom>> cc;
            for (size_t k = 0; k < tgt.hs.slots.size(); ++k) {
              auto [y, mu] = tgt.hs.slots[k];
              auto ri = f.rs.structure.restriction(x, y, d1).apply([&] {
                std::vector<Int> ei(p1.gens(), 0);
                ei[i] = 1;
                return ei;
              }());
              Degree t1 = s.restriction(x, y).apply(d1);
              Degree muout = s.lambda(y).add(mu, hs.hs.shift.at(y));
              ModuleHom comp = ModuleHom::zero(
                  f.sheaf.stalk(y).part(mu),
                  g.sheaf.stalk(y).part(
                      s.lambda(y).add(mu, tgt.hs.shift.at(y))));
              for (size_t q = 0; q < ri.size(); ++q) {
                if (ri[q] == 0) continue;
                comp = comp +
                       scale_hom(g.act_hom(y, t1, static_cast<int>(q), muout)
                                     .compose_after(phi.component(y, mu)),
                                 ri[q]);
              }
              cc[y][mu] = comp;
            }
            SheafMap rphi(tgt.hs.dom, tgt.hs.cod, std::move(cc), false);
            auto c = tgt.coords_of_map(rphi);
            for (int r = 0; r < tgt.module.gens(); ++r)
              m(r, i * hs.module.gens() + j) = c[r];
          }
        act[x][{d1, d2}] = m;
      }
  }
  RHomSheafData out;
  out.sheaf = r_module(f.rs, std::move(hsheaf), std::move(act));
  out.data = std::move(data);
  return out;
}

// ---------------------------------------------------------------------------
// Maps of ringed spaces

/// A graded space map together with the comparison f♯ : f⁻¹R_Y -> R_X,
/// required to be a unital multiplicative map of graded ring sheaves.
struct RingedMap {
  GradedSpaceMap f;
  RingedGradedSpace sx, sy;
  GradedSheaf pulled;   ///< f⁻¹R_Y
  SheafMap comparison;  ///< f♯ packaged as a sheaf map
};

/// The stalk of f⁻¹R_Y at x as a graded ring over Λ_x: blockwise
/// multiplication from the target ring stalk.
inline GradedRingData pulled_ring(const RingedMap& rm, int x) {
  auto layout = inverse_fiber_layout(rm.f, rm.sy.structure, x);
  int y = rm.f.apply(x);
  const GradedRingData& ry = rm.sy.rings[y];
  const auto& gx = rm.f.domain().lambda(x);
  const GradedModule& st = rm.pulled.stalk(x);
  std::map<std::pair<Degree, Degree>, IntMat> mult;
  for (const auto& [l1, blocks1] : layout)
    for (const auto& [l2, blocks2] : layout) {
      const Module& p1 = st.part(l1);
      const Module& p2 = st.part(l2);
      if (p1.gens() == 0 || p2.gens() == 0) continue;
      Degree l12 = gx.add(l1, l2);
      const Module& tgt = st.part(l12);
      IntMat m(tgt.gens(), p1.gens() * p2.gens());
      auto it12 = layout.find(l12);
      for (const auto& [mu1, off1] : blocks1)
        for (const auto& [mu2, off2] : blocks2) {
          Degree mu12 = ry.grading().add(mu1, mu2);
          if (it12 == layout.end()) continue;
          for (const auto& [nu, off12] : it12->second) {
            if (!(nu == mu12)) continue;
            int n1 = ry.parts().part(mu1).gens();
            int n2 = ry.parts().part(mu2).gens();
            for (int i = 0; i < n1; ++i)
              for (int j = 0; j < n2; ++j) {
                auto col = ry.multiply(mu1, i, mu2, j);
                for (size_t k = 0; k < col.size(); ++k)
                  m(off12 + static_cast<int>(k),
                    (off1 + i) * p2.gens() + (off2 + j)) += col[k];
              }
          }
        }
      mult[{l1, l2}] = m;
    }
  return GradedRingData(st, std::move(mult));
}

/// Validates f♯ as a natural, unital, multiplicative comparison map.
inline RingedMap ringed_map(GradedSpaceMap f, RingedGradedSpace sx,
                            RingedGradedSpace sy,
                            std::map<int, std::map<Degree, ModuleHom>> sharp) {
  RingedMap out;
  out.f = std::move(f);
  out.sx = std::move(sx);
  out.sy = std::move(sy);
  out.pulled = inverse_image_gr(out.f, out.sy.structure);
  out.comparison =
      SheafMap(out.pulled, out.sx.structure, std::move(sharp), false);
  auto errs = out.comparison.validate();
  if (!errs.empty())
    throw std::invalid_argument("comparison map: " + errs.front());
  for (int x = 0; x < out.f.domain().size(); ++x) {
    GradedRingData ax = pulled_ring(out, x);
    const GradedRingData& rx = out.sx.rings[x];
    const auto& gx = out.f.domain().lambda(x);
    auto ua = ring_unit_coords(ax);
    auto hu = out.comparison.component(x, gx.zero()).apply(ua);
    if (rx.parts().part(gx.zero()).reduce(hu) != ring_unit_coords(rx))
      throw std::invalid_argument(
          "comparison map does not preserve the unit at " +
          out.f.domain().poset().name(x));
    for (const auto& [l1, p1] : ax.parts().parts())
      for (const auto& [l2, p2] : ax.parts().parts()) {
        Degree l12 = gx.add(l1, l2);
        ModuleHom h1 = out.comparison.component(x, l1);
        ModuleHom h2 = out.comparison.component(x, l2);
        ModuleHom h12 = out.comparison.component(x, l12);
        const Module& tgt = rx.parts().part(l12);
        for (int i = 0; i < p1.gens(); ++i)
          for (int j = 0; j < p2.gens(); ++j) {
            auto lhs = h12.apply(ax.multiply(l1, i, l2, j));
            std::vector<Int> e1(p1.gens(), 0), e2(p2.gens(), 0);
            e1[i] = 1;
            e2[j] = 1;
            auto a = h1.apply(e1);
            auto b = h2.apply(e2);
            std::vector<Int> rhs(tgt.gens(), 0);
            for (size_t s = 0; s < a.size(); ++s)
              for (size_t t = 0; t < b.size(); ++t) {
                if (a[s] == 0 || b[t] == 0) continue;
                auto prod = rx.multiply(l1, static_cast<int>(s), l2,
                                        static_cast<int>(t));
                for (size_t q = 0; q < rhs.size(); ++q)
                  rhs[q] += a[s] * b[t] * prod[q];
              }
            if (tgt.reduce(lhs) != tgt.reduce(rhs))
              throw std::invalid_argument(
                  "comparison map is not multiplicative at " +
                  out.f.domain().poset().name(x));
          }
      }
  }
  return out;
}

/// The easy case: both structure sheaves are the constant base ring.
inline RingedMap constant_ringed_map(const GradedSpaceMap& f,
                                     const RingedGradedSpace& sx,
                                     const RingedGradedSpace& sy) {
  GradedSheaf pulled = inverse_image_gr(f, sy.structure);
  std::map<int, std::map<Degree, ModuleHom>> sharp;
  for (int x = 0; x < f.domain().size(); ++x) {
    Degree z = f.domain().lambda(x).zero();
    sharp[x][z] = ModuleHom(pulled.stalk(x).part(z),
                            sx.structure.stalk(x).part(z), IntMat::identity(1),
                            false);
  }
  return ringed_map(f, sx, sy, std::move(sharp));
}

/// f*G = R_X ⊗_{f⁻¹R_Y} f⁻¹G, stalkwise balanced tensor, with the R_X-action
/// through the structure factor.
inline RModuleSheaf module_pullback(const RingedMap& rm,
                                    const RModuleSheaf& g) {
  const GradedSpace& xs = rm.f.domain();
  GradedSheaf pg = inverse_image_gr(rm.f, g.sheaf);
  GradedSheaf plain = tensor_sheaf(pg, rm.sx.structure);
  std::vector<BalancedStalk> bal;
  std::vector<GradedModule> stalks;
  for (int x = 0; x < xs.size(); ++x) {
    GradedRingData ax = pulled_ring(rm, x);
    int y = rm.f.apply(x);
    auto layout = inverse_fiber_layout(rm.f, g.sheaf, x);
    auto rlayout = inverse_fiber_layout(rm.f, rm.sy.structure, x);
    const auto& gx = xs.lambda(x);
    // action of the pulled ring on the pulled module, blockwise from y
    ActionTable pact;
    for (const auto& [l1, rblocks] : rlayout)
      for (const auto& [l2, mblocks] : layout) {
        const Module& p1 = ax.parts().part(l1);
        const Module& p2 = pg.stalk(x).part(l2);
        if (p1.gens() == 0 || p2.gens() == 0) continue;
        Degree l12 = gx.add(l1, l2);
        const Module& tgt = pg.stalk(x).part(l12);
        if (tgt.gens() == 0) continue;
        IntMat m(tgt.gens(), p1.gens() * p2.gens());
        auto it12 = layout.find(l12);
        for (const auto& [mu1, off1] : rblocks)
          for (const auto& [mu2, off2] : mblocks) {
            Degree mu12 = rm.sy.base.lambda(y).add(mu1, mu2);
            if (it12 == layout.end()) continue;
            for (const auto& [nu, off12] : it12->second) {
              if (!(nu == mu12)) continue;
              int n1 = rm.sy.rings[y].parts().part(mu1).gens();
              for (int i = 0; i < n1; ++i) {
                ModuleHom a = g.act_hom(y, mu1, i, mu2);
                for (int jj = 0; jj < a.matrix().cols(); ++jj)
                  for (int k = 0; k < a.matrix().rows(); ++k)
                    m(off12 + k, (off1 + i) * p2.gens() + (off2 + jj)) +=
                        a.matrix()(k, jj);
              }
            }
          }
        pact[{l1, l2}] = m;
      }
    // action of the pulled ring on R_X through the comparison map
    ActionTable ract;
    const GradedRingData& rx = rm.sx.rings[x];
    for (const auto& [l1, p1] : ax.parts().parts())
      for (const auto& [l2, p2] : rx.parts().parts()) {
        Degree l12 = gx.add(l1, l2);
        const Module& tgt = rx.parts().part(l12);
        if (tgt.gens() == 0 || p1.gens() == 0 || p2.gens() == 0) continue;
        IntMat m(tgt.gens(), p1.gens() * p2.gens());
        ModuleHom h1 = rm.comparison.component(x, l1);
        for (int i = 0; i < p1.gens(); ++i) {
          std::vector<Int> e(p1.gens(), 0);
          e[i] = 1;
          auto r = h1.apply(e);
          for (int j = 0; j < p2.gens(); ++j)
            for (size_t s = 0; s < r.size(); ++s) {
              if (r[s] == 0) continue;
              auto col = rx.multiply(l1, static_cast<int>(s), l2, j);
              for (size_t k = 0; k < col.size(); ++k)
                m(static_cast<int>(k), i * p2.gens() + j) += r[s] * col[k];
            }
        }
        ract[{l1, l2}] = m;
      }
    bal.push_back(balanced_tensor_stalk(ax, ActedStalk{pg.stalk(x), pact},
                                        ActedStalk{rx.parts(), ract}));
    stalks.push_back(bal.back().mod);
  }
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  for (auto [lo, hi] : xs.poset().covers()) {
    for (const auto& [d, q] : bal[lo].proj) {
      if (q.module.is_zero()) continue;
      Degree td = xs.lambda(hi).normal_form(xs.restriction(lo, hi).apply(d));
      auto it = bal[hi].proj.find(td);
      if (it == bal[hi].proj.end()) continue;
      ModuleHom pr = plain.restriction(lo, hi, d);
      res[{lo, hi}][d] = it->second.map.compose_after(pr).compose_after(
          surjection_lift(q.map));
    }
  }
  GradedSheaf tsheaf =
      GradedSheaf(xs, std::move(stalks), std::move(res)).with_ring(g.sheaf.ring());
  // R_X-action through the structure factor, descended to the quotients
  std::vector<ActionTable> act;
  for (int x = 0; x < xs.size(); ++x) {
    ActionTable t;
    const auto& gx = xs.lambda(x);
    const GradedRingData& rx = rm.sx.rings[x];
    for (const auto& [d1, p1] : rx.parts().parts())
      for (const auto& [d2, q2] : bal[x].proj) {
        if (q2.module.is_zero()) continue;
        Degree d12 = gx.add(d1, d2);
        auto qt = bal[x].proj.find(d12);
        if (qt == bal[x].proj.end() || qt->second.module.is_zero()) continue;
        IntMat m(qt->second.module.gens(), p1.gens() * q2.module.gens());
        for (int i = 0; i < p1.gens(); ++i) {
          const Module& sa = bal[x].plain.mod.part(d2);
          const Module& sb = bal[x].plain.mod.part(d12);
          IntMat pm(sb.gens(), sa.gens());
          for (const auto& [da, db, tn, off] : bal[x].plain.layout.at(d2)) {
            ModuleHom mb = rx.mult_by(d1, i, db);
            for (const auto& [ea, eb, tn2, off2] :
                 bal[x].plain.layout.at(d12)) {
              if (!(ea == da) || !(eb == gx.add(db, d1))) continue;
              ModuleHom blk = tensor_hom(
                  tn, tn2, ModuleHom::identity(pg.stalk(x).part(da)), mb);
              for (int r = 0; r < blk.matrix().rows(); ++r)
                for (int c = 0; c < blk.matrix().cols(); ++c)
                  pm(off2 + r, off + c) += blk.matrix()(r, c);
            }
          }
          ModuleHom down = qt->second.map
                               .compose_after(ModuleHom(sa, sb, pm, false))
                               .compose_after(surjection_lift(q2.map));
          for (int j = 0; j < q2.module.gens(); ++j)
            for (int k = 0; k < qt->second.module.gens(); ++k)
              m(k, i * q2.module.gens() + j) = down.matrix()(k, j);
        }
        t[{d1, d2}] = m;
      }
    act.push_back(std::move(t));
  }
  return r_module(rm.sx, std::move(tsheaf), std::move(act));
}

/// f_*F with its R_Y-action: a section over f⁻¹(U_y) is acted on
/// componentwise, after restricting the ring element and pushing it through
/// the comparison map.  The construction itself certifies the degree
/// bookkeeping: the componentwise action must land inside the limit in
/// degree λ+μ.
struct PushforwardModule {
  RModuleSheaf mod;
  PushforwardResult push;
};

inline PushforwardModule pushforward_module(const RingedMap& rm,
                                            const RModuleSheaf& f) {
  const GradedSpace& ys = rm.f.codomain();
  PushforwardResult push = pushforward_gr(rm.f, f.sheaf);
  std::vector<ActionTable> act(ys.size());
  std::vector<std::map<Degree,
                       std::vector<std::pair<Degree, int>>>> layouts;
  for (int x = 0; x < rm.f.domain().size(); ++x)
    layouts.push_back(inverse_fiber_layout(rm.f, rm.sy.structure, x));
  for (int y = 0; y < ys.size(); ++y) {
    const GradedRingData& ry = rm.sy.rings[y];
    const auto& gy = ys.lambda(y);
    for (const auto& [lam, p1] : ry.parts().parts())
      for (const auto& [mu, lim] : push.data[y]) {
        if (lim.module.is_zero()) continue;
        Degree lm = gy.add(lam, mu);
        auto it = push.data[y].find(lm);
        if (it == push.data[y].end() || it->second.module.is_zero()) continue;
        const LimitData& tgt = it->second;
        IntMat m(tgt.module.gens(), p1.gens() * lim.module.gens());
        for (int i = 0; i < p1.gens(); ++i) {
          IntMat amb(tgt.ambient.gens(), lim.module.gens());
          for (size_t k = 0; k < lim.pts.size(); ++k) {
            int x = lim.pts[k];
            // restrict the ring element to x and push it through f♯
            std::vector<Int> e(p1.gens(), 0);
            e[i] = 1;
            auto rr = rm.sy.structure.restriction(y, rm.f.apply(x), lam)
                          .apply(e);
            Degree rlam = rm.sy.base.lambda(rm.f.apply(x))
                              .normal_form(rm.sy.base
                                               .restriction(y, rm.f.apply(x))
                                               .apply(lam));
            Degree lx = rm.f.domain().lambda(x).normal_form(
                pushforward_degree_map(rm.f, y, x).apply(lam));
            std::vector<Int> pe(rm.pulled.stalk(x).part(lx).gens(), 0);
            auto lit = layouts[x].find(lx);
            if (lit != layouts[x].end())
              for (const auto& [nu, off] : lit->second) {
                if (!(nu == rlam)) continue;
                for (size_t s = 0; s < rr.size(); ++s)
                  pe[off + static_cast<int>(s)] += rr[s];
              }
            auto r = rm.comparison.component(x, lx).apply(pe);
            ModuleHom a = ModuleHom::zero(
                f.sheaf.stalk(x).part(lim.degs[k]),
                f.sheaf.stalk(x).part(
                    rm.f.domain().lambda(x).add(lx, lim.degs[k])));
            for (size_t s = 0; s < r.size(); ++s) {
              if (r[s] == 0) continue;
              a = a + scale_hom(
                          f.act_hom(x, lx, static_cast<int>(s), lim.degs[k]),
                          r[s]);
            }
            ModuleHom part = a.compose_after(lim.component(k));
            for (int r2 = 0; r2 < part.matrix().rows(); ++r2)
              for (int c = 0; c < part.matrix().cols(); ++c)
                amb(tgt.offset[k] + r2, c) += part.matrix()(r2, c);
          }
          ModuleHom into(lim.module, tgt.ambient, amb, false);
          ModuleHom down = factor_through(tgt.incl, into);
          for (int j = 0; j < lim.module.gens(); ++j)
            for (int k = 0; k < tgt.module.gens(); ++k)
              m(k, i * lim.module.gens() + j) = down.matrix()(k, j);
        }
        act[y][{lam, mu}] = m;
      }
  }
  PushforwardModule out;
  out.mod = r_module(rm.sy, push.sheaf, std::move(act));
  out.push = std::move(push);
  return out;
}

/// Certification of f* ⊣ f_* for module sheaves.  Over constant structure
/// sheaves this is the plain sheaf adjunction (unit/counit triangles); in
/// general we certify by matching Hom cardinalities over finite coefficients.
struct ModuleAdjunctionReport {
  bool ok = false;
  bool via_triangles = false;
  Int left_count = -1, right_count = -1;
  std::string failure;
};

inline ModuleAdjunctionReport check_module_adjunction(const RingedMap& rm,
                                                      const RModuleSheaf& f,
                                                      const RModuleSheaf& g) {
  ModuleAdjunctionReport out;
  if (rm.sx.constant_base() && rm.sy.constant_base()) {
    auto cert = check_sheaf_adjunction(rm.f, f.sheaf, g.sheaf);
    out.via_triangles = true;
    out.ok = cert.triangles_ok && cert.hom_bijection_ok;
    out.failure = cert.failure;
    return out;
  }
  RModuleSheaf pb = module_pullback(rm, g);
  PushforwardModule pm = pushforward_module(rm, f);
  DegreeFamily zx, zy;
  for (int x = 0; x < rm.f.domain().size(); ++x)
    zx[x] = rm.f.domain().lambda(x).zero();
  for (int y = 0; y < rm.f.codomain().size(); ++y)
    zy[y] = rm.f.codomain().lambda(y).zero();
  Module left =
      r_hom_space(pb, f, rm.f.domain().poset().whole(), zx).module;
  Module right =
      r_hom_space(g, pm.mod, rm.f.codomain().poset().whole(), zy).module;
  if (!left.is_finite() || !right.is_finite()) {
    out.failure = "hom spaces are not finite";
    return out;
  }
  out.left_count = left.cardinality();
  out.right_count = right.cardinality();
  out.ok = out.left_count == out.right_count;
  if (!out.ok) out.failure = "hom cardinalities differ";
  return out;
}

/// Pushforward degree bookkeeping: acting by a degree-λ ring section on
/// sections in degree μ must land inside the limit in degree λ+μ, slotwise.
struct BookkeepingReport {
  bool ok = false;
  std::string failure;
};

inline BookkeepingReport action_degree_bookkeeping_check(
    const RingedMap& rm, const RModuleSheaf& f) {
  BookkeepingReport out;
  try {
    PushforwardModule pm = pushforward_module(rm, f);
    for (int y = 0; y < rm.f.codomain().size(); ++y)
      for (const auto& [key, m] : pm.mod.act[y]) {
        Degree sum = rm.f.codomain().lambda(y).add(key.first, key.second);
        if (m.rows() != pm.mod.sheaf.stalk(y).part(sum).gens()) {
          out.failure = "action block lands in the wrong degree at " +
                        rm.f.codomain().poset().name(y);
          return out;
        }
      }
    out.ok = true;
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace gsk
