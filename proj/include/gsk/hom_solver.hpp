#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gsk/sheaf.hpp"

namespace gsk {

/// The module of natural transformations F -> G over a sub-poset, of a fixed
/// degree shift: the component at x in source degree μ maps (F_x)_μ into
/// (G_x)_{μ+λ_x}.  Solved as the kernel of the naturality constraints inside
/// the direct sum of the slotwise Hom modules.
struct SheafHomSpace {
  GradedSheaf dom, cod;
  std::vector<int> pts;
  DegreeFamily shift;
  std::vector<std::pair<int, Degree>> slots;  ///< (point, source degree)
  std::vector<HomModule> homs;
  std::vector<int> offset;
  Module ambient;
  Module module;   ///< solution space
  ModuleHom incl;  ///< solutions -> ambient coordinates

  std::vector<Int> slot_coords(const std::vector<Int>& elem, size_t k) const {
    std::vector<Int> amb = incl.apply(elem);
    std::vector<Int> out(homs[k].module.gens());
    for (int i = 0; i < homs[k].module.gens(); ++i) out[i] = amb[offset[k] + i];
    return out;
  }

  ModuleHom slot_hom(const std::vector<Int>& elem, size_t k) const {
    return homs[k].hom_of(slot_coords(elem, k));
  }

  /// Degree-preserving transformations only (zero shift): package an element
  /// as a SheafMap on the full space (components outside the sub-poset are
  /// zero).
  SheafMap map_of(const std::vector<Int>& elem) const {
    std::map<int, std::map<Degree, ModuleHom>> comp;
    for (size_t k = 0; k < slots.size(); ++k)
      comp[slots[k].first][slots[k].second] = slot_hom(elem, k);
    return SheafMap(dom, cod, std::move(comp), false);
  }

  /// The (x, mu) component of a packaged element, with correct shapes even
  /// for a nonzero shift; zero when no slot covers the pair.
  ModuleHom component_hom(const std::vector<Int>& elem, int x,
                          const Degree& mu) const {
    Degree nd = dom.space().lambda(x).normal_form(mu);
    for (size_t k = 0; k < slots.size(); ++k)
      if (slots[k].first == x && slots[k].second == nd)
        return slot_hom(elem, k);
    Degree tgt = dom.space().lambda(x).add(nd, shift.at(x));
    return ModuleHom::zero(dom.stalk(x).part(nd), cod.stalk(x).part(tgt));
  }

  /// Coordinates of a transformation given slotwise, shift-safe counterpart
  /// of coords_of_map.
  std::vector<Int> coords_of_components(
      const std::map<std::pair<int, Degree>, ModuleHom>& comp) const {
    IntMat amb(ambient.gens(), 1);
    for (size_t k = 0; k < slots.size(); ++k) {
      auto it = comp.find(slots[k]);
      if (it == comp.end()) continue;
      auto c = homs[k].coords_of(it->second);
      for (size_t i = 0; i < c.size(); ++i)
        amb(offset[k] + static_cast<int>(i), 0) = c[i];
    }
    ModuleHom into(Module::free(ambient.ring(), 1), ambient, amb, false);
    return factor_through(incl, into).matrix().col(0);
  }

  std::vector<Int> coords_of_map(const SheafMap& phi) const {
    IntMat amb(ambient.gens(), 1);
    for (size_t k = 0; k < slots.size(); ++k) {
      auto c = homs[k].coords_of(phi.component(slots[k].first, slots[k].second));
      for (size_t i = 0; i < c.size(); ++i)
        amb(offset[k] + static_cast<int>(i), 0) = c[i];
    }
    ModuleHom into(Module::free(ambient.ring(), 1), ambient, amb, false);
    return factor_through(incl, into).matrix().col(0);
  }

  std::vector<SheafMap> all_maps() const {
    std::vector<SheafMap> out;
    for (const auto& e : module.elements()) out.push_back(map_of(e));
    return out;
  }
};

/// Solve for all natural transformations F -> G<λ> over the sub-poset `pts`.
inline SheafHomSpace sheaf_hom_space(const GradedSheaf& f, const GradedSheaf& g,
                                     const PointSet& pts,
                                     const DegreeFamily& shift) {
  if (!(f.space() == g.space()))
    throw std::invalid_argument("hom between sheaves on different spaces");
  SheafHomSpace out;
  out.dom = f;
  out.cod = g;
  out.shift = shift;
  const auto& s = f.space();
  std::vector<Int> amb_orders;
  std::map<std::pair<int, Degree>, size_t> slot_index;
  for (int x : pts) {
    out.pts.push_back(x);
    for (const auto& mu : f.stalk(x).support()) {
      Degree tgt = s.lambda(x).add(mu, shift.at(x));
      out.slots.emplace_back(x, mu);
      out.homs.push_back(hom_module(f.stalk(x).part(mu), g.stalk(x).part(tgt)));
      out.offset.push_back(static_cast<int>(amb_orders.size()));
      slot_index[{x, mu}] = out.slots.size() - 1;
      for (Int d : out.homs.back().module.orders()) amb_orders.push_back(d);
    }
  }
  out.ambient = Module(f.ring(), amb_orders);
  // naturality along induced covers of the sub-poset
  std::vector<Int> row_orders;
  std::vector<std::vector<Int>> rows;  // per constraint coordinate, ambient row
  for (int x : pts)
    for (int y : pts) {
      if (x == y || !s.poset().leq(x, y)) continue;
      bool covered = true;
      for (int z : pts)
        if (z != x && z != y && s.poset().leq(x, z) && s.poset().leq(z, y))
          covered = false;
      if (!covered) continue;
      for (const auto& mu : f.stalk(x).support()) {
        size_t k = slot_index.at({x, mu});
        Degree tgt = s.lambda(x).add(mu, shift.at(x));
        Degree rmu = s.restriction(x, y).apply(mu);
        ModuleHom res_g = g.restriction(x, y, tgt);
        ModuleHom res_f = f.restriction(x, y, mu);
        HomModule t = hom_module(f.stalk(x).part(mu),
                                 g.stalk(y).part(s.restriction(x, y).apply(tgt)));
        std::vector<std::vector<Int>> block(
            t.module.gens(), std::vector<Int>(out.ambient.gens(), 0));
        for (int j = 0; j < out.homs[k].module.gens(); ++j) {
          std::vector<Int> e(out.homs[k].module.gens(), 0);
          e[j] = 1;
          auto c = t.coords_of(res_g.compose_after(out.homs[k].hom_of(e)));
          for (int i = 0; i < t.module.gens(); ++i)
            block[i][out.offset[k] + j] += c[i];
        }
        auto it = slot_index.find({y, rmu});
        if (it != slot_index.end()) {
          size_t k2 = it->second;
          for (int j = 0; j < out.homs[k2].module.gens(); ++j) {
            std::vector<Int> e(out.homs[k2].module.gens(), 0);
            e[j] = 1;
            auto c = t.coords_of(out.homs[k2].hom_of(e).compose_after(res_f));
            for (int i = 0; i < t.module.gens(); ++i)
              block[i][out.offset[k2] + j] -= c[i];
          }
        }
        for (int i = 0; i < t.module.gens(); ++i) {
          row_orders.push_back(t.module.order(i));
          rows.push_back(std::move(block[i]));
        }
      }
    }
  IntMat cons(static_cast<int>(rows.size()), out.ambient.gens());
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < out.ambient.gens(); ++j)
      cons(static_cast<int>(i), j) = rows[i][j];
  auto sub = submodule(out.ambient, congruence_kernel(cons, row_orders));
  out.module = sub.module;
  out.incl = sub.map;
  return out;
}

/// All degree-preserving sheaf maps F -> G (finite base rings only).
inline std::vector<SheafMap> all_sheaf_maps(const GradedSheaf& f,
                                            const GradedSheaf& g) {
  DegreeFamily zero;
  for (int x = 0; x < f.size(); ++x) zero[x] = f.space().lambda(x).zero();
  return sheaf_hom_space(f, g, f.space().poset().whole(), zero).all_maps();
}

/// The internal Hom sheaf together with the solver spaces that produced each
/// stalk piece, kept for mapping elements back and forth.
struct HomSheafData {
  GradedSheaf sheaf;
  std::vector<std::map<Degree, SheafHomSpace>> data;
};

/// Internal Hom: stalk at x in degree λ is the module of natural
/// transformations F|U_x -> G|U_x of degree shift λ.
inline HomSheafData sheaf_hom_data(const GradedSheaf& f, const GradedSheaf& g) {
  const auto& s = f.space();
  std::vector<GradedModule> stalks;
  std::vector<std::map<Degree, SheafHomSpace>> data(s.size());
  for (int x = 0; x < s.size(); ++x) {
    if (!s.lambda(x).is_finite())
      throw InfiniteSupportError("sheaf_hom",
                                 "infinite grading at " + s.poset().name(x));
    PointSet ux = s.poset().min_open(x);
    GradedModule st(f.ring(), s.lambda(x));
    for (const auto& lam : s.lambda(x).elements()) {
      DegreeFamily shift;
      for (int y : ux) shift[y] = s.restriction(x, y).apply(lam);
      SheafHomSpace hs = sheaf_hom_space(f, g, ux, shift);
      if (!hs.module.is_zero()) st.set_part(lam, hs.module);
      data[x].emplace(lam, std::move(hs));
    }
    stalks.push_back(std::move(st));
  }
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  for (auto [lo, hi] : s.poset().covers()) {
    for (const auto& [lam, big] : data[lo]) {
      if (big.module.is_zero()) continue;
      Degree tlam = s.restriction(lo, hi).apply(lam);
      const SheafHomSpace& small = data[hi].at(tlam);
      // project ambient slot coordinates of the big space to the small one
      IntMat proj(small.ambient.gens(), big.ambient.gens());
      for (size_t k = 0; k < small.slots.size(); ++k) {
        // locate the same slot in the big space
        for (size_t k2 = 0; k2 < big.slots.size(); ++k2) {
          if (!(big.slots[k2] == small.slots[k])) continue;
          for (int i = 0; i < small.homs[k].module.gens(); ++i)
            proj(small.offset[k] + i, big.offset[k2] + i) = 1;
        }
      }
      ModuleHom into(big.module, small.ambient, proj * big.incl.matrix(), false);
      res[{lo, hi}][lam] = factor_through(small.incl, into);
    }
  }
  return HomSheafData{
      GradedSheaf(s, std::move(stalks), std::move(res)).with_ring(f.ring()),
      std::move(data)};
}

inline GradedSheaf sheaf_hom(const GradedSheaf& f, const GradedSheaf& g) {
  return sheaf_hom_data(f, g).sheaf;
}

/// The map Hom(F, G) -> Hom(F', G') induced by pre: F' -> F and
/// post: G -> G'.
inline SheafMap hom_sheaf_map(const HomSheafData& src, const HomSheafData& dst,
                              const SheafMap& pre, const SheafMap& post) {
  const auto& s = src.sheaf.space();
  std::map<int, std::map<Degree, ModuleHom>> comp;
  for (int x = 0; x < s.size(); ++x) {
    for (const auto& [lam, hs] : src.data[x]) {
      const SheafHomSpace& ds = dst.data[x].at(lam);
      if (hs.module.is_zero() || ds.module.is_zero()) continue;
      IntMat m(ds.module.gens(), hs.module.gens());
      for (int j = 0; j < hs.module.gens(); ++j) {
        std::vector<Int> e(hs.module.gens(), 0);
        e[j] = 1;
        // composite slot components post ∘ φ ∘ pre on the slots of dst;
        // both spaces carry the same shift family, so the degrees line up
        std::map<std::pair<int, Degree>, ModuleHom> cc;
        for (size_t k = 0; k < ds.slots.size(); ++k) {
          auto [y, mu] = ds.slots[k];
          Degree tgt = s.lambda(y).add(mu, ds.shift.at(y));
          cc[ds.slots[k]] = post.component(y, tgt)
                                .compose_after(hs.component_hom(e, y, mu))
                                .compose_after(pre.component(y, mu));
        }
        auto c = ds.coords_of_components(cc);
        for (int i = 0; i < ds.module.gens(); ++i) m(i, j) = c[i];
      }
      comp[x][lam] = ModuleHom(src.sheaf.stalk(x).part(lam),
                               dst.sheaf.stalk(x).part(lam), m);
    }
  }
  return SheafMap(src.sheaf, dst.sheaf, std::move(comp), false);
}

}  // namespace gsk
