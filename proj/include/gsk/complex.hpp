#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gsk/sheaf.hpp"

namespace gsk {

inline SheafMap scaled_map(const SheafMap& phi, Int c) {
  std::map<int, std::map<Degree, ModuleHom>> comp;
  for (int x = 0; x < phi.domain().size(); ++x)
    for (const auto& d : phi.domain().stalk(x).support()) {
      ModuleHom h = phi.component(x, d);
      IntMat m = h.matrix();
      for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) m(i, j) *= c;
      comp[x][d] = ModuleHom(h.domain(), h.codomain(), m, false);
    }
  return SheafMap(phi.domain(), phi.codomain(), std::move(comp), false);
}

/// A bounded cochain complex of graded sheaves on a fixed space.  Missing
/// terms are zero; differentials are stored where the source term exists.
struct ComplexOfSheaves {
  GradedSpace space;
  Ring ring = Ring::integers();
  std::map<int, GradedSheaf> terms;
  std::map<int, SheafMap> diffs;  ///< d^n : terms[n] -> terms[n+1]

  GradedSheaf zero_term() const {
    std::vector<GradedModule> stalks;
    for (int x = 0; x < space.size(); ++x)
      stalks.emplace_back(ring, space.lambda(x));
    return GradedSheaf(space, std::move(stalks), {}).with_ring(ring);
  }

  GradedSheaf term(int n) const {
    auto it = terms.find(n);
    return it == terms.end() ? zero_term() : it->second;
  }

  SheafMap differential(int n) const {
    auto it = diffs.find(n);
    return it == diffs.end() ? SheafMap::zero(term(n), term(n + 1))
                             : it->second;
  }

  bool empty() const {
    for (const auto& [n, t] : terms)
      if (!t.is_zero()) return false;
    return true;
  }
  int min_degree() const { return terms.empty() ? 0 : terms.begin()->first; }
  int max_degree() const { return terms.empty() ? 0 : terms.rbegin()->first; }

  std::vector<std::string> validate() const {
    std::vector<std::string> errs;
    for (const auto& [n, d] : diffs) {
      auto e = d.validate();
      errs.insert(errs.end(), e.begin(), e.end());
      if (diffs.count(n + 1) &&
          !diffs.at(n + 1).compose_after(d).is_zero())
        errs.push_back("d^2 is nonzero in degree " + std::to_string(n));
    }
    return errs;
  }
};

inline ComplexOfSheaves complex_from_sheaf(const GradedSheaf& f, int n = 0) {
  ComplexOfSheaves out;
  out.space = f.space();
  out.ring = f.ring();
  if (!f.is_zero() || f.size() > 0) out.terms.emplace(n, f);
  return out;
}

/// Stalkwise ker/im subquotients with their induced restriction maps.
inline std::map<int, GradedSheaf> cohomology(const ComplexOfSheaves& c) {
  std::map<int, GradedSheaf> out;
  if (c.terms.empty()) return out;
  for (int n = c.min_degree(); n <= c.max_degree(); ++n) {
    SheafMap dn = c.differential(n);
    SheafSubquotient ker = sheaf_kernel(dn);
    SheafMap dprev = c.differential(n - 1);
    // d^{n-1} factors through ker d^n
    std::map<int, std::map<Degree, ModuleHom>> comp;
    for (int x = 0; x < c.space.size(); ++x)
      for (const auto& d : dprev.domain().stalk(x).support()) {
        ModuleHom mono = ker.map.component(x, d);
        ModuleHom into = dprev.component(x, d);
        comp[x][d] = factor_through(mono, into);
      }
    SheafMap psi(c.term(n - 1), ker.sheaf, std::move(comp), false);
    out.emplace(n, sheaf_cokernel(psi).sheaf);
  }
  return out;
}

/// The per-point, per-degree invariant table of a sheaf, zero parts omitted.
inline std::vector<std::map<Degree, ModuleInvariants>> invariant_table(
    const GradedSheaf& f) {
  std::vector<std::map<Degree, ModuleInvariants>> out(f.size());
  for (int x = 0; x < f.size(); ++x)
    for (const auto& d : f.stalk(x).support()) {
      const Module& p = f.stalk(x).part(d);
      if (!p.is_zero()) out[x].emplace(d, p.invariants());
    }
  return out;
}

/// Stalkwise cohomology comparison: equal invariant tables in every degree.
inline bool same_cohomology(const ComplexOfSheaves& a,
                            const ComplexOfSheaves& b) {
  auto ha = cohomology(a);
  auto hb = cohomology(b);
  std::set<int> degs;
  for (const auto& [n, f] : ha) degs.insert(n);
  for (const auto& [n, f] : hb) degs.insert(n);
  for (int n : degs) {
    auto ita = ha.find(n);
    auto itb = hb.find(n);
    bool za = ita == ha.end() || ita->second.is_zero();
    bool zb = itb == hb.end() || itb->second.is_zero();
    if (za != zb) return false;
    if (za) continue;
    if (invariant_table(ita->second) != invariant_table(itb->second))
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Direct sums

struct SheafSumResult {
  GradedSheaf sheaf;
  std::vector<SheafMap> incl, proj;
};

inline SheafSumResult direct_sum_sheaves(const std::vector<GradedSheaf>& fs,
                                         const GradedSpace& s, const Ring& r) {
  SheafSumResult out;
  int n = static_cast<int>(fs.size());
  // offsets[i][x][d]: where summand i sits inside the part at (x, d)
  std::vector<std::vector<std::map<Degree, int>>> offs(
      n, std::vector<std::map<Degree, int>>(s.size()));
  std::vector<GradedModule> stalks;
  for (int x = 0; x < s.size(); ++x) {
    std::map<Degree, std::vector<Int>> orders;
    for (int i = 0; i < n; ++i)
      for (const auto& d : fs[i].stalk(x).support()) {
        auto& ord = orders[d];
        offs[i][x][d] = static_cast<int>(ord.size());
        for (Int o : fs[i].stalk(x).part(d).orders()) ord.push_back(o);
      }
    GradedModule st(r, s.lambda(x));
    for (const auto& [d, ord] : orders) {
      Module m(r, ord);
      if (!m.is_zero()) st.set_part(d, m);
    }
    stalks.push_back(std::move(st));
  }
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  for (auto [lo, hi] : s.poset().covers()) {
    std::set<Degree> degs;
    for (int i = 0; i < n; ++i)
      for (const auto& d : fs[i].stalk(lo).support()) degs.insert(d);
    for (const auto& d : degs) {
      Degree td = s.lambda(hi).normal_form(s.restriction(lo, hi).apply(d));
      const Module& src = stalks[lo].part(d);
      const Module& dst = stalks[hi].part(td);
      if (src.is_zero() || dst.is_zero()) continue;
      IntMat m(dst.gens(), src.gens());
      for (int i = 0; i < n; ++i) {
        auto it = offs[i][lo].find(d);
        auto jt = offs[i][hi].find(td);
        if (it == offs[i][lo].end() || jt == offs[i][hi].end()) continue;
        IntMat blk = fs[i].restriction(lo, hi, d).matrix();
        for (int a = 0; a < blk.rows(); ++a)
          for (int b = 0; b < blk.cols(); ++b)
            m(jt->second + a, it->second + b) += blk(a, b);
      }
      res[{lo, hi}][d] = ModuleHom(src, dst, m, false);
    }
  }
  out.sheaf = GradedSheaf(s, std::move(stalks), std::move(res)).with_ring(r);
  for (int i = 0; i < n; ++i) {
    std::map<int, std::map<Degree, ModuleHom>> in, pr;
    for (int x = 0; x < s.size(); ++x)
      for (const auto& d : fs[i].stalk(x).support()) {
        const Module& part = fs[i].stalk(x).part(d);
        const Module& amb = out.sheaf.stalk(x).part(d);
        int off = offs[i][x][d];
        IntMat mi(amb.gens(), part.gens());
        IntMat mp(part.gens(), amb.gens());
        for (int j = 0; j < part.gens(); ++j) {
          mi(off + j, j) = 1;
          mp(j, off + j) = 1;
        }
        in[x][d] = ModuleHom(part, amb, mi, false);
        pr[x][d] = ModuleHom(amb, part, mp, false);
      }
    out.incl.push_back(SheafMap(fs[i], out.sheaf, std::move(in), false));
    out.proj.push_back(SheafMap(out.sheaf, fs[i], std::move(pr), false));
  }
  return out;
}

/// A componentwise right inverse of a stalkwise surjection.  Not natural by
/// itself; only composites that are independent of the choice should be used.
inline SheafMap section_of_surjection(const SheafMap& epi) {
  std::map<int, std::map<Degree, ModuleHom>> comp;
  for (int x = 0; x < epi.domain().size(); ++x)
    for (const auto& d : epi.codomain().stalk(x).support()) {
      if (epi.codomain().stalk(x).part(d).is_zero()) continue;
      comp[x][d] = surjection_lift(epi.component(x, d));
    }
  return SheafMap(epi.codomain(), epi.domain(), std::move(comp), false);
}

}  // namespace gsk
