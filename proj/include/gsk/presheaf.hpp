#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gsk/sheaf.hpp"

namespace gsk {

/// The degree restriction Λ(U) -> Λ(V) for opens V ⊆ U, from the stored
/// per-point projections.
inline GradingHom lambda_restriction(const GradedSpace& s,
                                     const LambdaSections& lu,
                                     const LambdaSections& lv,
                                     const PointSet& v) {
  std::vector<Int> amb_orders;
  std::vector<int> offset;
  for (int x : v) {
    offset.push_back(static_cast<int>(amb_orders.size()));
    for (Int d : s.lambda(x).orders()) amb_orders.push_back(d);
  }
  Module ambient(Ring::integers(), amb_orders);
  IntMat incl(ambient.gens(), lv.group.rank_gens());
  IntMat thru(ambient.gens(), lu.group.rank_gens());
  int k = 0;
  for (int x : v) {
    const IntMat& pv = lv.project.at(x).matrix();
    const IntMat& pu = lu.project.at(x).matrix();
    for (int i = 0; i < pv.rows(); ++i) {
      for (int j = 0; j < pv.cols(); ++j) incl(offset[k] + i, j) = pv(i, j);
      for (int j = 0; j < pu.cols(); ++j) thru(offset[k] + i, j) = pu(i, j);
    }
    ++k;
  }
  ModuleHom mono(lv.group.as_module(), ambient, incl, false);
  ModuleHom map(lu.group.as_module(), ambient, thru, false);
  return GradingHom(lu.group, lv.group, factor_through(mono, map).matrix());
}

/// An explicit table presheaf: a graded module of sections per open set and a
/// restriction map per comparable pair of opens and degree.  Only presheaf
/// functoriality is promised.
struct GradedPresheafTable {
  GradedSpace space;
  std::map<PointSet, LambdaSections> lambda;
  std::map<PointSet, GradedModule> value;
  /// res[{U,V}][λ] : value(U)_λ -> value(V)_{λ|V}
  std::map<std::pair<PointSet, PointSet>, std::map<Degree, ModuleHom>> res;

  ModuleHom restriction(const PointSet& u, const PointSet& v,
                        const Degree& d) const {
    Degree nd = lambda.at(u).group.normal_form(d);
    if (u == v) return ModuleHom::identity(value.at(u).part(nd));
    auto it = res.find({u, v});
    if (it != res.end()) {
      auto jt = it->second.find(nd);
      if (jt != it->second.end()) return jt->second;
    }
    Degree td =
        lambda_restriction(space, lambda.at(u), lambda.at(v), v).apply(nd);
    return ModuleHom::zero(value.at(u).part(nd), value.at(v).part(td));
  }

  std::vector<std::string> validate() const {
    std::vector<std::string> errs;
    std::vector<PointSet> opens;
    for (const auto& [u, m] : value) opens.push_back(u);
    for (const auto& u : opens)
      for (const auto& v : opens) {
        if (u == v ||
            !std::includes(u.begin(), u.end(), v.begin(), v.end()))
          continue;
        GradingHom uv = lambda_restriction(space, lambda.at(u), lambda.at(v), v);
        for (const auto& w : opens) {
          if (v == w ||
              !std::includes(v.begin(), v.end(), w.begin(), w.end()))
            continue;
          for (const auto& d : value.at(u).support()) {
            auto once = restriction(u, w, d);
            auto twice =
                restriction(v, w, uv.apply(d)).compose_after(restriction(u, v, d));
            if (!(once == twice)) errs.push_back("presheaf functoriality fails");
          }
        }
      }
    return errs;
  }
};

/// The table of all section modules of a sheaf (needs every Λ(U) finite).
inline GradedPresheafTable table_of(const GradedSheaf& f) {
  GradedPresheafTable out;
  out.space = f.space();
  std::map<PointSet, SectionsResult> secs;
  for (const auto& u : f.space().poset().all_opens()) {
    SectionsResult sr = sections(f, u);
    out.lambda[u] = sr.lambda;
    out.value[u] = sr.module;
    secs.emplace(u, std::move(sr));
  }
  for (const auto& [u, su] : secs)
    for (const auto& [v, sv] : secs) {
      if (u == v || !std::includes(u.begin(), u.end(), v.begin(), v.end()))
        continue;
      GradingHom uv = lambda_restriction(f.space(), su.lambda, sv.lambda, v);
      for (const auto& d : su.module.support())
        out.res[{u, v}][d] = limit_restriction(
            su.data.at(d), sv.data.at(uv.apply(d)));
    }
  return out;
}

/// The pointwise sheaf with the same stalks as the presheaf (the stalk at x
/// is the value at the minimal open U_x).
inline GradedSheaf sheafify(const GradedPresheafTable& p) {
  const GradedSpace& s = p.space;
  std::vector<GradedModule> stalks;
  std::vector<GradingHom> ident;  // Λ(U_x) -> Λ_x, an isomorphism
  for (int x = 0; x < s.size(); ++x) {
    PointSet ux = s.poset().min_open(x);
    const LambdaSections& lu = p.lambda.at(ux);
    ident.push_back(lu.project.at(x));
    if (!ident.back().is_isomorphism())
      throw std::logic_error("minimal-open degree group is not the stalk group");
    stalks.push_back(regrade_along(p.value.at(ux), ident.back()));
  }
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  for (auto [lo, hi] : s.poset().covers()) {
    PointSet ulo = s.poset().min_open(lo), uhi = s.poset().min_open(hi);
    for (const auto& d : stalks[lo].support()) {
      Degree du = ident[lo].inverse().apply(d);
      ModuleHom r = p.restriction(ulo, uhi, du);
      res[{lo, hi}][d] = ModuleHom(stalks[lo].part(d),
                                   stalks[hi].part(s.restriction(lo, hi).apply(d)),
                                   r.matrix(), false);
    }
  }
  return GradedSheaf(s, std::move(stalks), std::move(res));
}

/// The unit P(U) -> Γ(U, sheafify(P)) on one open, per degree.
inline std::map<Degree, ModuleHom> sheafify_unit(const GradedPresheafTable& p,
                                                 const GradedSheaf& sh,
                                                 const PointSet& u) {
  std::map<Degree, ModuleHom> out;
  const LambdaSections& lu = p.lambda.at(u);
  for (const auto& d : p.value.at(u).support()) {
    DegreeFamily fam = family_of(lu, d);
    LimitData lim = limit_over(sh, u, fam);
    const Module& src = p.value.at(u).part(d);
    IntMat m(lim.ambient.gens(), src.gens());
    for (size_t k = 0; k < lim.pts.size(); ++k) {
      int x = lim.pts[k];
      PointSet ux = p.space.poset().min_open(x);
      IntMat r = p.restriction(u, ux, d).matrix();
      for (int i = 0; i < r.rows(); ++i)
        for (int j = 0; j < r.cols(); ++j) m(lim.offset[k] + i, j) += r(i, j);
    }
    ModuleHom into(src, lim.ambient, m, false);
    out.emplace(d, factor_through(lim.incl, into));
  }
  return out;
}

}  // namespace gsk
