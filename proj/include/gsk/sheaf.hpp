#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "gsk/errors.hpp"
#include "gsk/graded_module.hpp"
#include "gsk/space.hpp"

namespace gsk {

/// A choice of degree at each point of some subset, compatible along the
/// grading restrictions.  This is how a global degree λ in Λ(U) is handed to
/// the stalk level.
using DegreeFamily = std::map<int, Degree>;

inline DegreeFamily family_of(const LambdaSections& lam, const Degree& d) {
  DegreeFamily out;
  for (const auto& [x, p] : lam.project) out[x] = p.apply(d);
  return out;
}

inline DegreeFamily restrict_family(const DegreeFamily& fam,
                                    const PointSet& pts) {
  DegreeFamily out;
  for (int x : pts) out[x] = fam.at(x);
  return out;
}

/// A graded sheaf on a graded Alexandrov space, stored as its stalk functor:
/// one graded module per point and one homomorphism per degree for every
/// covering pair of the poset.  Maps for non-covering comparable pairs are
/// composed along chains; missing maps are zero.
class GradedSheaf {
public:
  GradedSheaf() = default;

  GradedSheaf(GradedSpace space, std::vector<GradedModule> stalks,
              std::map<std::pair<int, int>, std::map<Degree, ModuleHom>>
                  cover_restrictions)
      : space_(std::move(space)),
        stalks_(std::move(stalks)),
        res_(std::move(cover_restrictions)),
        ring_(stalks_.empty() ? Ring::integers() : stalks_[0].ring()) {
    if (static_cast<int>(stalks_.size()) != space_.size())
      throw std::invalid_argument("one stalk per point required");
    for (int x = 0; x < space_.size(); ++x) {
      if (!(stalks_[x].grading() == space_.lambda(x)))
        throw std::invalid_argument("stalk grading mismatch at " +
                                    space_.poset().name(x));
      if (x > 0) require_same_ring(stalks_[x].ring(), stalks_[0].ring());
    }
    for (auto& [pr, maps] : res_) {
      auto [x, y] = pr;
      if (!space_.poset().leq(x, y) || x == y)
        throw std::invalid_argument("restriction on a non-comparable pair");
      std::map<Degree, ModuleHom> normal;
      for (auto& [d, h] : maps) {
        Degree nd = space_.lambda(x).normal_form(d);
        Degree td = space_.restriction(x, y).apply(nd);
        if (!(h.domain().orders() == stalks_[x].part(nd).orders()) ||
            !(h.codomain().orders() == stalks_[y].part(td).orders()))
          throw std::invalid_argument(
              "restriction map shape mismatch at " + space_.poset().name(x) +
              " <= " + space_.poset().name(y));
        normal.emplace(nd, h);
      }
      maps = std::move(normal);
    }
  }

  const GradedSpace& space() const { return space_; }
  const Ring& ring() const { return ring_; }

  /// For sheaves on the empty space, where no stalk pins down the ring.
  GradedSheaf& with_ring(const Ring& r) {
    if (stalks_.empty()) ring_ = r;
    return *this;
  }
  int size() const { return space_.size(); }
  const GradedModule& stalk(int x) const { return stalks_.at(x); }

  /// The map (F_x)_λ -> (F_y)_{λ|y} for x <= y.
  ModuleHom restriction(int x, int y, const Degree& d) const {
    Degree nd = space_.lambda(x).normal_form(d);
    if (x == y) return ModuleHom::identity(stalks_[x].part(nd));
    if (!space_.poset().leq(x, y))
      throw std::invalid_argument("restriction along a non-comparable pair");
    // Compose along a chain of covers from x to y; functoriality (checked by
    // validate) makes the path irrelevant.
    for (auto [lo, hi] : space_.poset().covers()) {
      if (lo != x || !space_.poset().leq(hi, y)) continue;
      ModuleHom first = stored(x, hi, nd);
      if (hi == y) return first;
      return restriction(hi, y, space_.restriction(x, hi).apply(nd))
          .compose_after(first);
    }
    throw std::logic_error("no cover chain found");
  }

  std::vector<std::string> validate() const {
    std::vector<std::string> errs;
    const auto& p = space_.poset();
    for (int x = 0; x < size(); ++x)
      for (int y = 0; y < size(); ++y) {
        if (x == y || !p.leq(x, y)) continue;
        for (int z = 0; z < size(); ++z) {
          if (y == z || !p.leq(y, z)) continue;
          for (const auto& d : stalks_[x].support()) {
            auto once = restriction(x, z, d);
            auto twice = restriction(y, z, space_.restriction(x, y).apply(d))
                             .compose_after(restriction(x, y, d));
            if (!(once == twice))
              errs.push_back("restrictions do not commute along " + p.name(x) +
                             " <= " + p.name(y) + " <= " + p.name(z));
          }
        }
      }
    return errs;
  }

  bool is_zero() const {
    for (const auto& s : stalks_)
      if (!s.is_zero()) return false;
    return true;
  }

  bool operator==(const GradedSheaf& o) const {
    if (!(space_ == o.space_)) return false;
    for (int x = 0; x < size(); ++x) {
      if (stalks_[x].support() != o.stalks_[x].support()) return false;
      for (const auto& d : stalks_[x].support())
        if (!(stalks_[x].part(d).orders() == o.stalks_[x].part(d).orders()))
          return false;
    }
    for (auto [lo, hi] : space_.poset().covers())
      for (const auto& d : stalks_[lo].support())
        if (!(restriction(lo, hi, d) == o.restriction(lo, hi, d)))
          return false;
    return true;
  }

private:
  ModuleHom stored(int x, int y, const Degree& nd) const {
    auto it = res_.find({x, y});
    if (it != res_.end()) {
      auto jt = it->second.find(nd);
      if (jt != it->second.end()) return jt->second;
    }
    Degree td = space_.restriction(x, y).apply(nd);
    return ModuleHom::zero(stalks_[x].part(nd), stalks_[y].part(td));
  }

  GradedSpace space_;
  std::vector<GradedModule> stalks_;
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res_;
  Ring ring_ = Ring::integers();
};

inline const GradedModule& stalk(const GradedSheaf& f, int x) {
  return f.stalk(x);
}

/// A morphism of graded sheaves on a common space.  Components live in degree
/// zero: (F_x)_λ -> (G_x)_λ.  Missing components are zero.
class SheafMap {
public:
  SheafMap() = default;

  SheafMap(GradedSheaf dom, GradedSheaf cod,
           std::map<int, std::map<Degree, ModuleHom>> components,
           bool check = true)
      : dom_(std::move(dom)), cod_(std::move(cod)), comp_(std::move(components)) {
    if (!(dom_.space() == cod_.space()))
      throw std::invalid_argument("sheaf map between different spaces");
    for (auto& [x, maps] : comp_) {
      std::map<Degree, ModuleHom> normal;
      for (auto& [d, h] : maps) {
        Degree nd = dom_.space().lambda(x).normal_form(d);
        if (!(h.domain().orders() == dom_.stalk(x).part(nd).orders()) ||
            !(h.codomain().orders() == cod_.stalk(x).part(nd).orders()))
          throw std::invalid_argument("component shape mismatch at " +
                                      dom_.space().poset().name(x));
        normal.emplace(nd, h);
      }
      maps = std::move(normal);
    }
    if (check) {
      auto errs = validate();
      if (!errs.empty()) throw std::invalid_argument(errs.front());
    }
  }

  static SheafMap identity(const GradedSheaf& f) {
    std::map<int, std::map<Degree, ModuleHom>> comp;
    for (int x = 0; x < f.size(); ++x)
      for (const auto& d : f.stalk(x).support())
        comp[x][d] = ModuleHom::identity(f.stalk(x).part(d));
    return SheafMap(f, f, std::move(comp), false);
  }

  static SheafMap zero(const GradedSheaf& dom, const GradedSheaf& cod) {
    return SheafMap(dom, cod, {}, false);
  }

  const GradedSheaf& domain() const { return dom_; }
  const GradedSheaf& codomain() const { return cod_; }

  ModuleHom component(int x, const Degree& d) const {
    Degree nd = dom_.space().lambda(x).normal_form(d);
    auto it = comp_.find(x);
    if (it != comp_.end()) {
      auto jt = it->second.find(nd);
      if (jt != it->second.end()) return jt->second;
    }
    return ModuleHom::zero(dom_.stalk(x).part(nd), cod_.stalk(x).part(nd));
  }

  std::vector<std::string> validate() const {
    std::vector<std::string> errs;
    const auto& p = dom_.space().poset();
    for (auto [lo, hi] : p.covers()) {
      std::set<Degree> degs;
      for (const auto& d : dom_.stalk(lo).support()) degs.insert(d);
      for (const auto& d : cod_.stalk(lo).support()) degs.insert(d);
      for (const auto& d : degs) {
        Degree td = dom_.space().restriction(lo, hi).apply(d);
        auto left = cod_.restriction(lo, hi, d).compose_after(component(lo, d));
        auto right = component(hi, td).compose_after(dom_.restriction(lo, hi, d));
        if (!(left == right))
          errs.push_back("naturality fails along " + p.name(lo) +
                         " <= " + p.name(hi));
      }
    }
    return errs;
  }

  SheafMap compose_after(const SheafMap& first) const {
    std::map<int, std::map<Degree, ModuleHom>> comp;
    for (int x = 0; x < dom_.size(); ++x)
      for (const auto& d : first.dom_.stalk(x).support())
        comp[x][d] = component(x, d).compose_after(first.component(x, d));
    return SheafMap(first.dom_, cod_, std::move(comp), false);
  }

  SheafMap operator+(const SheafMap& o) const {
    std::map<int, std::map<Degree, ModuleHom>> comp;
    for (int x = 0; x < dom_.size(); ++x)
      for (const auto& d : dom_.stalk(x).support())
        comp[x][d] = component(x, d) + o.component(x, d);
    return SheafMap(dom_, cod_, std::move(comp), false);
  }

  SheafMap operator-(const SheafMap& o) const {
    std::map<int, std::map<Degree, ModuleHom>> comp;
    for (int x = 0; x < dom_.size(); ++x)
      for (const auto& d : dom_.stalk(x).support())
        comp[x][d] = component(x, d) - o.component(x, d);
    return SheafMap(dom_, cod_, std::move(comp), false);
  }

  bool is_zero() const {
    for (int x = 0; x < dom_.size(); ++x)
      for (const auto& d : dom_.stalk(x).support())
        if (!component(x, d).is_zero()) return false;
    return true;
  }

  bool operator==(const SheafMap& o) const { return (*this - o).is_zero(); }

  bool is_isomorphism() const {
    for (int x = 0; x < dom_.size(); ++x) {
      std::set<Degree> degs;
      for (const auto& d : dom_.stalk(x).support()) degs.insert(d);
      for (const auto& d : cod_.stalk(x).support()) degs.insert(d);
      for (const auto& d : degs)
        if (!component(x, d).is_isomorphism()) return false;
    }
    return true;
  }

private:
  GradedSheaf dom_, cod_;
  std::map<int, std::map<Degree, ModuleHom>> comp_;
};

/// A sheaf produced from a map, with the connecting morphism.
struct SheafSubquotient {
  GradedSheaf sheaf;
  SheafMap map;
};

inline SheafSubquotient sheaf_kernel(const SheafMap& phi) {
  const GradedSheaf& f = phi.domain();
  std::vector<GradedModule> stalks;
  std::vector<std::map<Degree, SubquotientResult>> data(f.size());
  for (int x = 0; x < f.size(); ++x) {
    GradedModule s(f.ring(), f.space().lambda(x));
    for (const auto& d : f.stalk(x).support()) {
      auto k = phi.component(x, d).kernel();
      data[x][d] = k;
      s.set_part(d, k.module);
    }
    stalks.push_back(std::move(s));
  }
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  std::map<int, std::map<Degree, ModuleHom>> incl;
  for (int x = 0; x < f.size(); ++x)
    for (const auto& [d, k] : data[x]) incl[x][d] = k.map;
  for (auto [lo, hi] : f.space().poset().covers()) {
    for (const auto& [d, k] : data[lo]) {
      Degree td = f.space().restriction(lo, hi).apply(d);
      ModuleHom into = f.restriction(lo, hi, d).compose_after(k.map);
      auto it = data[hi].find(td);
      ModuleHom mono = it != data[hi].end()
                           ? it->second.map
                           : ModuleHom::zero(Module::zero(f.ring()),
                                             f.stalk(hi).part(td));
      res[{lo, hi}][d] = factor_through(mono, into);
    }
  }
  SheafSubquotient out;
  out.sheaf = GradedSheaf(f.space(), std::move(stalks), std::move(res));
  out.map = SheafMap(out.sheaf, f, std::move(incl), false);
  return out;
}

inline SheafSubquotient sheaf_image(const SheafMap& phi) {
  const GradedSheaf& g = phi.codomain();
  std::vector<GradedModule> stalks;
  std::vector<std::map<Degree, SubquotientResult>> data(g.size());
  for (int x = 0; x < g.size(); ++x) {
    GradedModule s(g.ring(), g.space().lambda(x));
    for (const auto& d : phi.domain().stalk(x).support()) {
      auto im = phi.component(x, d).image();
      data[x][d] = im;
      s.set_part(d, im.module);
    }
    stalks.push_back(std::move(s));
  }
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  std::map<int, std::map<Degree, ModuleHom>> incl;
  for (int x = 0; x < g.size(); ++x)
    for (const auto& [d, im] : data[x]) incl[x][d] = im.map;
  for (auto [lo, hi] : g.space().poset().covers()) {
    for (const auto& [d, im] : data[lo]) {
      Degree td = g.space().restriction(lo, hi).apply(d);
      ModuleHom into = g.restriction(lo, hi, d).compose_after(im.map);
      auto it = data[hi].find(td);
      ModuleHom mono = it != data[hi].end()
                           ? it->second.map
                           : ModuleHom::zero(Module::zero(g.ring()),
                                             g.stalk(hi).part(td));
      res[{lo, hi}][d] = factor_through(mono, into);
    }
  }
  SheafSubquotient out;
  out.sheaf = GradedSheaf(g.space(), std::move(stalks), std::move(res));
  out.map = SheafMap(out.sheaf, g, std::move(incl), false);
  return out;
}

inline SheafSubquotient sheaf_cokernel(const SheafMap& phi) {
  const GradedSheaf& g = phi.codomain();
  std::vector<GradedModule> stalks;
  std::vector<std::map<Degree, SubquotientResult>> data(g.size());
  for (int x = 0; x < g.size(); ++x) {
    GradedModule s(g.ring(), g.space().lambda(x));
    for (const auto& d : g.stalk(x).support()) {
      auto q = phi.component(x, d).cokernel();
      data[x][d] = q;
      s.set_part(d, q.module);
    }
    stalks.push_back(std::move(s));
  }
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  std::map<int, std::map<Degree, ModuleHom>> proj;
  for (int x = 0; x < g.size(); ++x)
    for (const auto& [d, q] : data[x]) proj[x][d] = q.map;
  for (auto [lo, hi] : g.space().poset().covers()) {
    for (const auto& [d, q] : data[lo]) {
      if (q.module.is_zero()) continue;
      Degree td = g.space().restriction(lo, hi).apply(d);
      auto it = data[hi].find(td);
      ModuleHom qy = it != data[hi].end()
                         ? it->second.map
                         : ModuleHom::zero(g.stalk(hi).part(td),
                                           Module::zero(g.ring()));
      res[{lo, hi}][d] = qy.compose_after(g.restriction(lo, hi, d))
                             .compose_after(surjection_lift(q.map));
    }
  }
  SheafSubquotient out;
  out.sheaf = GradedSheaf(g.space(), std::move(stalks), std::move(res));
  out.map = SheafMap(g, out.sheaf, std::move(proj), false);
  return out;
}

/// g ∘ f = 0 and ker g = im f on every stalk in every degree.
inline bool is_exact_sheaf_pair(const SheafMap& f, const SheafMap& g) {
  for (int x = 0; x < f.domain().size(); ++x) {
    std::set<Degree> degs;
    for (const auto& d : f.domain().stalk(x).support()) degs.insert(d);
    for (const auto& d : f.codomain().stalk(x).support()) degs.insert(d);
    for (const auto& d : degs)
      if (!is_exact_pair(f.component(x, d), g.component(x, d))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Constructors

/// The constant sheaf with value m concentrated in degree zero.
inline GradedSheaf constant_sheaf(const GradedSpace& s, const Module& m) {
  std::vector<GradedModule> stalks;
  for (int x = 0; x < s.size(); ++x)
    stalks.push_back(GradedModule::concentrated(m.ring(), s.lambda(x),
                                                s.lambda(x).zero(), m));
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  for (auto [lo, hi] : s.poset().covers())
    if (!m.is_zero())
      res[{lo, hi}][s.lambda(lo).zero()] = ModuleHom::identity(m);
  return GradedSheaf(s, std::move(stalks), std::move(res));
}

/// One nonzero stalk; all restrictions in or out of it are zero.
inline GradedSheaf skyscraper(const GradedSpace& s, int x,
                              const GradedModule& m) {
  if (!(m.grading() == s.lambda(x)))
    throw std::invalid_argument("skyscraper stalk has the wrong grading");
  std::vector<GradedModule> stalks;
  for (int y = 0; y < s.size(); ++y)
    stalks.push_back(y == x ? m : GradedModule(m.ring(), s.lambda(y)));
  return GradedSheaf(s, std::move(stalks), {});
}

/// Stalks of f kept on a locally closed subset, zero elsewhere.
inline GradedSheaf extend_by_zero(const GradedSheaf& f, const PointSet& y) {
  if (!f.space().poset().is_locally_closed(y))
    throw std::invalid_argument("extension by zero needs a locally closed set");
  std::vector<GradedModule> stalks;
  for (int x = 0; x < f.size(); ++x)
    stalks.push_back(y.count(x) ? f.stalk(x)
                                : GradedModule(f.ring(), f.space().lambda(x)));
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  for (auto [lo, hi] : f.space().poset().covers()) {
    if (!y.count(lo) || !y.count(hi)) continue;
    for (const auto& d : f.stalk(lo).support())
      res[{lo, hi}][d] = f.restriction(lo, hi, d);
  }
  return GradedSheaf(f.space(), std::move(stalks), std::move(res));
}

/// Pull a sheaf back to a subspace produced by subspace().
inline GradedSheaf restrict_sheaf(const GradedSheaf& f, const Subspace& sub) {
  std::vector<GradedModule> stalks;
  for (int x = 0; x < sub.space.size(); ++x)
    stalks.push_back(f.stalk(sub.inclusion.apply(x)));
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  for (auto [lo, hi] : sub.space.poset().covers())
    for (const auto& d : stalks[lo].support())
      res[{lo, hi}][d] =
          f.restriction(sub.inclusion.apply(lo), sub.inclusion.apply(hi), d);
  return GradedSheaf(sub.space, std::move(stalks), std::move(res));
}

/// shift(F, λ) for a compatible degree family λ: stalk at x is F_x shifted by
/// λ_x.
inline GradedSheaf shift_sheaf(const GradedSheaf& f, const DegreeFamily& lam) {
  std::vector<GradedModule> stalks;
  for (int x = 0; x < f.size(); ++x)
    stalks.push_back(shift_module(f.stalk(x), lam.at(x)));
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  const auto& s = f.space();
  for (auto [lo, hi] : s.poset().covers()) {
    if (!(s.lambda(hi).normal_form(s.restriction(lo, hi).apply(lam.at(lo))) ==
          s.lambda(hi).normal_form(lam.at(hi))))
      throw std::invalid_argument("shift degrees are not a compatible family");
    for (const auto& d : stalks[lo].support())
      res[{lo, hi}][d] =
          f.restriction(lo, hi, s.lambda(lo).add(d, lam.at(lo)));
  }
  return GradedSheaf(s, std::move(stalks), std::move(res));
}

// ---------------------------------------------------------------------------
// Limits of degree pieces over subsets

/// The limit of the λ-degree pieces of the stalks over a subset of the poset,
/// with enough bookkeeping to map into and out of it.
struct LimitData {
  std::vector<int> pts;          ///< enumeration order
  std::vector<Degree> degs;      ///< normalized degree per point
  std::vector<int> offset;       ///< ambient offset per point
  std::vector<Module> parts;     ///< stalk piece per point
  Module ambient;                ///< their direct sum
  Module module;                 ///< the limit
  ModuleHom incl;                ///< limit -> ambient

  /// limit -> stalk piece at pts[k].
  ModuleHom component(size_t k) const {
    IntMat m(parts[k].gens(), module.gens());
    for (int i = 0; i < parts[k].gens(); ++i)
      for (int j = 0; j < module.gens(); ++j)
        m(i, j) = incl.matrix()(offset[k] + i, j);
    return ModuleHom(module, parts[k], m);
  }

  int index_of(int x) const {
    auto it = std::find(pts.begin(), pts.end(), x);
    if (it == pts.end()) throw std::invalid_argument("point not in limit");
    return static_cast<int>(it - pts.begin());
  }
};

/// Compatible families over an arbitrary subset, along the covering relation
/// of the induced subposet.
inline LimitData limit_over(const GradedSheaf& f, const PointSet& pts,
                            const DegreeFamily& fam) {
  const auto& p = f.space().poset();
  LimitData out;
  std::vector<Int> amb_orders;
  for (int x : pts) {
    out.pts.push_back(x);
    out.degs.push_back(f.space().lambda(x).normal_form(fam.at(x)));
    out.offset.push_back(static_cast<int>(amb_orders.size()));
    out.parts.push_back(f.stalk(x).part(out.degs.back()));
    for (Int d : out.parts.back().orders()) amb_orders.push_back(d);
  }
  out.ambient = Module(f.ring(), amb_orders);
  // induced covers of the subposet
  std::vector<std::pair<int, int>> pairs;
  for (size_t i = 0; i < out.pts.size(); ++i)
    for (size_t j = 0; j < out.pts.size(); ++j) {
      int a = out.pts[i], b = out.pts[j];
      if (a == b || !p.leq(a, b)) continue;
      bool covered = true;
      for (int c : pts)
        if (c != a && c != b && p.leq(a, c) && p.leq(c, b)) covered = false;
      if (covered) pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  std::vector<Int> row_orders;
  std::vector<int> row_offset;
  for (auto [i, j] : pairs) {
    row_offset.push_back(static_cast<int>(row_orders.size()));
    for (Int d : out.parts[j].orders()) row_orders.push_back(d);
  }
  IntMat diff(static_cast<int>(row_orders.size()), out.ambient.gens());
  for (size_t k = 0; k < pairs.size(); ++k) {
    auto [i, j] = pairs[k];
    IntMat r = f.restriction(out.pts[i], out.pts[j], out.degs[i]).matrix();
    for (int a = 0; a < r.rows(); ++a) {
      for (int b = 0; b < r.cols(); ++b)
        diff(row_offset[k] + a, out.offset[i] + b) += r(a, b);
      diff(row_offset[k] + a, out.offset[j] + a) -= 1;
    }
  }
  IntMat lat = congruence_kernel(diff, row_orders);
  auto sub = submodule(out.ambient, lat);
  out.module = sub.module;
  out.incl = sub.map;
  return out;
}

/// The induced map between two limits, for a smaller subset with the induced
/// degree family.
inline ModuleHom limit_restriction(const LimitData& big,
                                   const LimitData& small) {
  IntMat proj(small.ambient.gens(), big.ambient.gens());
  for (size_t k = 0; k < small.pts.size(); ++k) {
    int bk = big.index_of(small.pts[k]);
    for (int i = 0; i < small.parts[k].gens(); ++i)
      proj(small.offset[k] + i, big.offset[bk] + i) = 1;
  }
  ModuleHom into(big.module, small.ambient, proj * big.incl.matrix(), false);
  return factor_through(small.incl, into);
}

// ---------------------------------------------------------------------------
// Sections

struct SectionsResult {
  LambdaSections lambda;            ///< Λ(U) with its projections
  GradedModule module;              ///< sections graded over Λ(U)
  std::map<Degree, LimitData> data; ///< limit bookkeeping per degree
};

inline LimitData sections_part(const GradedSheaf& f, const PointSet& u,
                               const DegreeFamily& fam) {
  if (!f.space().poset().is_open(u))
    throw std::invalid_argument("sections over a non-open set");
  return limit_over(f, u, fam);
}

/// Γ(U, F) materialized over all of Λ(U); throws InfiniteSupport when Λ(U) is
/// infinite and no window of degrees is supplied.
inline SectionsResult sections(
    const GradedSheaf& f, const PointSet& u,
    const std::optional<std::vector<Degree>>& window = {}) {
  if (!f.space().poset().is_open(u))
    throw std::invalid_argument("sections over a non-open set");
  SectionsResult out;
  out.lambda = sections_of_lambda(f.space(), u);
  std::vector<Degree> degs;
  if (window) {
    for (const auto& d : *window) degs.push_back(out.lambda.group.normal_form(d));
  } else if (out.lambda.group.is_finite()) {
    degs = out.lambda.group.elements();
  } else {
    throw InfiniteSupportError("sections",
                               "Lambda(U) is infinite; pass a degree window");
  }
  out.module = GradedModule(f.ring(), out.lambda.group);
  for (const auto& d : degs) {
    LimitData lim = limit_over(f, u, family_of(out.lambda, d));
    if (!lim.module.is_zero()) out.module.set_part(d, lim.module);
    out.data.emplace(d, std::move(lim));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Degree pieces and tensor

/// The same poset with all gradings forgotten.
inline GradedSpace trivially_graded(const GradedSpace& s) {
  std::vector<GradingGroup> lambda(s.size(), GradingGroup::trivial());
  std::map<std::pair<int, int>, GradingHom> res;
  for (auto [lo, hi] : s.poset().covers())
    res[{lo, hi}] = GradingHom::identity(GradingGroup::trivial());
  return GradedSpace(s.poset(), std::move(lambda), std::move(res));
}

/// The λ-degree piece of F as an ordinary (trivially graded) sheaf.
inline GradedSheaf degree_piece(const GradedSheaf& f, const DegreeFamily& lam) {
  GradedSpace t = trivially_graded(f.space());
  Degree zero;
  std::vector<GradedModule> stalks;
  for (int x = 0; x < f.size(); ++x)
    stalks.push_back(GradedModule::concentrated(
        f.ring(), GradingGroup::trivial(), zero, f.stalk(x).part(lam.at(x))));
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  for (auto [lo, hi] : f.space().poset().covers()) {
    Degree d = f.space().lambda(lo).normal_form(lam.at(lo));
    Degree td = f.space().restriction(lo, hi).apply(d);
    if (!(td == f.space().lambda(hi).normal_form(lam.at(hi))))
      throw std::invalid_argument("degree family is not compatible");
    if (!stalks[lo].is_zero()) res[{lo, hi}][zero] = f.restriction(lo, hi, d);
  }
  return GradedSheaf(t, std::move(stalks), std::move(res));
}

/// Stalkwise graded tensor with the direct-sum layout remembered, so that
/// restriction maps can be assembled blockwise.
struct TensorStalk {
  GradedModule mod;
  // per result degree, in order: source degrees, summand, ambient offset
  std::map<Degree, std::vector<std::tuple<Degree, Degree, TensorModule, int>>>
      layout;
};

inline TensorStalk tensor_stalk(const GradedModule& a, const GradedModule& b) {
  TensorStalk out;
  out.mod = GradedModule(a.ring(), a.grading());
  std::map<Degree, std::vector<Int>> orders;
  for (const auto& [da, ma] : a.parts())
    for (const auto& [db, mb] : b.parts()) {
      Degree d = a.grading().add(da, db);
      TensorModule t = tensor_module(ma, mb);
      auto& ord = orders[d];
      out.layout[d].emplace_back(da, db, t, static_cast<int>(ord.size()));
      for (Int o : t.module.orders()) ord.push_back(o);
    }
  for (const auto& [d, ord] : orders) {
    Module m(a.ring(), ord);
    if (!m.is_zero()) out.mod.set_part(d, Module(a.ring(), ord));
  }
  return out;
}

/// F ⊗ G, stalkwise.  Parts are raw direct sums of cyclic tensor products;
/// they are not re-normalized, so isomorphism tests should go through
/// invariants.
inline GradedSheaf tensor_sheaf(const GradedSheaf& f, const GradedSheaf& g) {
  if (!(f.space() == g.space()))
    throw std::invalid_argument("tensor of sheaves on different spaces");
  std::vector<TensorStalk> ts;
  std::vector<GradedModule> stalks;
  for (int x = 0; x < f.size(); ++x) {
    ts.push_back(tensor_stalk(f.stalk(x), g.stalk(x)));
    stalks.push_back(ts.back().mod);
  }
  std::map<std::pair<int, int>, std::map<Degree, ModuleHom>> res;
  const auto& s = f.space();
  for (auto [lo, hi] : s.poset().covers()) {
    const auto& rho = s.restriction(lo, hi);
    for (const auto& [d, blocks] : ts[lo].layout) {
      Degree td = rho.apply(d);
      const Module& src = stalks[lo].part(d);
      const Module& dst = stalks[hi].part(td);
      if (src.is_zero() || dst.is_zero()) continue;
      IntMat m(dst.gens(), src.gens());
      for (const auto& [da, db, t, off] : blocks) {
        Degree ta = rho.apply(da);
        Degree tb = rho.apply(db);
        auto it = ts[hi].layout.find(td);
        if (it == ts[hi].layout.end()) continue;
        for (const auto& [ea, eb, t2, off2] : it->second) {
          if (!(ea == ta) || !(eb == tb)) continue;
          ModuleHom blk = tensor_hom(t, t2, f.restriction(lo, hi, da),
                                     g.restriction(lo, hi, db));
          for (int i = 0; i < blk.matrix().rows(); ++i)
            for (int j = 0; j < blk.matrix().cols(); ++j)
              m(off2 + i, off + j) += blk.matrix()(i, j);
        }
      }
      res[{lo, hi}][d] = ModuleHom(src, dst, m);
    }
  }
  return GradedSheaf(s, std::move(stalks), std::move(res));
}

// ---------------------------------------------------------------------------
// The basic exact sequence  F_U -> F -> F_{X\U}

struct BasicSequence {
  GradedSheaf sub;   ///< F_U, extension by zero from the open U
  GradedSheaf quot;  ///< F_{X\U}
  SheafMap incl;     ///< F_U -> F
  SheafMap proj;     ///< F -> F_{X\U}
};

inline BasicSequence basic_exact_sequence(const GradedSheaf& f,
                                          const PointSet& u) {
  if (!f.space().poset().is_open(u))
    throw std::invalid_argument("basic sequence needs an open set");
  PointSet z;
  for (int x = 0; x < f.size(); ++x)
    if (!u.count(x)) z.insert(x);
  BasicSequence out;
  out.sub = extend_by_zero(f, u);
  out.quot = extend_by_zero(f, z);
  std::map<int, std::map<Degree, ModuleHom>> in, pr;
  for (int x = 0; x < f.size(); ++x)
    for (const auto& d : f.stalk(x).support()) {
      if (u.count(x)) in[x][d] = ModuleHom::identity(f.stalk(x).part(d));
      else pr[x][d] = ModuleHom::identity(f.stalk(x).part(d));
    }
  out.incl = SheafMap(out.sub, f, std::move(in), false);
  out.proj = SheafMap(f, out.quot, std::move(pr), false);
  return out;
}

// ---------------------------------------------------------------------------
// Flabbiness and softness

/// Flabby: for every open U and λ in Λ(U), every section of the λ-piece over
/// any smaller open extends to U.
inline bool is_flabby(const GradedSheaf& f) {
  const auto& p = f.space().poset();
  for (const auto& u : p.all_opens()) {
    if (u.empty()) continue;
    LambdaSections lam = sections_of_lambda(f.space(), u);
    for (const auto& d : lam.group.elements()) {
      DegreeFamily fam = family_of(lam, d);
      LimitData big = limit_over(f, u, fam);
      for (const auto& v : p.all_opens()) {
        if (v.empty()) continue;
        if (!std::includes(u.begin(), u.end(), v.begin(), v.end())) continue;
        LimitData small = limit_over(f, v, restrict_family(fam, v));
        if (small.module.is_zero()) continue;
        if (!limit_restriction(big, small).is_surjective()) return false;
      }
    }
  }
  return true;
}

/// Soft: same with arbitrary (compact) subsets of U in place of opens.
inline bool is_soft(const GradedSheaf& f) {
  const auto& p = f.space().poset();
  for (const auto& u : p.all_opens()) {
    if (u.empty()) continue;
    LambdaSections lam = sections_of_lambda(f.space(), u);
    std::vector<int> upts(u.begin(), u.end());
    for (const auto& d : lam.group.elements()) {
      DegreeFamily fam = family_of(lam, d);
      LimitData big = limit_over(f, u, fam);
      for (unsigned mask = 1; mask < (1u << upts.size()); ++mask) {
        PointSet k;
        for (size_t i = 0; i < upts.size(); ++i)
          if (mask & (1u << i)) k.insert(upts[i]);
        LimitData small = limit_over(f, k, restrict_family(fam, k));
        if (small.module.is_zero()) continue;
        if (!limit_restriction(big, small).is_surjective()) return false;
      }
    }
  }
  return true;
}

}  // namespace gsk
