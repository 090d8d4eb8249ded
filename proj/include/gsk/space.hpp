#pragma once

/**
 * @file space.hpp
 * @brief Finite graded spaces: a poset with a sheaf of grading groups.
 *
 * The grading sheaf is stored pointwise: a grading group per point and a
 * restriction homomorphism Λ_x -> Λ_y for every generization pair x <= y.
 */

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gsk/graded_module.hpp"
#include "gsk/poset.hpp"

namespace gsk {

class GradedSpace {
public:
  GradedSpace() = default;

  /// Restrictions are given per covering pair and composed to all comparable
  /// pairs; path-independence is part of validation.
  GradedSpace(FinitePoset poset, std::vector<GradingGroup> lambda,
              std::map<std::pair<int, int>, GradingHom> cover_restrictions)
      : poset_(std::move(poset)), lambda_(std::move(lambda)) {
    if (static_cast<int>(lambda_.size()) != poset_.size())
      throw std::invalid_argument("one grading group per point required");
    for (int x = 0; x < poset_.size(); ++x)
      res_[{x, x}] = GradingHom::identity(lambda_[x]);
    for (const auto& [pr, h] : cover_restrictions) res_[pr] = h;
    // Close under composition along covers (any path; validate() checks all).
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto [lo, hi] : poset_.covers()) {
        auto it = res_.find({lo, hi});
        if (it == res_.end()) continue;
        for (const auto& [pr, h] : res_) {
          if (pr.second != lo) continue;
          std::pair<int, int> tgt{pr.first, hi};
          if (!res_.count(tgt)) {
            res_[tgt] = it->second.compose_after(h);
            changed = true;
          }
        }
      }
    }
  }

  /// One-point space.
  static GradedSpace point(GradingGroup g = GradingGroup::trivial()) {
    return GradedSpace(FinitePoset::point(), {std::move(g)}, {});
  }

  const FinitePoset& poset() const { return poset_; }
  int size() const { return poset_.size(); }
  const GradingGroup& lambda(int x) const { return lambda_[x]; }

  const GradingHom& restriction(int x, int y) const {
    auto it = res_.find({x, y});
    if (it == res_.end())
      throw std::invalid_argument("no grading restriction for pair (" +
                                  poset_.name(x) + "," + poset_.name(y) + ")");
    return it->second;
  }

  bool has_trivial_grading() const {
    for (const auto& g : lambda_)
      if (!g.is_trivial()) return false;
    return true;
  }

  /// Structural validation; returns human-readable diagnostics (empty = ok).
  std::vector<std::string> validate() const {
    std::vector<std::string> diag;
    for (auto [lo, hi] : poset_.covers())
      if (!res_.count({lo, hi}))
        diag.push_back("missing grading restriction on cover " +
                       poset_.name(lo) + " <= " + poset_.name(hi));
    // Functoriality on all comparable triples.
    for (int x = 0; x < size(); ++x)
      for (int y = 0; y < size(); ++y) {
        if (!poset_.leq(x, y) || !res_.count({x, y})) continue;
        for (int z = 0; z < size(); ++z) {
          if (!poset_.leq(y, z) || !res_.count({y, z}) || !res_.count({x, z}))
            continue;
          auto composed = res_.at({y, z}).compose_after(res_.at({x, y}));
          if (!(composed == res_.at({x, z})))
            diag.push_back("grading restrictions do not compose along " +
                           poset_.name(x) + " <= " + poset_.name(y) +
                           " <= " + poset_.name(z));
        }
      }
    return diag;
  }

  bool operator==(const GradedSpace& o) const {
    if (poset_.size() != o.poset_.size()) return false;
    for (int x = 0; x < size(); ++x) {
      if (lambda_[x] != o.lambda_[x]) return false;
      for (int y = 0; y < size(); ++y)
        if (poset_.leq(x, y) != o.poset_.leq(x, y)) return false;
    }
    for (const auto& [pr, h] : res_) {
      auto it = o.res_.find(pr);
      if (it == o.res_.end() || !(h == it->second)) return false;
    }
    return true;
  }

private:
  FinitePoset poset_;
  std::vector<GradingGroup> lambda_;
  std::map<std::pair<int, int>, GradingHom> res_;
};

/// Λ(U) presented as the limit of the Λ_x over x in U.
struct LambdaSections {
  GradingGroup group;
  std::map<int, GradingHom> project;  ///< projection to Λ_x for x in U
};

/// Compatible families (λ_x) over an open U, via the kernel of the difference
/// map ⊕_{x in U} Λ_x -> ⊕_{x < y covering in U} Λ_y.
inline LambdaSections sections_of_lambda(const GradedSpace& s, const PointSet& u) {
  if (!s.poset().is_open(u))
    throw std::invalid_argument("sections_of_lambda: set is not open");
  std::vector<int> pts(u.begin(), u.end());
  std::map<int, int> offset;
  std::vector<Int> dom_orders;
  for (int x : pts) {
    offset[x] = static_cast<int>(dom_orders.size());
    for (Int d : s.lambda(x).orders()) dom_orders.push_back(d);
  }
  std::vector<std::pair<int, int>> pairs;
  std::vector<Int> cod_orders;
  std::vector<int> pair_offset;
  for (auto [lo, hi] : s.poset().covers()) {
    if (!u.count(lo) || !u.count(hi)) continue;
    pair_offset.push_back(static_cast<int>(cod_orders.size()));
    pairs.emplace_back(lo, hi);
    for (Int d : s.lambda(hi).orders()) cod_orders.push_back(d);
  }
  IntMat diff(static_cast<int>(cod_orders.size()),
              static_cast<int>(dom_orders.size()));
  for (size_t k = 0; k < pairs.size(); ++k) {
    auto [lo, hi] = pairs[k];
    const IntMat& r = s.restriction(lo, hi).matrix();
    for (int i = 0; i < r.rows(); ++i) {
      for (int j = 0; j < r.cols(); ++j)
        diff(pair_offset[k] + i, offset[lo] + j) += r(i, j);
      diff(pair_offset[k] + i, offset[hi] + i) -= 1;
    }
  }
  Module ambient(Ring::integers(), dom_orders);
  IntMat lat = congruence_kernel(diff, cod_orders);
  auto sub = submodule(ambient, lat);
  LambdaSections out;
  out.group = GradingGroup(sub.module.orders());
  for (int x : pts) {
    const auto& lx = s.lambda(x);
    IntMat proj(lx.rank_gens(), sub.module.gens());
    for (int i = 0; i < lx.rank_gens(); ++i)
      for (int j = 0; j < sub.module.gens(); ++j)
        proj(i, j) = sub.map.matrix()(offset[x] + i, j);
    out.project.emplace(x, GradingHom(out.group, lx, proj));
  }
  return out;
}

class GradedSpaceMap {
public:
  GradedSpaceMap() = default;

  /// f: X -> Y monotone with comparison maps f♭_x : Λ_{Y,f(x)} -> Λ_{X,x}.
  GradedSpaceMap(GradedSpace dom, GradedSpace cod, std::vector<int> point_map,
                 std::vector<GradingHom> flat)
      : dom_(std::move(dom)),
        cod_(std::move(cod)),
        f_(std::move(point_map)),
        flat_(std::move(flat)) {
    if (static_cast<int>(f_.size()) != dom_.size() ||
        static_cast<int>(flat_.size()) != dom_.size())
      throw std::invalid_argument("map data size mismatch");
    for (int x = 0; x < dom_.size(); ++x)
      for (int y = 0; y < dom_.size(); ++y)
        if (dom_.poset().leq(x, y) && !cod_.poset().leq(f_[x], f_[y]))
          throw std::invalid_argument("point map is not monotone");
    for (int x = 0; x < dom_.size(); ++x) {
      if (!(flat_[x].domain() == cod_.lambda(f_[x])) ||
          !(flat_[x].codomain() == dom_.lambda(x)))
        throw std::invalid_argument("comparison map has wrong domain/codomain");
    }
    // Naturality: f♭ commutes with the grading restrictions.
    for (int x = 0; x < dom_.size(); ++x)
      for (int y = 0; y < dom_.size(); ++y) {
        if (!dom_.poset().leq(x, y)) continue;
        auto via_dom = dom_.restriction(x, y).compose_after(flat_[x]);
        auto via_cod = flat_[y].compose_after(cod_.restriction(f_[x], f_[y]));
        if (!(via_dom == via_cod))
          throw std::invalid_argument(
              "comparison maps do not commute with grading restrictions at " +
              dom_.poset().name(x) + " <= " + dom_.poset().name(y));
      }
  }

  static GradedSpaceMap identity(const GradedSpace& s) {
    std::vector<int> f(s.size());
    std::vector<GradingHom> flat;
    for (int x = 0; x < s.size(); ++x) {
      f[x] = x;
      flat.push_back(GradingHom::identity(s.lambda(x)));
    }
    return GradedSpaceMap(s, s, std::move(f), std::move(flat));
  }

  const GradedSpace& domain() const { return dom_; }
  const GradedSpace& codomain() const { return cod_; }
  int apply(int x) const { return f_[x]; }
  const GradingHom& flat(int x) const { return flat_[x]; }

  bool is_strict() const {
    for (const auto& h : flat_)
      if (!h.is_isomorphism()) return false;
    return true;
  }

  PointSet preimage(const PointSet& v) const {
    PointSet out;
    for (int x = 0; x < dom_.size(); ++x)
      if (v.count(f_[x])) out.insert(x);
    return out;
  }

  PointSet fiber(int y) const {
    PointSet out;
    for (int x = 0; x < dom_.size(); ++x)
      if (f_[x] == y) out.insert(x);
    return out;
  }

private:
  GradedSpace dom_, cod_;
  std::vector<int> f_;
  std::vector<GradingHom> flat_;
};

inline GradedSpaceMap compose_maps(const GradedSpaceMap& g,
                                   const GradedSpaceMap& f) {
  if (!(f.codomain() == g.domain()))
    throw std::invalid_argument("compose_maps: domain/codomain mismatch");
  std::vector<int> pm(f.domain().size());
  std::vector<GradingHom> flat;
  for (int x = 0; x < f.domain().size(); ++x) {
    pm[x] = g.apply(f.apply(x));
    flat.push_back(f.flat(x).compose_after(g.flat(f.apply(x))));
  }
  return GradedSpaceMap(f.domain(), g.codomain(), std::move(pm), std::move(flat));
}

/// Subspace on a subset S, graded by the restricted Λ, with its inclusion.
struct Subspace {
  GradedSpace space;
  GradedSpaceMap inclusion;
  std::map<int, int> to_sub;  ///< ambient point -> subspace point
};

inline Subspace subspace(const GradedSpace& s, const PointSet& pts) {
  std::vector<int> order(pts.begin(), pts.end());
  std::map<int, int> idx;
  for (size_t i = 0; i < order.size(); ++i) idx[order[i]] = static_cast<int>(i);
  std::vector<std::pair<int, int>> covers;
  for (size_t i = 0; i < order.size(); ++i)
    for (size_t j = 0; j < order.size(); ++j)
      if (i != j && s.poset().leq(order[i], order[j]))
        covers.emplace_back(static_cast<int>(i), static_cast<int>(j));
  std::vector<std::string> names;
  for (int p : order) names.push_back(s.poset().name(p));
  FinitePoset sub_poset(static_cast<int>(order.size()), covers, names);
  std::vector<GradingGroup> lambda;
  for (int p : order) lambda.push_back(s.lambda(p));
  std::map<std::pair<int, int>, GradingHom> res;
  for (auto [lo, hi] : sub_poset.covers())
    res[{lo, hi}] = s.restriction(order[lo], order[hi]);
  Subspace out;
  out.space = GradedSpace(std::move(sub_poset), std::move(lambda), std::move(res));
  std::vector<GradingHom> flat;
  std::vector<int> pm;
  for (int p : order) {
    pm.push_back(p);
    flat.push_back(GradingHom::identity(s.lambda(p)));
  }
  out.inclusion = GradedSpaceMap(out.space, s, std::move(pm), std::move(flat));
  out.to_sub = std::move(idx);
  return out;
}

/// The canonical map (X, Λ) -> (pt, Λ(X)); f♭ are the section projections.
inline GradedSpaceMap map_to_point_with_global_sections(const GradedSpace& s) {
  auto secs = sections_of_lambda(s, s.poset().whole());
  GradedSpace pt = GradedSpace::point(secs.group);
  std::vector<int> pm(s.size(), 0);
  std::vector<GradingHom> flat;
  for (int x = 0; x < s.size(); ++x) flat.push_back(secs.project.at(x));
  return GradedSpaceMap(s, pt, std::move(pm), std::move(flat));
}

/// The map (X, Λ) -> (pt, 0) forgetting all degrees.
inline GradedSpaceMap map_to_trivial_point(const GradedSpace& s) {
  GradedSpace pt = GradedSpace::point();
  std::vector<int> pm(s.size(), 0);
  std::vector<GradingHom> flat;
  for (int x = 0; x < s.size(); ++x)
    flat.push_back(GradingHom::zero(GradingGroup::trivial(), s.lambda(x)));
  return GradedSpaceMap(s, pt, std::move(pm), std::move(flat));
}

/// Fiber product of f: Y1 -> X and g: Y2 -> X with its projections.
struct FiberProduct {
  GradedSpace space;                       ///< Z = Y1 ×_X Y2
  GradedSpaceMap to_y1;                    ///< g̃
  GradedSpaceMap to_y2;                    ///< f̃
  std::vector<std::pair<int, int>> points; ///< Z point -> (y1, y2)
};

inline FiberProduct fiber_product(const GradedSpaceMap& f,
                                  const GradedSpaceMap& g) {
  if (!(f.codomain() == g.codomain()))
    throw std::invalid_argument("fiber_product: common codomain required");
  const GradedSpace& y1 = f.domain();
  const GradedSpace& y2 = g.domain();
  std::vector<std::pair<int, int>> pts;
  for (int a = 0; a < y1.size(); ++a)
    for (int b = 0; b < y2.size(); ++b)
      if (f.apply(a) == g.apply(b)) pts.emplace_back(a, b);
  auto find = [&](int a, int b) {
    for (size_t i = 0; i < pts.size(); ++i)
      if (pts[i] == std::make_pair(a, b)) return static_cast<int>(i);
    return -1;
  };
  std::vector<std::pair<int, int>> covers;
  std::vector<std::string> names;
  for (size_t i = 0; i < pts.size(); ++i) {
    names.push_back("(" + y1.poset().name(pts[i].first) + "," +
                    y2.poset().name(pts[i].second) + ")");
    for (size_t j = 0; j < pts.size(); ++j)
      if (i != j && y1.poset().leq(pts[i].first, pts[j].first) &&
          y2.poset().leq(pts[i].second, pts[j].second))
        covers.emplace_back(static_cast<int>(i), static_cast<int>(j));
  }
  FinitePoset zposet(static_cast<int>(pts.size()), covers, names);

  // Λ_Z at (a, b): pushout of Λ_{Y1,a} <- Λ_{X,x} -> Λ_{Y2,b}, i.e. the
  // cokernel of (f♭, -g♭) into the direct sum.
  std::vector<GradingGroup> lambda;
  std::vector<ModuleHom> proj1, proj2;  // pushout injection data per point
  std::vector<SubquotientResult> cokers;
  std::vector<Module> sums;
  for (auto [a, b] : pts) {
    int x = f.apply(a);
    auto ds = direct_sum({y1.lambda(a).as_module(), y2.lambda(b).as_module()},
                         Ring::integers());
    const IntMat& fm = f.flat(a).matrix();
    const IntMat& gm = g.flat(b).matrix();
    IntMat rel(ds.module.gens(), fm.cols());
    for (int i = 0; i < fm.rows(); ++i)
      for (int j = 0; j < fm.cols(); ++j) rel(i, j) = fm(i, j);
    for (int i = 0; i < gm.rows(); ++i)
      for (int j = 0; j < gm.cols(); ++j) rel(fm.rows() + i, j) = -gm(i, j);
    (void)x;
    auto q = quotient(ds.module, rel);
    lambda.emplace_back(q.module.orders());
    proj1.push_back(q.map.compose_after(ds.inclusions[0]));
    proj2.push_back(q.map.compose_after(ds.inclusions[1]));
    cokers.push_back(q);
    sums.push_back(ds.module);
  }

  // Restrictions: induced on pushouts by the componentwise restrictions.
  // Lift a pushout generator to the direct sum, restrict, project again.
  std::map<std::pair<int, int>, GradingHom> res;
  for (auto [lo, hi] : zposet.covers()) {
    auto [a1, b1] = pts[lo];
    auto [a2, b2] = pts[hi];
    const IntMat& r1 = y1.restriction(a1, a2).matrix();
    const IntMat& r2 = y2.restriction(b1, b2).matrix();
    IntMat block = IntMat::block_diag(r1, r2);
    // Need a lift: solve proj_lo * v = e_k on generators of Λ_{Z,lo}.
    const Module& sum_lo = sums[lo];
    const Module& z_lo = cokers[lo].module;
    IntMat lift(sum_lo.gens(), z_lo.gens());
    for (int k = 0; k < z_lo.gens(); ++k) {
      // projection matrix is to_canonical rows; solve P v ≡ e_k mod orders
      std::vector<int> tors;
      for (int r = 0; r < z_lo.gens(); ++r)
        if (z_lo.order(r) != 0) tors.push_back(r);
      IntMat aug(z_lo.gens(), sum_lo.gens() + static_cast<int>(tors.size()));
      for (int r = 0; r < z_lo.gens(); ++r)
        for (int c = 0; c < sum_lo.gens(); ++c)
          aug(r, c) = cokers[lo].map.matrix()(r, c);
      for (size_t t = 0; t < tors.size(); ++t)
        aug(tors[t], sum_lo.gens() + static_cast<int>(t)) = z_lo.order(tors[t]);
      std::vector<Int> e(z_lo.gens(), 0), v;
      e[k] = 1;
      if (!solve_integer(aug, e, v))
        throw std::logic_error("fiber_product: projection not surjective");
      for (int i = 0; i < sum_lo.gens(); ++i) lift(i, k) = v[i];
    }
    IntMat mat = cokers[hi].map.matrix() * (block * lift);
    res[{lo, hi}] = GradingHom(lambda[lo], lambda[hi], mat);
  }

  FiberProduct out;
  out.space = GradedSpace(zposet, lambda, res);
  out.points = pts;
  std::vector<int> pm1, pm2;
  std::vector<GradingHom> fl1, fl2;
  for (size_t i = 0; i < pts.size(); ++i) {
    pm1.push_back(pts[i].first);
    pm2.push_back(pts[i].second);
    fl1.emplace_back(y1.lambda(pts[i].first), out.space.lambda(static_cast<int>(i)),
                     proj1[i].matrix());
    fl2.emplace_back(y2.lambda(pts[i].second), out.space.lambda(static_cast<int>(i)),
                     proj2[i].matrix());
  }
  out.to_y1 = GradedSpaceMap(out.space, y1, pm1, fl1);
  out.to_y2 = GradedSpaceMap(out.space, y2, pm2, fl2);
  return out;
}

/// Closed-map test for the restriction of f to a support subset, relative to
/// a target open V: for every s in S the image of cl(s) ∩ S (closure inside
/// f⁻¹(V)) must be a down-set of the subposet on V.
inline bool is_proper_on(const GradedSpaceMap& f, const PointSet& support,
                         std::optional<PointSet> target_open = {}) {
  const auto& dom = f.domain().poset();
  const auto& cod = f.codomain().poset();
  PointSet v = target_open ? *target_open : f.codomain().poset().whole();
  PointSet fv = f.preimage(v);
  for (int s : support) {
    PointSet cl;
    for (int y : dom.closure(s))
      if (support.count(y) && fv.count(y)) cl.insert(y);
    PointSet img;
    for (int y : cl) img.insert(f.apply(y));
    // down-set relative to V
    for (int x : img)
      for (int y : v)
        if (cod.leq(y, x) && !img.count(y)) return false;
  }
  return true;
}

inline bool is_proper(const GradedSpaceMap& f) {
  for (const auto& v : f.codomain().poset().all_opens()) {
    PointSet fv = f.preimage(v);
    // every closed-in-f⁻¹(V) subset must have closed image; the closures of
    // points suffice on finite spaces
    for (int s : fv) {
      PointSet cl;
      for (int y : f.domain().poset().closure(s))
        if (fv.count(y)) cl.insert(y);
      if (!is_proper_on(f, cl, v)) return false;
    }
  }
  return true;
}

}  // namespace gsk
