#pragma once

// Shared desk-scale fixtures used across the test suites.


#include "gsk/space.hpp"
#include "gsk/sheaf.hpp"

namespace fixtures {

using namespace gsk;

// Three-point model of the real line around a graded origin: a closed point c
// under two open points u- and u+, with Λ_c = Z/3 (or Z) and Λ_{u±} = 0.
inline GradedSpace line3(Int c_order = 3) {
  FinitePoset p(3, {{0, 1}, {0, 2}}, {"c", "u-", "u+"});
  GradingGroup lc({c_order});
  GradingGroup l0 = GradingGroup::trivial();
  std::map<std::pair<int, int>, GradingHom> res;
  res[{0, 1}] = GradingHom::zero(lc, l0);
  res[{0, 2}] = GradingHom::zero(lc, l0);
  return GradedSpace(p, {lc, l0, l0}, res);
}

// Sierpinski space: closed point 0 under open point 1, trivial grading.
inline GradedSpace sierpinski() {
  FinitePoset p(2, {{0, 1}}, {"cl", "op"});
  GradingGroup t = GradingGroup::trivial();
  std::map<std::pair<int, int>, GradingHom> res;
  res[{0, 1}] = GradingHom::zero(t, t);
  return GradedSpace(p, {t, t}, res);
}

// Pseudo-circle: 4-point model of S^1, closed c1, c2 under open o1, o2.
inline GradedSpace pseudo_circle() {
  FinitePoset p(4, {{0, 2}, {0, 3}, {1, 2}, {1, 3}}, {"c1", "c2", "o1", "o2"});
  GradingGroup t = GradingGroup::trivial();
  std::map<std::pair<int, int>, GradingHom> res;
  for (auto pr : {std::pair{0, 2}, {0, 3}, {1, 2}, {1, 3}})
    res[pr] = GradingHom::zero(t, t);
  return GradedSpace(p, {t, t, t, t}, res);
}

// The open inclusion {u-, u+} into line3.
inline Subspace line3_open_part(const GradedSpace& l3) {
  return subspace(l3, {1, 2});
}

// Constant sheaf with one-dimensional fiber in degree zero.
inline GradedSheaf constant_line(const GradedSpace& s, const Ring& r) {
  return constant_sheaf(s, Module::unit(r));
}

// Skyscraper at the closed point of line3 with fiber k in the given degree.
inline GradedSheaf line3_skyscraper(const GradedSpace& l3, const Ring& r,
                                    Int deg) {
  GradedModule m = GradedModule::concentrated(r, l3.lambda(0), {deg},
                                              Module::unit(r));
  return skyscraper(l3, 0, m);
}

}  // namespace fixtures
