#pragma once

/**
 * @file poset.hpp
 * @brief Finite posets with their Alexandrov topology.
 *
 * Opens are up-sets; U_x = { y : y >= x } is the minimal open neighborhood
 * of x, and cl(x) = { y : y <= x }.  Points are indices 0..n-1 with optional
 * names.
 */

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "gsk/snf.hpp"

namespace gsk {

using PointSet = std::set<int>;

class FinitePoset {
public:
  FinitePoset() = default;

  /// Points 0..n-1 with the given covering pairs (lo < hi).
  FinitePoset(int n, const std::vector<std::pair<int, int>>& covers,
              std::vector<std::string> names = {})
      : n_(n), names_(std::move(names)), leq_(n, std::vector<bool>(n, false)) {
    if (names_.empty())
      for (int i = 0; i < n; ++i) names_.push_back("p" + std::to_string(i));
    for (int i = 0; i < n; ++i) leq_[i][i] = true;
    for (auto [lo, hi] : covers) {
      if (lo < 0 || lo >= n || hi < 0 || hi >= n)
        throw std::invalid_argument("cover out of range");
      leq_[lo][hi] = true;
    }
    // transitive closure
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        if (leq_[i][k])
          for (int j = 0; j < n; ++j)
            if (leq_[k][j]) leq_[i][j] = true;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && leq_[i][j] && leq_[j][i])
          throw std::invalid_argument("order relation is not antisymmetric");
    // covering pairs recomputed from the closure
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j || !leq_[i][j]) continue;
        bool cover = true;
        for (int k = 0; k < n && cover; ++k)
          if (k != i && k != j && leq_[i][k] && leq_[k][j]) cover = false;
        if (cover) covers_.emplace_back(i, j);
      }
  }

  static FinitePoset point() { return FinitePoset(1, {}, {"pt"}); }

  int size() const { return n_; }
  const std::string& name(int p) const { return names_[p]; }
  int index_of(const std::string& name) const {
    for (int i = 0; i < n_; ++i)
      if (names_[i] == name) return i;
    throw std::invalid_argument("unknown point " + name);
  }

  bool leq(int a, int b) const { return leq_[a][b]; }
  const std::vector<std::pair<int, int>>& covers() const { return covers_; }

  /// Minimal open neighborhood U_x = up-set of x.
  PointSet min_open(int x) const {
    PointSet u;
    for (int y = 0; y < n_; ++y)
      if (leq_[x][y]) u.insert(y);
    return u;
  }

  /// Closure cl(x) = down-set of x.
  PointSet closure(int x) const {
    PointSet c;
    for (int y = 0; y < n_; ++y)
      if (leq_[y][x]) c.insert(y);
    return c;
  }

  PointSet closure(const PointSet& s) const {
    PointSet c;
    for (int x : s)
      for (int y = 0; y < n_; ++y)
        if (leq_[y][x]) c.insert(y);
    return c;
  }

  bool is_up_set(const PointSet& s) const {
    for (int x : s)
      for (int y = 0; y < n_; ++y)
        if (leq_[x][y] && !s.count(y)) return false;
    return true;
  }

  bool is_down_set(const PointSet& s) const {
    for (int x : s)
      for (int y = 0; y < n_; ++y)
        if (leq_[y][x] && !s.count(y)) return false;
    return true;
  }

  bool is_open(const PointSet& s) const { return is_up_set(s); }
  bool is_closed(const PointSet& s) const { return is_down_set(s); }

  /// Y = U ∩ Z for some open U and closed Z.
  bool is_locally_closed(const PointSet& s) const {
    // Equivalent test: s is open inside its closure.
    PointSet cl = closure(s);
    for (int x : s)
      for (int y : cl)
        if (leq_[x][y] && !s.count(y)) return false;
    return true;
  }

  PointSet whole() const {
    PointSet s;
    for (int i = 0; i < n_; ++i) s.insert(i);
    return s;
  }

  PointSet complement(const PointSet& s) const {
    PointSet c;
    for (int i = 0; i < n_; ++i)
      if (!s.count(i)) c.insert(i);
    return c;
  }

  /// All open sets (up-sets).  Exponential; used on desk-scale posets only.
  std::vector<PointSet> all_opens() const {
    std::vector<PointSet> out;
    for (unsigned mask = 0; mask < (1u << n_); ++mask) {
      PointSet s;
      for (int i = 0; i < n_; ++i)
        if (mask & (1u << i)) s.insert(i);
      if (is_up_set(s)) out.push_back(s);
    }
    return out;
  }

  /// Longest strict chain length (edges, not vertices).
  int chain_length() const {
    std::vector<int> depth(n_, 0);
    // topological-ish: repeat relaxation
    for (int rep = 0; rep < n_; ++rep)
      for (auto [lo, hi] : covers_)
        depth[hi] = std::max(depth[hi], depth[lo] + 1);
    int m = 0;
    for (int d : depth) m = std::max(m, d);
    return m;
  }

  /// All strictly increasing chains x_0 < ... < x_len of the given length.
  std::vector<std::vector<int>> chains(int len) const {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    chains_rec(len, cur, out);
    return out;
  }

private:
  void chains_rec(int len, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) const {
    if (static_cast<int>(cur.size()) == len + 1) {
      out.push_back(cur);
      return;
    }
    for (int x = 0; x < n_; ++x) {
      if (!cur.empty() && !(leq_[cur.back()][x] && cur.back() != x)) continue;
      cur.push_back(x);
      chains_rec(len, cur, out);
      cur.pop_back();
    }
  }

  int n_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<bool>> leq_;
  std::vector<std::pair<int, int>> covers_;
};

}  // namespace gsk
