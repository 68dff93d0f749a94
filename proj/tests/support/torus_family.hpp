#pragma once

// Test-side invariant theory for torus actions on C^N: a point p is
// chi-semistable iff some monomial x^a, supported where p is nonzero, is a
// chi^n semi-invariant for some n >= 1, i.e. sum_j a_j w_j = n lambda.

#include <functional>
#include <vector>

namespace torus_oracle {

using Weights = std::vector<std::vector<int>>;  // weights[i][j]: coordinate i, circle j

/// Exhaustive search over monomials of total degree <= max_degree in the
/// coordinates listed in `support`.
inline bool monomial_semistable(const Weights& w, const std::vector<int>& lambda,
                                const std::vector<int>& support, int max_degree) {
  const int r = static_cast<int>(lambda.size());
  bool trivial = true;
  for (int c : lambda) trivial = trivial && c == 0;
  if (trivial) return true;  // the constant monomial, n = 1
  std::vector<int> total(static_cast<std::size_t>(r), 0);
  // n = total / lambda must be one positive integer across all circles.
  const auto matches = [&] {
    int n = 0;
    for (int j = 0; j < r; ++j) {
      const int c = lambda[static_cast<std::size_t>(j)], s = total[static_cast<std::size_t>(j)];
      if (c == 0) {
        if (s != 0) return false;
        continue;
      }
      if (s % c != 0) return false;
      const int q = s / c;
      if (q < 1 || (n != 0 && q != n)) return false;
      n = q;
    }
    return n >= 1;
  };
  const auto shift = [&](const std::vector<int>& wi, int e) {
    for (int j = 0; j < r; ++j) total[static_cast<std::size_t>(j)] += e * wi[static_cast<std::size_t>(j)];
  };
  std::function<bool(std::size_t, int)> rec = [&](std::size_t idx, int budget) -> bool {
    if (idx == support.size()) return matches();
    const auto& wi = w[static_cast<std::size_t>(support[idx])];
    for (int e = 0; e <= budget; ++e) {
      shift(wi, e);
      const bool hit = rec(idx + 1, budget - e);
      shift(wi, -e);
      if (hit) return true;
    }
    return false;
  };
  return rec(0, max_degree);
}

/// Calls visit(weights, lambda) for every torus problem of rank r with
/// 1 <= N <= max_n and all weights and character weights in [-2, 2].
/// Coordinates are enumerated up to permutation (nondecreasing weight
/// index), which does not change any verdict.
inline void for_each_problem(int r, int max_n,
                             const std::function<void(const Weights&, const std::vector<int>&)>& visit) {
  std::vector<std::vector<int>> vecs;
  std::vector<int> v(static_cast<std::size_t>(r), -2);
  while (true) {
    vecs.push_back(v);
    int j = 0;
    while (j < r && v[static_cast<std::size_t>(j)] == 2) v[static_cast<std::size_t>(j++)] = -2;
    if (j == r) break;
    ++v[static_cast<std::size_t>(j)];
  }
  const int m = static_cast<int>(vecs.size());
  for (int n = 1; n <= max_n; ++n) {
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    while (true) {
      Weights w;
      for (int i : idx) w.push_back(vecs[static_cast<std::size_t>(i)]);
      for (const auto& lambda : vecs) visit(w, lambda);
      int k = n - 1;
      while (k >= 0 && idx[static_cast<std::size_t>(k)] == m - 1) --k;
      if (k < 0) break;
      ++idx[static_cast<std::size_t>(k)];
      for (int t = k + 1; t < n; ++t) idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(k)];
    }
  }
}

}  // namespace torus_oracle
