#pragma once

// Minimum-cost rectangular assignment (Hungarian method with potentials).
//
// The cost type only needs to form a totally ordered abelian group: a default
// constructed zero, +, -, <, ==. Lexicographic score vectors qualify, so
// multi-level objectives are optimised exactly without scalarisation.

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace abtrack {

template <std::size_t N>
struct LexCost {
  std::array<std::int64_t, N> v{};

  friend LexCost operator+(LexCost a, const LexCost& b) {
    for (std::size_t i = 0; i < N; ++i) a.v[i] += b.v[i];
    return a;
  }
  friend LexCost operator-(LexCost a, const LexCost& b) {
    for (std::size_t i = 0; i < N; ++i) a.v[i] -= b.v[i];
    return a;
  }
  LexCost& operator+=(const LexCost& b) { return *this = *this + b; }
  LexCost& operator-=(const LexCost& b) { return *this = *this - b; }
  friend auto operator<=>(const LexCost&, const LexCost&) = default;
};

/// Assigns every row to a distinct column minimising total cost. `cost(i, j)`
/// returns std::nullopt for forbidden pairs. Requires rows <= cols. Returns the
/// column of each row, or std::nullopt when no complete assignment exists.
template <class Cost>
std::optional<std::vector<int>> min_cost_assignment(
    int rows, int cols, const std::function<std::optional<Cost>(int, int)>& cost) {
  if (rows > cols) throw std::invalid_argument("min_cost_assignment: rows > cols");
  if (rows == 0) return std::vector<int>{};

  // 1-based arrays; column 0 is the virtual source.
  std::vector<std::vector<std::optional<Cost>>> a(rows + 1, std::vector<std::optional<Cost>>(cols + 1));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a[i + 1][j + 1] = cost(i, j);

  std::vector<Cost> u(rows + 1), v(cols + 1);
  std::vector<int> p(cols + 1, 0), way(cols + 1, 0);

  for (int i = 1; i <= rows; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<std::optional<Cost>> minv(cols + 1);
    std::vector<char> used(cols + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      std::optional<Cost> delta;
      int j1 = -1;
      for (int j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        if (a[i0][j]) {
          const Cost cur = *a[i0][j] - u[i0] - v[j];
          if (!minv[j] || cur < *minv[j]) {
            minv[j] = cur;
            way[j] = j0;
          }
        }
        if (minv[j] && (!delta || *minv[j] < *delta)) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 < 0) return std::nullopt;
      for (int j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[p[j]] += *delta;
          v[j] -= *delta;
        } else if (minv[j]) {
          *minv[j] -= *delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assignment(rows, -1);
  for (int j = 1; j <= cols; ++j)
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

}  // namespace abtrack
