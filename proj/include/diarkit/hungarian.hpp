// diarkit/hungarian.hpp
//
// Minimum-cost linear assignment (Kuhn-Munkres with potentials) on
// rectangular matrices.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "diarkit/error.hpp"

namespace diarkit {

using CostMatrix = std::vector<std::vector<double>>;

struct Assignment {
  // row_to_col[i] is the column assigned to row i, or -1.
  std::vector<int> row_to_col;
  double total = 0.0;
};

namespace detail {

// Square n x n solver; returns col assigned to each row.
inline std::vector<int> solve_square_assignment(const CostMatrix &a) {
  const int n = static_cast<int>(a.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

inline double square_cost(const CostMatrix &a, const std::vector<int> &rc) {
  double total = 0.0;
  for (std::size_t i = 0; i < rc.size(); ++i) total += a[i][rc[i]];
  return total;
}

// Optimal cost of `a` restricted to the rows/columns not yet taken.
inline double residual_optimum(const CostMatrix &a, const std::vector<char> &row_taken,
                               const std::vector<char> &col_taken) {
  std::vector<int> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!row_taken[i]) rows.push_back(static_cast<int>(i));
    if (!col_taken[i]) cols.push_back(static_cast<int>(i));
  }
  if (rows.empty()) return 0.0;
  CostMatrix sub(rows.size(), std::vector<double>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) sub[i][j] = a[rows[i]][cols[j]];
  }
  return square_cost(sub, solve_square_assignment(sub));
}

}  // namespace detail

// Above this size the lexicographic tie refinement (O(n^5)) is skipped; the
// plain solver is still deterministic.
inline constexpr std::size_t kLexicographicRefineLimit = 16;

// Assigns min(rows, cols) pairs at minimum total cost. Among equal-cost
// optima the lexicographically smallest row_to_col (unassigned sorting last)
// is returned.
inline Assignment hungarian_assign(const CostMatrix &cost) {
  if (cost.empty() || cost.front().empty()) throw Error(ErrorCode::kEmptyMatrix, "empty cost matrix");
  const std::size_t rows = cost.size(), cols = cost.front().size();
  for (const auto &r : cost) {
    if (r.size() != cols) throw Error(ErrorCode::kInvalidArgument, "ragged cost matrix");
    for (double v : r) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite cost");
    }
  }

  const std::size_t n = std::max(rows, cols);
  CostMatrix sq(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) sq[i][j] = cost[i][j];
  }
  std::vector<int> rc = detail::solve_square_assignment(sq);
  const double optimum = detail::square_cost(sq, rc);

  if (n <= kLexicographicRefineLimit) {
    double scale = 1.0;
    for (const auto &r : sq) {
      for (double v : r) scale = std::max(scale, std::abs(v));
    }
    const double tol = 1e-9 * scale * static_cast<double>(n);
    std::vector<char> row_taken(n, 0), col_taken(n, 0);
    double fixed = 0.0;
    std::vector<int> lex(n, -1);
    bool complete = true;
    for (std::size_t i = 0; i < n && complete; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (col_taken[j]) continue;
        row_taken[i] = col_taken[j] = 1;
        const double total = fixed + sq[i][j] + detail::residual_optimum(sq, row_taken, col_taken);
        if (total <= optimum + tol) {
          lex[i] = static_cast<int>(j);
          fixed += sq[i][j];
          break;
        }
        row_taken[i] = col_taken[j] = 0;
      }
      complete = lex[i] >= 0;
    }
    if (complete) rc = lex;
  }

  Assignment out;
  out.row_to_col.assign(rows, -1);
  for (std::size_t i = 0; i < rows; ++i) {
    const int j = rc[i];
    if (j >= 0 && static_cast<std::size_t>(j) < cols) {
      out.row_to_col[i] = j;
      out.total += cost[i][static_cast<std::size_t>(j)];
    }
  }
  return out;
}

}  // namespace diarkit
