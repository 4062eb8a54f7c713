#pragma once

// Renormalization identities relating the operator at level r to the
// operator built from the shifted sequences at level r + 1.

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "stochadd/error.hpp"
#include "stochadd/machine.hpp"

namespace stochadd {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::ptrdiff_t>;

/// (Pi_{k,r})_{l,m} = 1 iff l = k + m * d_r.
inline SparseMatrix projection_matrix_pi(Index k, std::size_t r, Index n_rows, Index n_cols,
                                         const BaseSeq& base) {
  const Index d = base(r);
  if (k >= d) throw PreconditionError("projection index k must satisfy 0 <= k <= d_r - 1");
  std::vector<Eigen::Triplet<double, std::ptrdiff_t>> triplets;
  for (Index m = 0; m < n_cols; ++m) {
    const Index l = k + m * d;
    if (l >= n_rows) break;
    triplets.emplace_back(static_cast<std::ptrdiff_t>(l), static_cast<std::ptrdiff_t>(m), 1.0);
  }
  SparseMatrix out(static_cast<std::ptrdiff_t>(n_rows), static_cast<std::ptrdiff_t>(n_cols));
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

/// (F_{k,r} v)_l = v_{k + l * d_r}; the transpose of Pi_{k,r}.
inline SparseMatrix fold_matrix_f(Index k, std::size_t r, Index n_rows, Index n_cols, const BaseSeq& base) {
  return SparseMatrix(projection_matrix_pi(k, r, n_cols, n_rows, base).transpose());
}

inline SparseMatrix to_sparse(const SparseTransitionMatrix& mat) {
  std::vector<Eigen::Triplet<double, std::ptrdiff_t>> triplets;
  for (const auto& row : mat.rows) {
    for (const auto& e : row.entries) {
      triplets.emplace_back(static_cast<std::ptrdiff_t>(row.source), static_cast<std::ptrdiff_t>(e.target),
                            e.probability);
    }
  }
  const auto n = static_cast<std::ptrdiff_t>(mat.dim);
  SparseMatrix out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

struct RenormReport {
  std::size_t r = 0;
  Index n1 = 0;
  Index n2 = 0;
  Index window = 0;                  // rows/cols of the level-r side checked
  double part2_max_diff = 0.0;       // R^{d_r} vs sum_k Pi_k S' F_k
  std::vector<double> part1_max_diff;  // index k; k = 0 compares R Pi_0 with Pi_{d-1} S'

  double worst() const {
    double w = part2_max_diff;
    for (double x : part1_max_diff) w = std::max(w, x);
    return w;
  }
};

namespace detail {

inline double max_abs_in_window(const SparseMatrix& a, Index rows, Index cols) {
  double worst = 0.0;
  for (std::ptrdiff_t i = 0; i < a.outerSize() && static_cast<Index>(i) < rows; ++i) {
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      if (static_cast<Index>(it.col()) < cols) worst = std::max(worst, std::abs(it.value()));
    }
  }
  return worst;
}

}  // namespace detail

/// Builds S_r (sequences shifted to start at index r) at size N1 = d_r * N2
/// and S_{r+1} at size N2, with R_r = (S_r - (1 - p_r) I) / p_r, and
/// compares both sides of the renormalization identities on the interior
/// window l, m < N1 - d_r * d_{r+1}, where truncation cannot interfere.
inline RenormReport renorm_check(std::size_t r, Index n2, const BaseSeq& base, const ProbSeq& probs) {
  if (r < 1) throw PreconditionError("renormalization level starts at r = 1");
  if (n2 < 2) throw PreconditionError("N2 must be at least 2");

  const Index d = base(r);
  const Index margin = detail::checked_mul(d, base(r + 1));
  const Index n1 = detail::checked_mul(d, n2);
  if (n1 <= margin) throw PreconditionError("interior window is empty; increase N2");
  const Index window = n1 - margin;
  const Index window2 = window / d;
  if (window2 == 0) throw PreconditionError("interior window is empty; increase N2");

  const double p = probs(r);
  const SparseMatrix s_r = to_sparse(build_matrix(n1, base.shifted(r - 1), probs.shifted(r - 1)));
  const SparseMatrix s_next = to_sparse(build_matrix(n2, base.shifted(r), probs.shifted(r)));

  SparseMatrix identity(static_cast<std::ptrdiff_t>(n1), static_cast<std::ptrdiff_t>(n1));
  identity.setIdentity();
  const SparseMatrix renorm = SparseMatrix((s_r - (1.0 - p) * identity) / p);

  SparseMatrix power = renorm;
  for (Index i = 1; i < d; ++i) power = SparseMatrix(power * renorm);

  std::vector<SparseMatrix> pi, fold;
  for (Index k = 0; k < d; ++k) {
    pi.push_back(projection_matrix_pi(k, 1, n1, n2, base.shifted(r - 1)));
    fold.push_back(fold_matrix_f(k, 1, n2, n1, base.shifted(r - 1)));
  }

  SparseMatrix rhs(static_cast<std::ptrdiff_t>(n1), static_cast<std::ptrdiff_t>(n1));
  for (Index k = 0; k < d; ++k) rhs += SparseMatrix(pi[k] * s_next * fold[k]);

  RenormReport report;
  report.r = r;
  report.n1 = n1;
  report.n2 = n2;
  report.window = window;
  report.part2_max_diff = detail::max_abs_in_window(SparseMatrix(power - rhs), window, window);

  report.part1_max_diff.assign(d, 0.0);
  for (Index k = 1; k < d; ++k) {
    const SparseMatrix diff = SparseMatrix(renorm * pi[k]) - pi[k - 1];
    report.part1_max_diff[k] = detail::max_abs_in_window(diff, window, window2);
  }
  const SparseMatrix diff0 = SparseMatrix(renorm * pi[0]) - SparseMatrix(pi[d - 1] * s_next);
  report.part1_max_diff[0] = detail::max_abs_in_window(diff0, window, window2);
  return report;
}

}  // namespace stochadd
