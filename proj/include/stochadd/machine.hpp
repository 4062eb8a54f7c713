#pragma once

// The stochastic adding machine: transition rows, truncated transition
// matrices, operator application, column sums and Markov simulation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stochadd/error.hpp"
#include "stochadd/numeration.hpp"

namespace stochadd {

using Complex = std::complex<double>;

struct Transition {
  Index target;
  double probability;

  bool operator==(const Transition&) const = default;
};

struct TransitionRow {
  Index source = 0;
  std::vector<Transition> entries;  // sorted by target

  double sum() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.probability;
    return s;
  }
};

/// Row n of the infinite transition matrix. Zero-probability entries are
/// omitted, so p_1 = 1 drops the self-loop and p_{s+1} = 1 drops the fall
/// back to T_s(n).
inline TransitionRow transition_row(Index n, const BaseSeq& base, const ProbSeq& probs) {
  const DigitVec dv = to_digits(n, base);
  const std::size_t sn = counter(dv);

  TransitionRow row;
  row.source = n;

  // fallbacks: T_s(n) = n - (q_s - 1) decreases in s, so walk s downwards
  std::vector<double> prefix(sn + 1, 1.0);
  for (std::size_t r = 1; r <= sn; ++r) prefix[r] = prefix[r - 1] * probs(r);
  std::vector<Index> q(sn, 1);
  for (std::size_t s = 1; s < sn; ++s) q[s] = q[s - 1] * base(s);

  for (std::size_t s = sn - 1; s >= 1; --s) {
    const double next = probs(s + 1);
    if (next < 1.0) row.entries.push_back({n - (q[s] - 1), (1.0 - next) * prefix[s]});
  }
  const double p1 = probs(1);
  if (p1 < 1.0) row.entries.push_back({n, 1.0 - p1});
  row.entries.push_back({detail::checked_add(n, 1), prefix[sn]});
  return row;
}

/// Rows 0..N-1 of the transition matrix with targets >= N dropped. Only the
/// last row can lose a target (its successor), and it is flagged clipped.
struct SparseTransitionMatrix {
  Index dim = 0;
  BaseSeq base;
  ProbSeq probs;
  std::vector<TransitionRow> rows;
  std::vector<bool> clipped;

  double entry(Index n, Index m) const {
    for (const auto& e : rows.at(n).entries) {
      if (e.target == m) return e.probability;
    }
    return 0.0;
  }
};

inline SparseTransitionMatrix build_matrix(Index N, const BaseSeq& base, const ProbSeq& probs) {
  if (N < 2) throw PreconditionError("matrix dimension must be at least 2");
  SparseTransitionMatrix mat{N, base, probs, {}, {}};
  mat.rows.reserve(N);
  mat.clipped.assign(N, false);
  for (Index n = 0; n < N; ++n) {
    TransitionRow row = transition_row(n, base, probs);
    if (n + 1 >= N) {
      mat.clipped[n] = true;
      std::erase_if(row.entries, [N](const Transition& e) { return e.target >= N; });
    }
    mat.rows.push_back(std::move(row));
  }
  return mat;
}

struct OperatorResult {
  std::vector<Complex> values;
  std::vector<bool> valid;  // false on clipped rows
};

/// (Sv)_n = sum_m p(n, m) v_m.
inline OperatorResult apply_operator(const SparseTransitionMatrix& mat, const std::vector<Complex>& v) {
  if (v.size() != mat.dim) {
    throw PreconditionError("vector length " + std::to_string(v.size()) +
                            " does not match matrix dimension " + std::to_string(mat.dim));
  }
  OperatorResult out{std::vector<Complex>(mat.dim), std::vector<bool>(mat.dim)};
  for (Index n = 0; n < mat.dim; ++n) {
    Complex acc = 0.0;
    for (const auto& e : mat.rows[n].entries) acc += e.probability * v[e.target];
    out.values[n] = acc;
    out.valid[n] = !mat.clipped[n];
  }
  return out;
}

/// max_n |((S - lambda I) v)_n| over unclipped rows.
inline double eigen_residual(const SparseTransitionMatrix& mat, const std::vector<Complex>& v,
                             Complex lambda) {
  const OperatorResult sv = apply_operator(mat, v);
  double worst = 0.0;
  for (Index n = 0; n < mat.dim; ++n) {
    if (!sv.valid[n]) continue;
    worst = std::max(worst, std::abs(sv.values[n] - lambda * v[n]));
  }
  return worst;
}

struct ColumnSum {
  Index column;
  double sum;
  bool complete;
};

/// Largest row of the infinite matrix with a structural entry in column m:
/// m itself, m - 1 and m + q_s - 1 for every s whose low digits 1..s of m
/// are zero. Column 0 has unboundedly many contributors.
inline bool column_complete(Index m, Index N, const BaseSeq& base) {
  if (m == 0) return false;
  Index q = 1;
  Index rest = m;
  for (std::size_t s = 1;; ++s) {
    const Index d = base(s);
    if (rest % d != 0) break;
    rest /= d;
    q = detail::checked_mul(q, d);
  }
  return m + (q - 1) < N && m < N;
}

inline std::vector<ColumnSum> column_sum_report(const SparseTransitionMatrix& mat) {
  std::vector<double> sums(mat.dim, 0.0);
  for (const auto& row : mat.rows) {
    for (const auto& e : row.entries) sums[e.target] += e.probability;
  }
  std::vector<ColumnSum> out;
  out.reserve(mat.dim);
  for (Index m = 0; m < mat.dim; ++m) {
    out.push_back({m, sums[m], column_complete(m, mat.dim, mat.base)});
  }
  return out;
}

struct StochasticityReport {
  double max_row_error = 0.0;      // unclipped rows, |sum - 1|
  double max_column_error = 0.0;   // complete columns, |sum - 1|
  std::size_t complete_columns = 0;
  double max_column0_error = 0.0;  // rows [0, q_t) against 1 - p_1 ... p_{t+1}
  std::size_t column0_levels = 0;

  bool passed(double tol) const {
    return max_row_error <= tol && max_column_error <= tol && max_column0_error <= tol;
  }
};

inline StochasticityReport stochasticity_check(const SparseTransitionMatrix& mat, std::size_t t_max) {
  StochasticityReport rep;
  for (Index n = 0; n < mat.dim; ++n) {
    if (!mat.clipped[n]) rep.max_row_error = std::max(rep.max_row_error, std::abs(mat.rows[n].sum() - 1.0));
  }
  for (const auto& col : column_sum_report(mat)) {
    if (!col.complete) continue;
    ++rep.complete_columns;
    rep.max_column_error = std::max(rep.max_column_error, std::abs(col.sum - 1.0));
  }
  Index q = 1;
  for (std::size_t t = 0; t <= t_max && q <= mat.dim; ++t) {
    double sum = 0.0;
    for (Index n = 0; n < q; ++n) sum += mat.entry(n, 0);
    const double expected = 1.0 - mat.probs.partial_product(t + 1);
    rep.max_column0_error = std::max(rep.max_column0_error, std::abs(sum - expected));
    ++rep.column0_levels;
    q = detail::checked_mul(q, mat.base(t + 1));
  }
  return rep;
}

struct Trajectory {
  std::vector<Index> states;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  std::string algorithm = "mt19937_64";
};

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1p-53;
}

/// Samples one transition by inverting the cumulative row distribution in
/// target order.
inline Index sample_step(const TransitionRow& row, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (const auto& e : row.entries) {
    cumulative += e.probability;
    if (u < cumulative) return e.target;
  }
  return row.entries.back().target;
}

inline Trajectory simulate(const BaseSeq& base, const ProbSeq& probs, Index start, std::uint64_t steps,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Trajectory traj;
  traj.seed = seed;
  traj.steps = steps;
  traj.states.reserve(steps + 1);
  traj.states.push_back(start);
  Index state = start;
  for (std::uint64_t k = 0; k < steps; ++k) {
    state = sample_step(transition_row(state, base, probs), rng);
    traj.states.push_back(state);
  }
  return traj;
}

enum class ChainClass { null_recurrent_like, transient_like };

inline const char* to_string(ChainClass c) {
  return c == ChainClass::null_recurrent_like ? "null_recurrent_like" : "transient_like";
}

inline constexpr double chain_threshold = 1e-9;

/// Recurrent iff prod p_r = 0. The infinite product is evaluated per
/// generator kind; the threshold only guards long explicit prefixes whose
/// product underflows toward zero.
inline ChainClass classify_chain(const ProbSeq& probs, std::size_t depth) {
  if (depth < 1) throw PreconditionError("classification depth must be at least 1");
  return probs.infinite_product() < chain_threshold ? ChainClass::null_recurrent_like
                                                    : ChainClass::transient_like;
}

}  // namespace stochadd
