#include "catch_amalgamated.hpp"

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "stochadd/machine.hpp"

using namespace stochadd;

namespace {

using RowMap = std::map<Index, double>;

RowMap as_map(const TransitionRow& row) {
  RowMap m;
  for (const auto& e : row.entries) m[e.target] = e.probability;
  return m;
}

// Row n assembled from the digit operations: successor with probability
// p_1...p_{s_n}, truncation T_s with (1 - p_{s+1}) p_1...p_s, self-loop
// 1 - p_1, dropping zeros.
RowMap oracle_row(Index n, const BaseSeq& base, const ProbSeq& probs) {
  RowMap m;
  const DigitVec dv = to_digits(n, base);
  const std::size_t sn = counter(dv);
  auto prod = [&](std::size_t s) {
    double x = 1.0;
    for (std::size_t r = 1; r <= s; ++r) x *= probs(r);
    return x;
  };
  if (probs(1) < 1.0) m[n] += 1.0 - probs(1);
  m[from_digits(successor(dv))] += prod(sn);
  for (std::size_t s = 1; s + 1 <= sn; ++s) {
    const double p = (1.0 - probs(s + 1)) * prod(s);
    if (p > 0.0) m[from_digits(truncate_digits(dv, s))] += p;
  }
  return m;
}

struct RandomConfig {
  BaseSeq base;
  ProbSeq probs;
};

// Explicit-prefix configurations with d_r <= 6 and p drawn from (0, 1],
// with some probabilities pinned to 1.
RandomConfig random_config(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 5), digit(2, 6), pick(0, 4);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::vector<Index> ds;
  std::vector<double> ps;
  const int depth = len(rng);
  for (int i = 0; i < depth; ++i) {
    ds.push_back(static_cast<Index>(digit(rng)));
    ps.push_back(pick(rng) == 0 ? 1.0 : unit(rng));
  }
  return {BaseSeq::prefix(ds, static_cast<Index>(digit(rng))), ProbSeq::prefix(ps, pick(rng) == 0 ? 1.0 : unit(rng))};
}

}  // namespace

TEST_CASE("transition rows match the displayed base-3 rows") {
  const BaseSeq three = BaseSeq::constant(3);
  const ProbSeq probs = ProbSeq::prefix({0.6, 0.7, 0.8}, 0.9);
  const double p1 = 0.6, p2 = 0.7, p3 = 0.8;

  CHECK(as_map(transition_row(0, three, probs)) == RowMap{{0, 1 - p1}, {1, p1}});
  const RowMap r2 = as_map(transition_row(2, three, probs));
  REQUIRE(r2.size() == 3);
  CHECK(r2.at(0) == Catch::Approx(p1 * (1 - p2)));
  CHECK(r2.at(2) == Catch::Approx(1 - p1));
  CHECK(r2.at(3) == Catch::Approx(p1 * p2));
  const RowMap r8 = as_map(transition_row(8, three, probs));
  REQUIRE(r8.size() == 4);
  CHECK(r8.at(0) == Catch::Approx(p1 * p2 * (1 - p3)));
  CHECK(r8.at(6) == Catch::Approx(p1 * (1 - p2)));
  CHECK(r8.at(8) == Catch::Approx(1 - p1));
  CHECK(r8.at(9) == Catch::Approx(p1 * p2 * p3));
}

TEST_CASE("transition rows agree with the digit-operation oracle") {
  std::mt19937_64 rng(11);
  for (int c = 0; c < 20; ++c) {
    const RandomConfig cfg = random_config(rng);
    INFO(cfg.base.to_string() << ' ' << cfg.probs.to_string());
    for (Index n = 0; n < 3000; ++n) {
      const TransitionRow row = transition_row(n, cfg.base, cfg.probs);
      const RowMap expected = oracle_row(n, cfg.base, cfg.probs);
      REQUIRE(row.entries.size() == expected.size());
      for (std::size_t i = 0; i < row.entries.size(); ++i) {
        if (i > 0) REQUIRE(row.entries[i - 1].target < row.entries[i].target);
        REQUIRE(row.entries[i].probability > 0.0);
        REQUIRE(row.entries[i].probability <= 1.0);
        REQUIRE(std::abs(row.entries[i].probability - expected.at(row.entries[i].target)) < 1e-15);
      }
    }
  }
}

TEST_CASE("zero-probability transitions are omitted") {
  const ProbSeq ones = ProbSeq::constant(1.0);
  const TransitionRow row = transition_row(8, BaseSeq::constant(3), ones);
  REQUIRE(row.entries.size() == 1);
  CHECK(row.entries[0].target == 9);
  CHECK(row.entries[0].probability == 1.0);
}

TEST_CASE("build_matrix") {
  SECTION("deterministic machine") {
    const SparseTransitionMatrix mat = build_matrix(3, BaseSeq::constant(3), ProbSeq::constant(1.0));
    CHECK(as_map(mat.rows[0]) == RowMap{{1, 1.0}});
    CHECK(as_map(mat.rows[1]) == RowMap{{2, 1.0}});
    CHECK(mat.rows[2].entries.empty());
    CHECK(mat.clipped == std::vector<bool>{false, false, true});
  }
  SECTION("row sums below q_2") {
    const SparseTransitionMatrix mat =
        build_matrix(9, BaseSeq::parse("list:2,3;tail=3"), ProbSeq::prefix({0.3, 0.6}, 0.45));
    for (Index n = 0; n < 8; ++n) CHECK(mat.rows[n].sum() == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("dimension guard") {
    CHECK_THROWS_AS(build_matrix(1, BaseSeq::constant(2), ProbSeq::constant(0.5)), PreconditionError);
  }
}

TEST_CASE("row stochasticity over random configurations") {
  std::mt19937_64 rng(5);
  for (int c = 0; c < 20; ++c) {
    const RandomConfig cfg = random_config(rng);
    const Index n = q_product(cfg.base, 5);
    const SparseTransitionMatrix mat = build_matrix(n, cfg.base, cfg.probs);
    double worst = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (i + 1 >= n) CHECK(mat.clipped[i]);
      if (!mat.clipped[i]) worst = std::max(worst, std::abs(mat.rows[i].sum() - 1.0));
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("telescoping identity behind stochasticity") {
  const ProbSeq probs = ProbSeq::geometric(0.6, 0.9);
  for (std::size_t t = 1; t <= 40; ++t) {
    double prefix = 1.0, sum = 1.0 - probs(1);
    for (std::size_t s = 1; s <= t - 1; ++s) {
      prefix *= probs(s);
      sum += (1.0 - probs(s + 1)) * prefix;
    }
    const double top = probs.partial_product(t);
    CHECK(sum + top == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("apply_operator") {
  const SparseTransitionMatrix mat = build_matrix(27, BaseSeq::constant(3), ProbSeq::constant(0.7));
  const OperatorResult ones = apply_operator(mat, std::vector<Complex>(27, 1.0));
  for (Index n = 0; n < 26; ++n) CHECK(std::abs(ones.values[n] - 1.0) < 1e-12);
  CHECK_FALSE(ones.valid[26]);

  const SparseTransitionMatrix two = build_matrix(2, BaseSeq::constant(2), ProbSeq::constant(0.5));
  const OperatorResult r = apply_operator(two, {1.0, -1.0});
  CHECK(std::abs(r.values[0]) < 1e-15);
  CHECK(r.valid[0]);
  CHECK_FALSE(r.valid[1]);

  CHECK_THROWS_AS(apply_operator(two, {1.0}), PreconditionError);
}

TEST_CASE("column sums") {
  std::mt19937_64 rng(9);
  for (int c = 0; c < 10; ++c) {
    const RandomConfig cfg = random_config(rng);
    const Index n = q_product(cfg.base, 5);
    const SparseTransitionMatrix mat = build_matrix(n, cfg.base, cfg.probs);
    const auto report = column_sum_report(mat);
    CHECK_FALSE(report[0].complete);
    std::size_t complete = 0;
    for (const auto& col : report) {
      if (!col.complete) continue;
      ++complete;
      CHECK(std::abs(col.sum - 1.0) <= 1e-12);
    }
    CHECK(complete > n / 2);

    // column 0 over rows [0, q_t): self-loop at 0 plus the fall-backs from
    // rows q_s - 1, s <= t
    Index q = 1;
    for (std::size_t t = 0; t <= 4; ++t) {
      double sum = 0.0;
      for (Index i = 0; i < q; ++i) sum += mat.entry(i, 0);
      double prod = 1.0;
      for (std::size_t r = 1; r <= t + 1; ++r) prod *= cfg.probs(r);
      CHECK(std::abs(sum - (1.0 - prod)) <= 1e-12);
      q *= cfg.base(t + 1);
    }
  }

  SECTION("completeness by explicit contributor enumeration") {
    const BaseSeq base = BaseSeq::parse("list:2,3;tail=4");
    const Index n = 96;
    for (Index m = 1; m < n; ++m) {
      Index largest = m;
      Index q = 1;
      for (std::size_t s = 1; s <= 6; ++s) {
        q *= base(s);
        if (m % q != 0) break;
        largest = m + q - 1;
      }
      CHECK(column_complete(m, n, base) == (largest < n));
    }
  }

  SECTION("deterministic machine never returns to 0") {
    const SparseTransitionMatrix mat = build_matrix(50, BaseSeq::constant(2), ProbSeq::constant(1.0));
    CHECK(column_sum_report(mat)[0].sum == 0.0);
  }
}

TEST_CASE("stochasticity_check summarises the same quantities") {
  const SparseTransitionMatrix mat = build_matrix(243, BaseSeq::constant(3), ProbSeq::prefix({0.4, 0.9}, 0.65));
  const StochasticityReport rep = stochasticity_check(mat, 4);
  CHECK(rep.passed(1e-12));
  CHECK(rep.column0_levels == 5);
  CHECK(rep.complete_columns > 100);
}

TEST_CASE("simulation") {
  SECTION("deterministic successor") {
    const Trajectory t = simulate(BaseSeq::constant(3), ProbSeq::constant(1.0), 0, 5, 1);
    CHECK(t.states == std::vector<Index>{0, 1, 2, 3, 4, 5});
    CHECK(t.algorithm == "mt19937_64");
  }
  SECTION("zero steps") {
    CHECK(simulate(BaseSeq::constant(3), ProbSeq::constant(0.5), 7, 0, 1).states == std::vector<Index>{7});
  }
  SECTION("reproducible and only along positive transitions") {
    const BaseSeq base = BaseSeq::parse("periodic:2,3");
    const ProbSeq probs = ProbSeq::prefix({0.8, 0.6}, 0.9);
    const Trajectory a = simulate(base, probs, 0, 20000, 42);
    const Trajectory b = simulate(base, probs, 0, 20000, 42);
    CHECK(a.states == b.states);
    CHECK(simulate(base, probs, 0, 20000, 43).states != a.states);
    for (std::size_t k = 0; k + 1 < a.states.size(); ++k) {
      const RowMap row = as_map(transition_row(a.states[k], base, probs));
      REQUIRE(row.count(a.states[k + 1]) == 1);
    }
  }
  SECTION("self-loop frequency along a trajectory") {
    const Trajectory t = simulate(BaseSeq::constant(2), ProbSeq::constant(0.5), 0, 100000, 7);
    std::size_t stay = 0;
    for (std::size_t k = 0; k + 1 < t.states.size(); ++k) stay += t.states[k] == t.states[k + 1];
    CHECK(std::abs(static_cast<double>(stay) / 1e5 - 0.5) < 0.01);
  }
  SECTION("one-step frequencies from a fixed state within 3 sigma") {
    const BaseSeq base = BaseSeq::constant(3);
    const ProbSeq probs = ProbSeq::prefix({0.6, 0.7, 0.8}, 0.9);
    const TransitionRow row = transition_row(8, base, probs);
    std::mt19937_64 rng(3);
    std::map<Index, std::size_t> counts;
    constexpr std::size_t samples = 100000;
    for (std::size_t i = 0; i < samples; ++i) ++counts[sample_step(row, rng)];
    for (const auto& e : row.entries) {
      const double sigma = std::sqrt(e.probability * (1 - e.probability) / samples);
      CHECK(std::abs(static_cast<double>(counts[e.target]) / samples - e.probability) <= 3 * sigma);
    }
  }
}

TEST_CASE("chain classification") {
  CHECK(classify_chain(ProbSeq::constant(0.7), 10) == ChainClass::null_recurrent_like);
  CHECK(classify_chain(ProbSeq::constant(1.0), 10) == ChainClass::transient_like);
  CHECK(classify_chain(ProbSeq::parse("pgeo:c=0.25,gamma=0.5"), 10) == ChainClass::transient_like);
  CHECK(classify_chain(ProbSeq::parse("plist:0.8,0.8,0.8;tail=1"), 10) == ChainClass::transient_like);
  CHECK(classify_chain(ProbSeq::parse("plist:0.55,1;tail=0.55"), 10) == ChainClass::null_recurrent_like);
  CHECK_THROWS_AS(classify_chain(ProbSeq::constant(0.5), 0), PreconditionError);
}
