#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "stochadd/spectrum.hpp"

using namespace stochadd;

namespace {

FiberedSystem make(const char* base, const char* probs) { return {BaseSeq::parse(base), ProbSeq::parse(probs)}; }

// f~_r evaluated directly with std::complex.
Complex composed(const FiberedSystem& sys, Complex z, std::size_t r) {
  for (std::size_t s = 1; s <= r; ++s) {
    const double p = sys.probs(s);
    z = std::pow((z - (1.0 - p)) / p, static_cast<int>(sys.base(s)));
  }
  return z;
}

bool contains(const std::vector<Complex>& pts, Complex z, double tol) {
  return std::any_of(pts.begin(), pts.end(), [&](Complex w) { return std::abs(w - z) < tol; });
}

std::vector<Complex> sorted(std::vector<Complex> v) {
  std::sort(v.begin(), v.end(), [](Complex a, Complex b) { return a.real() < b.real(); });
  return v;
}

}  // namespace

TEST_CASE("stage preimages") {
  const FiberedSystem two = make("const:2", "pconst:0.5");
  const std::vector<Complex> pre = sorted(preimage_stage(two, 1, 1.0));
  REQUIRE(pre.size() == 2);
  CHECK(std::abs(pre[0] - 0.0) < 1e-15);
  CHECK(std::abs(pre[1] - 1.0) < 1e-15);

  SECTION("every preimage maps back") {
    for (const FiberedSystem& sys : {make("periodic:3,5", "pconst:0.7"), make("fib", "pgeo:c=0.25,gamma=0.5")}) {
      for (std::size_t r = 1; r <= 4; ++r) {
        for (const Complex w : {Complex(1.0), Complex(0.3, -0.4), Complex(-0.9, 0.1)}) {
          const std::vector<Complex> pre_r = preimage_stage(sys, r, w);
          CHECK(pre_r.size() == sys.base(r));
          for (const Complex z : pre_r) CHECK(std::abs(stage_map(sys, r, z) - w) < 1e-12);
        }
      }
    }
  }
  SECTION("critical value") {
    const std::vector<Complex> pre0 = preimage_stage(make("const:3", "pconst:0.7"), 1, 0.0);
    for (const Complex z : pre0) CHECK(std::abs(z - 0.3) < 1e-15);
  }
  CHECK_THROWS_AS(preimage_stage(two, 0, 1.0), PreconditionError);
}

TEST_CASE("point spectrum examples") {
  const PointSpectrum ps = point_spectrum(make("const:2", "pconst:0.5"), 2);
  REQUIRE(ps.sets.size() == 2);
  CHECK_FALSE(ps.partial);
  const std::vector<Complex> d1 = sorted(ps.sets[0].roots);
  REQUIRE(d1.size() == 2);
  CHECK(std::abs(d1[0]) < 1e-12);
  CHECK(std::abs(d1[1] - 1.0) < 1e-12);
  const std::vector<Complex> d2 = sorted(ps.sets[1].roots);
  REQUIRE(d2.size() == 3);
  CHECK(std::abs(d2[1] - 0.5) < 1e-12);

  SECTION("roots of unity when p = 1") {
    const PointSpectrum unit = point_spectrum(make("const:3", "pconst:1"), 4);
    for (std::size_t r = 1; r <= 4; ++r) {
      const auto& roots = unit.sets[r - 1].roots;
      const std::size_t n = static_cast<std::size_t>(std::pow(3, r));
      CHECK(roots.size() == n);
      for (std::size_t k = 0; k < n; ++k) {
        CHECK(contains(roots, std::polar(1.0, 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n)), 1e-9));
      }
    }
  }
}

TEST_CASE("point spectrum properties") {
  for (const FiberedSystem& sys : {make("const:3", "pconst:0.7"), make("periodic:2,3", "plist:0.6,0.9;tail=0.75"),
                                   make("fib", "pgeo:c=0.25,gamma=0.5"), make("even", "pconst:0.55")}) {
    INFO(sys.base.to_string() << ' ' << sys.probs.to_string());
    const PointSpectrum ps = point_spectrum(sys, 4);
    REQUIRE(ps.sets.size() == 4);
    for (std::size_t r = 1; r <= 4; ++r) {
      const RootSet& set = ps.sets[r - 1];
      CHECK(set.depth == r);
      CHECK(set.roots.size() <= q_product(sys.base, r));
      for (const Complex z : set.roots) CHECK(std::abs(composed(sys, z, r) - 1.0) < 1e-9);
      if (r > 1) {
        for (const Complex z : ps.sets[r - 2].roots) CHECK(contains(set.roots, z, 1e-9));
      }
      // f~_s(z) = 1 for all s >= r, so membership reduces to the first r
      // stages; the final one lands on |f~_r| = 1 and needs a hair of slack
      for (const Complex z : set.roots) CHECK_FALSE(orbit(sys, z, r, false, 1.0 + 1e-9).escaped());
    }
  }
}

TEST_CASE("root cap") {
  const FiberedSystem sys = make("const:3", "pconst:0.7");
  const PointSpectrum ps = point_spectrum(sys, 10, 100);
  CHECK(ps.partial);
  std::size_t total = 0;
  for (const auto& s : ps.sets) total += s.roots.size();
  CHECK(total <= 100);
  CHECK(ps.sets.size() < 10);
  CHECK_THROWS_AS(point_spectrum(sys, 0), PreconditionError);
}

TEST_CASE("eigenpairs at roots") {
  for (const FiberedSystem& sys : {make("const:3", "pconst:0.7"), make("periodic:3,5", "pconst:0.7"),
                                   make("const:2", "pgeo:c=0.25,gamma=0.5")}) {
    const PointSpectrum ps = point_spectrum(sys, 3);
    const Index n = std::min<Index>(q_product(sys.base, 6), 10000);
    for (const auto& set : ps.sets) {
      const EigenpairReport rep = verify_eigenpairs(sys, set, n, 1e-9);
      CHECK(rep.checked == set.roots.size());
      CHECK(rep.passed());
    }
  }
  CHECK_THROWS_AS(verify_eigenpairs(make("const:2", "pconst:0.5"), std::vector<Complex>{1.0}, 1, 1e-9),
                  PreconditionError);
}

TEST_CASE("boundary density") {
  const FiberedSystem unit = make("const:2", "pconst:1");
  const MembershipGrid grid = render(unit, Window{-1.2, 1.2, -1.2, 1.2}, Resolution{256, 256}, 8, 1);
  const PointSpectrum ps = point_spectrum(unit, 6);
  const DensityReport rep = boundary_density(grid, ps.sets);
  CHECK(rep.coverage_fraction == 1.0);
  CHECK(rep.root_count == 2 + 4 + 8 + 16 + 32 + 64);
  // chord between neighboring 64th roots, plus pixel slack
  CHECK(rep.sup_min_dist <= 2.0 * std::sin(M_PI / 64.0) / 2.0 + grid.pixel_diagonal());

  SECTION("a single root far from most of the boundary") {
    const DensityReport one = boundary_density(grid, std::vector<Complex>{1.0});
    CHECK(one.coverage_fraction == 1.0);
    CHECK(one.sup_min_dist == Catch::Approx(2.0).margin(2 * grid.pixel_diagonal()));
  }
  SECTION("roots away from the boundary are not covered") {
    const DensityReport off = boundary_density(grid, std::vector<Complex>{1.0, 0.0});
    CHECK(off.coverage_fraction == 0.5);
  }
  SECTION("guards") {
    const MembershipGrid inside = render(unit, Window{-0.1, 0.1, -0.1, 0.1}, Resolution{16, 16}, 8, 1);
    CHECK_THROWS_AS(boundary_density(inside, ps.sets), PreconditionError);
    CHECK_THROWS_AS(boundary_density(grid, std::vector<Complex>{}), PreconditionError);
  }
}

TEST_CASE("transient limits") {
  SECTION("p = 1") {
    const FiberedSystem sys = make("periodic:2,3", "pconst:1");
    const MembershipGrid grid = render(sys, enclosing_window(sys, 0.05), Resolution{256, 256}, 200, 1);
    const TransientReport rep = transient_limit_check(sys, grid);
    CHECK(rep.lower_bound == Catch::Approx(0.95));
    CHECK(rep.boundary_samples > 0);
    CHECK(rep.interior_samples > 0);
    CHECK(rep.passed());
  }
  SECTION("geometric probabilities") {
    const FiberedSystem sys = make("const:2", "pgeo:c=0.25,gamma=0.5");
    const MembershipGrid grid = render(sys, enclosing_window(sys, 0.05), Resolution{256, 256}, 200, 1);
    const TransientReport rep = transient_limit_check(sys, grid);
    CHECK(rep.lower_bound == Catch::Approx(2.0 * sys.probs.infinite_product() - 1.05));
    CHECK(rep.boundary_passed());
    CHECK(rep.interior_passed());
  }
  SECTION("recurrent configurations are rejected") {
    const FiberedSystem sys = make("const:3", "pconst:0.7");
    const MembershipGrid grid = render(sys, enclosing_window(sys, 0.05), Resolution{16, 16}, 20, 1);
    CHECK_THROWS_AS(transient_limit_check(sys, grid), PreconditionError);
  }
}

TEST_CASE("spectrum classification") {
  ClassifyOptions opt;
  opt.root_depth = 3;
  opt.eigen_states = 1024;
  opt.resolution = {128, 128};
  opt.render_depth = 8;
  opt.threads = 1;

  const SpectrumReport rec = classify_spectrum(make("const:2", "pconst:0.7"), 200, opt);
  CHECK(rec.regime == Regime::recurrent);
  CHECK(rec.claimed == ClaimedSpectrum::filled_set);
  CHECK(std::string(to_string(rec.claimed)) == "E");
  CHECK(rec.evidence.size() == 2);

  const SpectrumReport tr = classify_spectrum(make("const:2", "pconst:1"), 200, opt);
  CHECK(tr.regime == Regime::transient);
  CHECK(tr.claimed == ClaimedSpectrum::boundary);
  CHECK(tr.evidence.size() == 3);
  for (const Evidence& e : tr.evidence) {
    INFO(e.name << ' ' << e.detail);
    CHECK(e.passed);
  }
}
