#pragma once

// Subcommand implementations behind the stochadd executable. Each command
// writes its report to a stream and returns the process exit code, so the
// commands run unchanged in tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stochadd/detail/text.hpp"
#include "stochadd/error.hpp"
#include "stochadd/io.hpp"
#include "stochadd/julia.hpp"
#include "stochadd/multiprecision.hpp"
#include "stochadd/machine.hpp"
#include "stochadd/numeration.hpp"
#include "stochadd/presets.hpp"
#include "stochadd/renormalization.hpp"
#include "stochadd/spectrum.hpp"

namespace stochadd::cli {

enum ExitCode : int { ok = 0, check_failed = 1, usage = 2 };

class UsageError : public Error {
 public:
  using Error::Error;
};

/// Everything a run depends on, in a flat key=value form that doubles as
/// the metadata sidecar of rendered images.
struct RunConfig {
  std::string base = "const:2";
  std::string probs = "pconst:0.5";
  Window window;
  Resolution resolution;
  std::size_t depth = 200;
  Index n = 10;
  std::uint64_t seed = 0;
  std::string out;

  FiberedSystem system() const { return {BaseSeq::parse(base), ProbSeq::parse(probs)}; }

  /// Canonical text: fixed key order, sequences in canonical spelling,
  /// reals in shortest round-trip form.
  std::string format() const {
    std::ostringstream os;
    write_metadata(os, metadata());
    return os.str();
  }

  Metadata metadata() const {
    return {{"base", BaseSeq::parse(base).to_string()},
            {"probs", ProbSeq::parse(probs).to_string()},
            {"window", detail::shortest(window.re_min) + "," + detail::shortest(window.re_max) + "," +
                           detail::shortest(window.im_min) + "," + detail::shortest(window.im_max)},
            {"resolution", std::to_string(resolution.width) + "x" + std::to_string(resolution.height)},
            {"depth", std::to_string(depth)},
            {"n", std::to_string(n)},
            {"seed", std::to_string(seed)},
            {"out", out}};
  }

  bool operator==(const RunConfig& o) const { return format() == o.format(); }
};

inline Window parse_window(std::string_view text) {
  detail::Scanner in(text);
  Window w;
  w.re_min = in.real();
  in.expect(",");
  w.re_max = in.real();
  in.expect(",");
  w.im_min = in.real();
  in.expect(",");
  w.im_max = in.real();
  in.finish();
  return w;
}

inline Resolution parse_resolution(std::string_view text) {
  detail::Scanner in(text);
  Resolution r;
  r.width = static_cast<std::size_t>(in.integer());
  in.expect("x");
  r.height = static_cast<std::size_t>(in.integer());
  in.finish();
  return r;
}

/// Parses whitespace-separated key=value pairs; absent keys keep their
/// defaults. Error positions refer to the whole input.
inline RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  std::size_t pos = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; };
  while (pos < text.size()) {
    if (is_space(text[pos])) {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < text.size() && !is_space(text[end])) ++end;
    const std::string_view token = text.substr(pos, end - pos);
    const std::size_t eq = token.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", pos);
    const std::string_view key = token.substr(0, eq);
    const std::string_view value = token.substr(eq + 1);
    const std::size_t at = pos + eq + 1;
    if (key != "base" && key != "probs" && key != "window" && key != "resolution" && key != "depth" &&
        key != "n" && key != "seed" && key != "out") {
      throw ParseError("unknown key '" + std::string(key) + "'", pos);
    }
    try {
      if (key == "base") {
        cfg.base = BaseSeq::parse(value).to_string();
      } else if (key == "probs") {
        cfg.probs = ProbSeq::parse(value).to_string();
      } else if (key == "window") {
        cfg.window = parse_window(value);
      } else if (key == "resolution") {
        cfg.resolution = parse_resolution(value);
      } else if (key == "out") {
        cfg.out = std::string(value);
      } else {
        detail::Scanner in(value);
        const std::uint64_t v = in.integer();
        in.finish();
        if (key == "depth") cfg.depth = static_cast<std::size_t>(v);
        else if (key == "n") cfg.n = v;
        else cfg.seed = v;
      }
    } catch (const ParseError& e) {
      throw ParseError(std::string(key) + ": " + e.reason(), at + e.position());
    }
    pos = end;
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// digits

inline int cmd_digits(Index n, const std::string& base_text, std::ostream& out) {
  const BaseSeq base = BaseSeq::parse(base_text);
  const DigitVec dv = to_digits(n, base);
  out << "digits=" << detail::join(dv.digits()) << " counter=" << counter(dv)
      << " succ=" << from_digits(successor(dv)) << '\n';
  return ok;
}

// ---------------------------------------------------------------------------
// matrix

inline int cmd_matrix(const RunConfig& cfg, std::ostream& out) {
  const FiberedSystem sys = cfg.system();
  const SparseTransitionMatrix mat = build_matrix(cfg.n, sys.base, sys.probs);
  if (cfg.out.empty() || cfg.out == "-") {
    write_matrix(out, mat);
  } else {
    auto file = open_output(cfg.out);
    write_matrix(file, mat);
  }
  const StochasticityReport rep = stochasticity_check(mat, 64);
  const bool pass = rep.max_row_error <= 1e-12;
  out << "% row_sum_max_error=" << detail::sig17(rep.max_row_error)
      << " complete_columns=" << rep.complete_columns
      << " column_sum_max_error=" << detail::sig17(rep.max_column_error)
      << " status=" << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? ok : check_failed;
}

// ---------------------------------------------------------------------------
// render

inline std::string replace_extension(const std::string& path, const std::string& ext) {
  const std::size_t slash = path.find_last_of('/');
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + ext;
  return path.substr(0, dot) + ext;
}

/// Writes <out>.pgm (escape stages), <out>.pbm (membership mask) and
/// <out>.meta (the run configuration).
inline int cmd_render(const RunConfig& cfg, std::size_t threads, std::ostream& out,
                      const std::string& preset = {}) {
  const FiberedSystem sys = cfg.system();
  const MembershipGrid grid = render(sys, cfg.window, cfg.resolution, cfg.depth, threads);
  const std::string stem = cfg.out.empty() ? (preset.empty() ? "render" : preset) : cfg.out;
  const std::string pgm = replace_extension(stem, ".pgm");
  const std::string pbm = replace_extension(stem, ".pbm");
  const std::string meta = replace_extension(stem, ".meta");
  {
    auto f = open_output(pgm, true);
    write_pgm(f, grid);
  }
  {
    auto f = open_output(pbm, true);
    write_pbm(f, grid);
  }
  {
    auto f = open_output(meta);
    Metadata md = cfg.metadata();
    if (!preset.empty()) md.emplace_back("preset", preset);
    md.emplace_back("bounded_pixels", std::to_string(grid.bounded_count()));
    write_metadata(f, md);
  }
  out << "wrote " << pgm << ' ' << pbm << ' ' << meta << " bounded=" << grid.bounded_count() << '\n';
  return ok;
}

// ---------------------------------------------------------------------------
// roots

inline int cmd_roots(const RunConfig& cfg, std::size_t r_max, std::size_t cap, std::ostream& out) {
  const PointSpectrum ps = point_spectrum(cfg.system(), r_max, cap);
  if (cfg.out.empty() || cfg.out == "-") {
    write_roots_csv(out, ps);
  } else {
    auto f = open_output(cfg.out);
    write_roots_csv(f, ps);
  }
  return ok;
}

// ---------------------------------------------------------------------------
// simulate

inline int cmd_simulate(const RunConfig& cfg, Index start, std::uint64_t steps, std::ostream& out) {
  const FiberedSystem sys = cfg.system();
  const Trajectory traj = simulate(sys.base, sys.probs, start, steps, cfg.seed);
  if (cfg.out.empty() || cfg.out == "-") {
    write_trajectory_csv(out, traj);
  } else {
    auto f = open_output(cfg.out);
    write_trajectory_csv(f, traj);
  }
  return ok;
}

// ---------------------------------------------------------------------------
// verify

struct Check {
  std::string name;
  bool passed;
  std::string detail;
};

namespace suites {

/// min(q_t, limit) without overflowing.
inline Index capped_q(const BaseSeq& base, std::size_t t, Index limit) {
  Index q = 1;
  for (std::size_t r = 1; r <= t; ++r) {
    const Index d = base(r);
    if (q > limit / d) return limit;
    q *= d;
  }
  return std::min(q, limit);
}

inline Complex random_point(std::mt19937_64& rng, double lo, double hi) {
  return {lo + (hi - lo) * uniform01(rng), lo + (hi - lo) * uniform01(rng)};
}

inline std::vector<Check> stochasticity(const RunConfig& cfg) {
  std::vector<std::pair<std::string, FiberedSystem>> configs;
  for (const char* name : {"fig3a", "fig4b", "fig6a", "fig8a", "fig10a"}) {
    const Preset p = *find_preset(name);
    configs.push_back({name, {BaseSeq::parse(p.base), ProbSeq::parse(p.probs)}});
  }
  configs.push_back({"config", cfg.system()});
  std::vector<Check> out;
  for (const auto& [name, sys] : configs) {
    const Index n = std::max<Index>(2, capped_q(sys.base, 5, 10000));
    const StochasticityReport rep = stochasticity_check(build_matrix(n, sys.base, sys.probs), 4);
    out.push_back({"stochasticity:" + name, rep.passed(1e-12),
                   "N=" + std::to_string(n) + " row=" + detail::sig17(rep.max_row_error) +
                       " column=" + detail::sig17(rep.max_column_error) +
                       " column0=" + detail::sig17(rep.max_column0_error)});
  }
  return out;
}

inline std::vector<Check> renorm(const RunConfig& cfg) {
  const FiberedSystem sys = cfg.system();
  std::vector<Check> out;
  for (std::size_t r = 1; r <= 2; ++r) {
    const RenormReport rep = renorm_check(r, 27, sys.base, sys.probs);
    out.push_back({"renorm:r=" + std::to_string(r), rep.worst() < 1e-12,
                   "part2=" + detail::sig17(rep.part2_max_diff) + " worst=" + detail::sig17(rep.worst())});
  }
  return out;
}

inline std::vector<Check> eigenpairs(const RunConfig& cfg) {
  const FiberedSystem sys = cfg.system();
  const PointSpectrum ps = point_spectrum(sys, 4);
  std::vector<Complex> roots;
  for (const auto& s : ps.sets) roots.insert(roots.end(), s.roots.begin(), s.roots.end());
  const Index n = std::max<Index>(2, capped_q(sys.base, 8, 10000));
  const EigenpairReport rep = verify_eigenpairs(sys, roots, n, 1e-9);
  return {{"eigenpairs", rep.passed(),
           "roots=" + std::to_string(rep.checked) + " N=" + std::to_string(n) +
               " max_residual=" + detail::sig17(rep.max_residual)}};
}

inline std::vector<Check> escape(const RunConfig& cfg) {
  const FiberedSystem sys = cfg.system();
  std::mt19937_64 rng(cfg.seed);
  std::size_t disagree = 0;
  constexpr std::size_t samples = 10000;
  for (std::size_t i = 0; i < samples; ++i) {
    const Complex lambda = random_point(rng, -2.0, 2.0);
    const bool exact = orbit(sys, lambda, cfg.depth).escaped();
    const bool reference = orbit(sys, lambda, 3 * cfg.depth, false, 1e6).escaped();
    if (exact != reference) ++disagree;
  }
  return {{"escape", disagree == 0, "samples=" + std::to_string(samples) + " disagreements=" + std::to_string(disagree)}};
}

/// Points of E for witness checks: backward samples certified in wide
/// precision, or rejection samples topped up with roots when the depth is
/// beyond what the wide type can certify.
inline std::vector<Complex> points_in_set(const FiberedSystem& sys, std::size_t count, std::mt19937_64& rng,
                                          std::size_t depth) {
  try {
    return sample_set_points<Wide>(sys, count, depth, rng);
  } catch (const Error&) {
  }
  std::vector<Complex> pts;
  const double p = sys.probs(1);
  for (std::size_t attempt = 0; attempt < 200 * count && pts.size() < count; ++attempt) {
    const Complex lambda = (1.0 - p) + p * random_point(rng, -1.0, 1.0);
    if (!orbit(sys, lambda, depth).escaped()) pts.push_back(lambda);
  }
  if (pts.size() < count) {
    const PointSpectrum ps = point_spectrum(sys, 3);
    for (const auto& z : ps.sets.back().roots) {
      if (pts.size() >= count) break;
      pts.push_back(z);
    }
  }
  return pts;
}

inline std::vector<Check> witness(const RunConfig& cfg) {
  const FiberedSystem sys = cfg.system();
  std::mt19937_64 rng(cfg.seed);
  const Index n = std::max<Index>(2, capped_q(sys.base, 7, 10000));
  const SparseTransitionMatrix mat = build_matrix(n, sys.base, sys.probs);
  double worst_excess = -1.0;
  for (const Complex lambda : points_in_set(sys, 20, rng, cfg.depth)) {
    for (std::size_t t = 1; t <= 6; ++t) {
      const double bound = 3.0 * sys.probs.partial_product(t);
      const double res = eigen_residual(mat, stochadd::witness(sys, lambda, t, n), lambda);
      worst_excess = std::max(worst_excess, res - bound);
    }
  }
  return {{"witness", worst_excess <= 1e-12, "N=" + std::to_string(n) + " max(residual-bound)=" + detail::sig17(worst_excess)}};
}

inline std::vector<Check> factorization(const RunConfig& cfg) {
  const FiberedSystem sys = cfg.system();
  std::mt19937_64 rng(cfg.seed);
  double worst = 0.0;
  std::size_t done = 0;
  while (done < 1000) {
    Complex lambda = random_point(rng, -1.0, 1.0);
    if (std::abs(lambda) > 1.0) continue;
    const std::size_t r = 2 + static_cast<std::size_t>(uniform01(rng) * 11.0);
    const std::size_t k = 1 + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(r - 1));
    const FactorizationResidual res = factorization_check(sys, lambda, r, k);
    if (!std::isfinite(res.relative)) continue;
    worst = std::max(worst, res.relative);
    ++done;
  }
  return {{"factorization", worst < 1e-9, "cases=1000 max_relative_residual=" + detail::sig17(worst)}};
}

}  // namespace suites

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"stochasticity", "renorm",  "eigenpairs",   "escape",
                                                 "witness",       "factorization", "all"};
  return names;
}

inline int cmd_verify(const RunConfig& cfg, const std::string& suite, std::ostream& out) {
  std::vector<Check> checks;
  auto run = [&](const std::string& name, auto fn) {
    if (suite == name || suite == "all") {
      for (auto& c : fn(cfg)) checks.push_back(std::move(c));
    }
  };
  if (std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end()) {
    throw UsageError("unknown suite '" + suite + "'");
  }
  run("stochasticity", suites::stochasticity);
  run("renorm", suites::renorm);
  run("eigenpairs", suites::eigenpairs);
  run("escape", suites::escape);
  run("witness", suites::witness);
  run("factorization", suites::factorization);

  bool all_passed = true;
  for (const auto& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ' ' << c.detail << '\n';
    all_passed = all_passed && c.passed;
  }
  out << "overall=" << (all_passed ? "PASS" : "FAIL") << '\n';
  return all_passed ? ok : check_failed;
}

}  // namespace stochadd::cli
