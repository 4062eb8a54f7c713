// stochadd: command-line front end for the stochastic adding machine toolkit.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "stochadd/cli.hpp"

namespace sc = stochadd::cli;

int main(int argc, char** argv) {
  CLI::App app{"Stochastic adding machines: digits, matrices, Julia sets and spectra"};
  app.require_subcommand(1);
  app.fallthrough();

  sc::RunConfig cfg;
  std::string window_text, resolution_text;
  std::size_t threads = stochadd::default_threads();
  app.add_option("--base", cfg.base, "base sequence, e.g. const:3, periodic:3,5, list:2,3;tail=4, even, fib");
  app.add_option("--probs", cfg.probs, "probability sequence, e.g. pconst:0.7, plist:0.7,1;tail=0.55, pgeo:c=0.25,gamma=0.5");
  app.add_option("--out", cfg.out, "output path ('-' or empty for stdout where supported)");
  app.add_option("--threads", threads, "worker threads for rendering")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "random seed");

  stochadd::Index digits_n = 0;
  auto* digits = app.add_subcommand("digits", "digit expansion, counter and successor of an integer");
  digits->add_option("n", digits_n, "non-negative integer")->required();

  auto* matrix = app.add_subcommand("matrix", "truncated transition matrix in coordinate format");
  matrix->add_option("-n,--states", cfg.n, "number of states N");

  std::string preset;
  auto* render = app.add_subcommand("render", "membership grid as PGM + PBM + metadata");
  render->add_option("--preset", preset, "named configuration (fig3a ... fig10c)");
  render->add_option("--window", window_text, "re_min,re_max,im_min,im_max");
  render->add_option("--resolution", resolution_text, "WIDTHxHEIGHT");
  render->add_option("--depth", cfg.depth, "maximum stage R_max");

  std::size_t root_depth = 4;
  std::size_t cap = stochadd::default_root_cap;
  auto* roots = app.add_subcommand("roots", "point spectrum roots as CSV");
  roots->add_option("--depth", root_depth, "largest stage r_max");
  roots->add_option("--cap", cap, "maximum total number of roots");

  std::string suite = "all";
  auto* verify = app.add_subcommand("verify", "run verification suites");
  verify->add_option("--suite", suite, "stochasticity, renorm, eigenpairs, escape, witness, factorization or all");

  stochadd::Index start = 0;
  std::uint64_t steps = 100;
  auto* simulate = app.add_subcommand("simulate", "Markov trajectory as CSV");
  simulate->add_option("--start", start, "initial state");
  simulate->add_option("--steps", steps, "number of transitions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sc::usage;
  }

  try {
    if (*digits) return sc::cmd_digits(digits_n, cfg.base, std::cout);
    if (*matrix) return sc::cmd_matrix(cfg, std::cout);
    if (*render) {
      if (!preset.empty()) {
        const auto found = stochadd::find_preset(preset);
        if (!found) throw sc::UsageError("unknown preset '" + preset + "'");
        if (app.count("--base") || app.count("--probs")) {
          throw sc::UsageError("--preset cannot be combined with --base or --probs");
        }
        cfg.base = found->base;
        cfg.probs = found->probs;
      }
      if (!window_text.empty()) cfg.window = sc::parse_window(window_text);
      if (!resolution_text.empty()) cfg.resolution = sc::parse_resolution(resolution_text);
      return sc::cmd_render(cfg, threads, std::cout, preset);
    }
    if (*roots) return sc::cmd_roots(cfg, root_depth, cap, std::cout);
    if (*verify) return sc::cmd_verify(cfg, suite, std::cout);
    if (*simulate) return sc::cmd_simulate(cfg, start, steps, std::cout);
  } catch (const stochadd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sc::usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sc::check_failed;
  }
  return sc::usage;
}
