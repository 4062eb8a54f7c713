#pragma once

// Point spectrum by backward iteration, eigenpair verification, boundary
// density of the roots and the recurrent / transient classification.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "stochadd/detail/text.hpp"
#include "stochadd/error.hpp"
#include "stochadd/julia.hpp"
#include "stochadd/machine.hpp"

namespace stochadd {

/// The d_r solutions of f_r(z) = w: z = (1 - p_r) + p_r * w^{1/d_r} * omega^j,
/// principal root first, then successive d_r-th roots of unity. Each value
/// gets one Newton polish step (skipped at w = 0, a critical value).
inline std::vector<Complex> preimage_stage(const FiberedSystem& sys, std::size_t r, Complex w) {
  if (r < 1) throw PreconditionError("stage index starts at r = 1");
  const Index d = sys.base(r);
  const double p = sys.probs(r);
  const double dd = static_cast<double>(d);
  const Complex principal = std::polar(std::pow(std::abs(w), 1.0 / dd), std::arg(w) / dd);

  std::vector<Complex> out;
  out.reserve(d);
  for (Index j = 0; j < d; ++j) {
    const Complex unit = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) / dd);
    Complex z = (1.0 - p) + p * principal * unit;
    if (w != Complex(0.0)) {
      const Complex h = (z - (1.0 - p)) / p;
      Complex h_pow = 1.0;  // h^{d-1}
      for (Index i = 1; i < d; ++i) h_pow *= h;
      const Complex deriv = dd * h_pow / p;
      const Complex residual = h_pow * h - w;
      if (std::abs(deriv) > 0.0) {
        const Complex polished = z - residual / deriv;
        if (std::abs(stage_map(sys, r, polished) - w) <= std::abs(residual)) z = polished;
      }
    }
    out.push_back(z);
  }
  return out;
}

struct RootSet {
  std::size_t depth = 0;
  std::vector<Complex> roots;
  double dedup_tol = 1e-10;
};

struct PointSpectrum {
  std::vector<RootSet> sets;  // sets[i] has depth i + 1
  bool partial = false;
};

inline constexpr std::size_t default_root_cap = 200000;

namespace detail {

/// Collapses points closer than tol; keeps the first of each cluster in
/// ascending real-part order.
inline std::vector<Complex> dedup(std::vector<Complex> pts, double tol) {
  std::sort(pts.begin(), pts.end(), [](Complex a, Complex b) {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
  });
  std::vector<Complex> kept;
  kept.reserve(pts.size());
  for (const Complex z : pts) {
    bool duplicate = false;
    for (auto it = kept.rbegin(); it != kept.rend() && z.real() - it->real() <= tol; ++it) {
      if (std::abs(z - *it) <= tol) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) kept.push_back(z);
  }
  return kept;
}

/// f~_r(lambda) together with its derivative, by the chain rule.
inline std::pair<Complex, Complex> composed_with_derivative(const FiberedSystem& sys, Complex lambda,
                                                            std::size_t r) {
  Complex f = lambda, df = 1.0;
  for (std::size_t s = 1; s <= r; ++s) {
    const Index d = sys.base(s);
    const double p = sys.probs(s);
    const Complex h = (f - (1.0 - p)) / p;
    Complex h_pow = 1.0;
    for (Index i = 1; i < d; ++i) h_pow *= h;
    df *= static_cast<double>(d) * h_pow / p;
    f = h_pow * h;
  }
  return {f, df};
}

inline Complex newton_refine(const FiberedSystem& sys, Complex lambda, std::size_t r) {
  auto [f, df] = composed_with_derivative(sys, lambda, r);
  double residual = std::abs(f - 1.0);
  for (int step = 0; step < 3 && residual > 0.0; ++step) {
    if (!(std::abs(df) > 0.0)) break;
    const Complex next = lambda - (f - 1.0) / df;
    const auto [f_next, df_next] = composed_with_derivative(sys, next, r);
    const double next_residual = std::abs(f_next - 1.0);
    if (!(next_residual < residual)) break;
    lambda = next;
    f = f_next;
    df = df_next;
    residual = next_residual;
  }
  return lambda;
}

}  // namespace detail

/// RootSets of f~_r^{-1}{1} for r = 1..r_max. Each set is built by pulling
/// 1 back through stages r, r-1, ..., 1, deduplicating after every stage,
/// then Newton-refining on f~_r - 1. Stops with partial = true once the
/// total number of roots would exceed cap.
inline PointSpectrum point_spectrum(const FiberedSystem& sys, std::size_t r_max,
                                    std::size_t cap = default_root_cap) {
  if (r_max < 1) throw PreconditionError("root depth must be at least 1");
  PointSpectrum out;
  std::size_t total = 0;
  constexpr double tol = 1e-10;
  for (std::size_t r = 1; r <= r_max; ++r) {
    std::vector<Complex> level{Complex(1.0)};
    for (std::size_t s = r; s >= 1; --s) {
      std::vector<Complex> next;
      if (level.size() > cap / std::max<Index>(1, sys.base(s)) + 1) {
        out.partial = true;
        return out;
      }
      next.reserve(level.size() * sys.base(s));
      for (const Complex w : level) {
        for (const Complex z : preimage_stage(sys, s, w)) next.push_back(z);
      }
      level = detail::dedup(std::move(next), tol);
    }
    for (auto& z : level) z = detail::newton_refine(sys, z, r);
    level = detail::dedup(std::move(level), tol);
    if (total + level.size() > cap) {
      out.partial = true;
      return out;
    }
    total += level.size();
    out.sets.push_back({r, std::move(level), tol});
  }
  return out;
}

struct EigenpairReport {
  std::size_t checked = 0;
  double max_residual = 0.0;
  Complex worst_lambda;
  double tol = 0.0;

  bool passed() const { return max_residual <= tol; }
};

/// ||(S - lambda I) v_lambda||_inf over the unclipped rows of the
/// N-truncation, for every lambda in the set.
inline EigenpairReport verify_eigenpairs(const FiberedSystem& sys, const std::vector<Complex>& roots, Index n_states,
                                         double tol) {
  if (n_states < 2) throw PreconditionError("truncation size must be at least 2");
  const SparseTransitionMatrix mat = build_matrix(n_states, sys.base, sys.probs);
  EigenpairReport report;
  report.tol = tol;
  for (const Complex lambda : roots) {
    const double res = eigen_residual(mat, eigvec(sys, lambda, n_states), lambda);
    ++report.checked;
    if (!(res <= report.max_residual)) {
      report.max_residual = std::isnan(res) ? std::numeric_limits<double>::infinity() : res;
      report.worst_lambda = lambda;
    }
  }
  return report;
}

inline EigenpairReport verify_eigenpairs(const FiberedSystem& sys, const RootSet& set, Index n_states, double tol) {
  return verify_eigenpairs(sys, set.roots, n_states, tol);
}

struct DensityReport {
  double sup_min_dist = 0.0;      // sup over boundary pixels of the distance to the nearest root
  double coverage_fraction = 0.0;  // roots within 2 pixel diagonals of a boundary pixel
  std::size_t boundary_count = 0;
  std::size_t root_count = 0;
};

namespace detail {

/// Uniform bucket grid over a window for nearest-point queries; points
/// outside the window are kept in a side list and always scanned.
class PointBuckets {
 public:
  PointBuckets(const Window& w, double cell, const std::vector<Complex>& pts) : w_(w), cell_(cell) {
    nx_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((w.re_max - w.re_min) / cell)));
    ny_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((w.im_max - w.im_min) / cell)));
    buckets_.resize(nx_ * ny_);
    for (const Complex z : pts) {
      long bx = 0, by = 0;
      if (locate(z, bx, by)) {
        buckets_[static_cast<std::size_t>(by) * nx_ + static_cast<std::size_t>(bx)].push_back(z);
      } else {
        outside_.push_back(z);
      }
    }
  }

  double nearest(Complex z) const {
    double best = std::numeric_limits<double>::infinity();
    for (const Complex o : outside_) best = std::min(best, std::abs(z - o));
    long bx = 0, by = 0;
    locate_clamped(z, bx, by);
    const long span = static_cast<long>(std::max(nx_, ny_));
    for (long ring = 0; ring <= span; ++ring) {
      // every point in a ring >= k is at least (k - 1) * cell away
      if (ring >= 1 && best <= static_cast<double>(ring - 1) * cell_) break;
      for (long y = by - ring; y <= by + ring; ++y) {
        for (long x = bx - ring; x <= bx + ring; ++x) {
          if (std::max(std::labs(x - bx), std::labs(y - by)) != ring) continue;
          if (x < 0 || y < 0 || x >= static_cast<long>(nx_) || y >= static_cast<long>(ny_)) continue;
          for (const Complex o : buckets_[static_cast<std::size_t>(y) * nx_ + static_cast<std::size_t>(x)]) {
            best = std::min(best, std::abs(z - o));
          }
        }
      }
    }
    return best;
  }

 private:
  bool locate(Complex z, long& bx, long& by) const {
    if (z.real() < w_.re_min || z.real() >= w_.re_max || z.imag() < w_.im_min || z.imag() >= w_.im_max) {
      return false;
    }
    locate_clamped(z, bx, by);
    return true;
  }

  void locate_clamped(Complex z, long& bx, long& by) const {
    bx = std::clamp(static_cast<long>(std::floor((z.real() - w_.re_min) / cell_)), 0L, static_cast<long>(nx_) - 1);
    by = std::clamp(static_cast<long>(std::floor((z.imag() - w_.im_min) / cell_)), 0L, static_cast<long>(ny_) - 1);
  }

  Window w_;
  double cell_;
  std::size_t nx_ = 1, ny_ = 1;
  std::vector<std::vector<Complex>> buckets_;
  std::vector<Complex> outside_;
};

}  // namespace detail

inline DensityReport boundary_density(const MembershipGrid& grid, const std::vector<Complex>& roots) {
  const std::vector<Pixel> boundary = boundary_pixels(grid);
  if (boundary.empty()) throw PreconditionError("grid has no boundary pixels");
  if (roots.empty()) throw PreconditionError("root list is empty");

  DensityReport report;
  report.boundary_count = boundary.size();
  report.root_count = roots.size();

  const double cell = 8.0 * std::max(grid.dx(), grid.dy());
  const detail::PointBuckets root_index(grid.window, cell, roots);
  for (const Pixel& px : boundary) {
    report.sup_min_dist = std::max(report.sup_min_dist, root_index.nearest(grid.center(px.x, px.y)));
  }

  std::vector<Complex> centers;
  centers.reserve(boundary.size());
  for (const Pixel& px : boundary) centers.push_back(grid.center(px.x, px.y));
  const detail::PointBuckets boundary_index(grid.window, cell, centers);
  const double reach = 2.0 * grid.pixel_diagonal();
  std::size_t covered = 0;
  for (const Complex z : roots) {
    if (boundary_index.nearest(z) <= reach) ++covered;
  }
  report.coverage_fraction = static_cast<double>(covered) / static_cast<double>(roots.size());
  return report;
}

inline DensityReport boundary_density(const MembershipGrid& grid, const std::vector<RootSet>& sets) {
  std::vector<Complex> all;
  for (const auto& s : sets) all.insert(all.end(), s.roots.begin(), s.roots.end());
  return boundary_density(grid, all);
}

struct TransientOptions {
  std::size_t samples = 64;
  std::size_t r_probe = 60;
  double delta = 0.05;
  double interior_threshold = 0.1;
  std::size_t interior_margin = 8;   // pixels to the nearest escaped pixel
  std::size_t membership_depth = 200;
  int bisection_steps = 110;
};

struct TransientReport {
  double lower_bound = 0.0;  // 2 prod p_s - 1 - delta
  std::size_t boundary_samples = 0;
  double boundary_min = std::numeric_limits<double>::infinity();
  double boundary_max = 0.0;
  std::size_t interior_samples = 0;
  double interior_max = 0.0;
  double interior_threshold = 0.0;

  bool boundary_passed() const { return boundary_samples > 0 && boundary_min >= lower_bound && boundary_max <= 1.0; }
  bool interior_passed() const { return interior_samples > 0 && interior_max < interior_threshold; }
  bool passed() const { return boundary_passed() && interior_passed(); }
};

namespace detail {

/// |f~_R(lambda)| in quad precision.
inline double quad_modulus(const std::vector<Stage<Quad>>& stages, std::size_t r_probe, Cx<Quad> z) {
  const std::size_t n = std::min(r_probe, stages.size());
  for (std::size_t r = 0; r < n; ++r) z = f_stage(stages[r], z);
  return std::sqrt(static_cast<double>(norm2(z)));
}

/// Chebyshev distance (in pixels, capped at limit) from a bounded pixel to
/// the nearest escaped pixel.
inline std::size_t escape_distance(const MembershipGrid& g, std::size_t x, std::size_t y, std::size_t limit) {
  const long w = static_cast<long>(g.resolution.width), h = static_cast<long>(g.resolution.height);
  for (std::size_t k = 1; k <= limit; ++k) {
    const long rk = static_cast<long>(k);
    for (long yy = static_cast<long>(y) - rk; yy <= static_cast<long>(y) + rk; ++yy) {
      for (long xx = static_cast<long>(x) - rk; xx <= static_cast<long>(x) + rk; ++xx) {
        if (xx < 0 || yy < 0 || xx >= w || yy >= h) return k;  // the window edge counts as unknown
        if (!g.bounded(static_cast<std::size_t>(xx), static_cast<std::size_t>(yy))) return k;
      }
    }
  }
  return limit + 1;
}

}  // namespace detail

/// Transient regime: near-boundary samples must satisfy
/// 2 prod p_s - 1 - delta <= |f~_R(lambda)| <= 1, deep-interior samples
/// |f~_R(lambda)| < threshold. Boundary samples are located by bisection
/// in quad precision between a bounded pixel center and an escaped
/// neighbor, because the probe depth amplifies any offset from the
/// boundary by the derivative of f~_R.
inline TransientReport transient_limit_check(const FiberedSystem& sys, const MembershipGrid& grid,
                                             const TransientOptions& opt = {}) {
  if (classify_chain(sys.probs, 1) != ChainClass::transient_like) {
    throw PreconditionError("transient limit check needs a transient configuration (prod p_r > 0)");
  }
  TransientReport report;
  report.lower_bound = 2.0 * sys.probs.infinite_product() - 1.0 - opt.delta;
  report.interior_threshold = opt.interior_threshold;

  const auto quad_stages = stage_table<Quad>(sys, std::max(opt.membership_depth, opt.r_probe));
  const auto dbl_stages = stage_table<double>(sys, opt.r_probe);

  // boundary samples, evenly strided through the boundary pixel list
  const std::vector<Pixel> boundary = boundary_pixels(grid);
  const std::size_t w = grid.resolution.width, h = grid.resolution.height;
  const std::size_t stride = std::max<std::size_t>(1, boundary.size() / std::max<std::size_t>(1, opt.samples));
  for (std::size_t i = 0; i < boundary.size() && report.boundary_samples < opt.samples; i += stride) {
    const Pixel px = boundary[i];
    Pixel out = px;
    if (px.x > 0 && !grid.bounded(px.x - 1, px.y)) out = {px.x - 1, px.y};
    else if (px.x + 1 < w && !grid.bounded(px.x + 1, px.y)) out = {px.x + 1, px.y};
    else if (px.y > 0 && !grid.bounded(px.x, px.y - 1)) out = {px.x, px.y - 1};
    else if (px.y + 1 < h) out = {px.x, px.y + 1};

    const Complex a = grid.center(px.x, px.y), b = grid.center(out.x, out.y);
    detail::Cx<Quad> in{Quad(a.real()), Quad(a.imag())}, ex{Quad(b.real()), Quad(b.imag())};
    if (escape_stage<Quad>(quad_stages, opt.membership_depth, in, Quad(1)) != 0) continue;
    if (escape_stage<Quad>(quad_stages, opt.membership_depth, ex, Quad(1)) == 0) continue;
    for (int step = 0; step < opt.bisection_steps; ++step) {
      const detail::Cx<Quad> mid{(in.re + ex.re) / 2, (in.im + ex.im) / 2};
      if (escape_stage<Quad>(quad_stages, opt.membership_depth, mid, Quad(1)) == 0) in = mid;
      else ex = mid;
    }
    const double modulus = detail::quad_modulus(quad_stages, opt.r_probe, in);
    ++report.boundary_samples;
    report.boundary_min = std::min(report.boundary_min, modulus);
    report.boundary_max = std::max(report.boundary_max, modulus);
  }

  // deep-interior samples
  std::vector<Pixel> interior;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (grid.bounded(x, y) && detail::escape_distance(grid, x, y, opt.interior_margin) > opt.interior_margin) {
        interior.push_back({x, y});
      }
    }
  }
  const std::size_t istride = std::max<std::size_t>(1, interior.size() / std::max<std::size_t>(1, opt.samples));
  for (std::size_t i = 0; i < interior.size() && report.interior_samples < opt.samples; i += istride) {
    const Complex c = grid.center(interior[i].x, interior[i].y);
    detail::Cx<double> z{c.real(), c.imag()};
    for (std::size_t r = 0; r < std::min(opt.r_probe, dbl_stages.size()); ++r) z = detail::f_stage(dbl_stages[r], z);
    ++report.interior_samples;
    report.interior_max = std::max(report.interior_max, std::sqrt(detail::norm2(z)));
  }
  return report;
}

enum class Regime { recurrent, transient };
enum class ClaimedSpectrum { filled_set, boundary };

inline const char* to_string(Regime r) { return r == Regime::recurrent ? "recurrent" : "transient"; }
inline const char* to_string(ClaimedSpectrum c) { return c == ClaimedSpectrum::filled_set ? "E" : "boundary_of_E"; }

struct Evidence {
  std::string name;
  bool passed;
  std::string detail;
};

struct SpectrumReport {
  Regime regime;
  ClaimedSpectrum claimed;
  std::vector<Evidence> evidence;

  bool passed() const {
    return std::all_of(evidence.begin(), evidence.end(), [](const Evidence& e) { return e.passed; });
  }
};

struct ClassifyOptions {
  std::size_t root_depth = 4;
  Index eigen_states = 4096;
  double eigen_tol = 1e-9;
  Resolution resolution{256, 256};
  std::size_t render_depth = 200;
  std::size_t threads = default_threads();
};

/// Regime from the infinite product; the spectrum is E in the recurrent
/// regime and its boundary in the transient one. Evidence: eigenpair
/// residuals and root density always, transient limits when transient.
inline SpectrumReport classify_spectrum(const FiberedSystem& sys, std::size_t depth, const ClassifyOptions& opt = {}) {
  const ChainClass chain = classify_chain(sys.probs, depth);
  SpectrumReport report{chain == ChainClass::null_recurrent_like ? Regime::recurrent : Regime::transient,
                        chain == ChainClass::null_recurrent_like ? ClaimedSpectrum::filled_set
                                                                 : ClaimedSpectrum::boundary,
                        {}};

  const PointSpectrum ps = point_spectrum(sys, std::min(depth, opt.root_depth));
  std::vector<Complex> roots;
  for (const auto& s : ps.sets) roots.insert(roots.end(), s.roots.begin(), s.roots.end());

  const EigenpairReport eig = verify_eigenpairs(sys, roots, opt.eigen_states, opt.eigen_tol);
  report.evidence.push_back({"eigenpairs", eig.passed(),
                             "checked=" + std::to_string(eig.checked) + " max_residual=" +
                                 detail::sig17(eig.max_residual)});

  const MembershipGrid grid = render(sys, enclosing_window(sys, 0.05), opt.resolution, opt.render_depth, opt.threads);
  try {
    const DensityReport dens = boundary_density(grid, roots);
    report.evidence.push_back({"boundary_density", dens.coverage_fraction == 1.0,
                               "sup_min_dist=" + detail::sig17(dens.sup_min_dist) +
                                   " coverage=" + detail::sig17(dens.coverage_fraction)});
  } catch (const PreconditionError& e) {
    report.evidence.push_back({"boundary_density", false, e.what()});
  }

  if (report.regime == Regime::transient) {
    const TransientReport tr = transient_limit_check(sys, grid);
    report.evidence.push_back({"transient_limits", tr.passed(),
                               "boundary=[" + detail::sig17(tr.boundary_min) + "," + detail::sig17(tr.boundary_max) +
                                   "] interior_max=" + detail::sig17(tr.interior_max)});
  }
  return report;
}

}  // namespace stochadd
