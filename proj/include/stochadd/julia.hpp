#pragma once

// The fibered polynomial system f_r(z) = ((z - (1 - p_r)) / p_r)^{d_r}:
// orbits with the exact bailout |z| > 1, the iota / eigenvector / witness
// sequences and membership grids.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "stochadd/error.hpp"
#include "stochadd/machine.hpp"
#include "stochadd/numeration.hpp"

namespace stochadd {

#if defined(__SIZEOF_FLOAT128__)
using Quad = __float128;
#else
using Quad = long double;
#endif

struct FiberedSystem {
  BaseSeq base;
  ProbSeq probs;
};

/// One stage of the composition in real type T.
template <class T>
struct Stage {
  Index degree;
  T p;
  T inv_p;
  T offset;  // 1 - p
};

namespace detail {

/// Minimal complex arithmetic on (re, im) pairs; avoids the library
/// multiplication's NaN recovery path and works for quad precision.
template <class T>
struct Cx {
  T re;
  T im;
};

template <class T>
inline Cx<T> mul(Cx<T> a, Cx<T> b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

template <class T>
inline Cx<T> ipow(Cx<T> z, Index n) {
  Cx<T> acc{T(1), T(0)};
  while (n > 0) {
    if (n & 1U) acc = mul(acc, z);
    n >>= 1U;
    if (n > 0) z = mul(z, z);
  }
  return acc;
}

template <class T>
inline T norm2(Cx<T> z) {
  return z.re * z.re + z.im * z.im;
}

template <class T>
inline Cx<T> h_stage(const Stage<T>& st, Cx<T> z) {
  return {(z.re - st.offset) * st.inv_p, z.im * st.inv_p};
}

template <class T>
inline Cx<T> f_stage(const Stage<T>& st, Cx<T> z) {
  return ipow(h_stage(st, z), st.degree);
}

}  // namespace detail

/// Stages 1..depth, stopping early where d_r no longer fits in 64 bits
/// (relevant only for fast-growing bases such as Fibonacci).
template <class T = double>
std::vector<Stage<T>> stage_table(const FiberedSystem& sys, std::size_t depth) {
  std::vector<Stage<T>> out;
  out.reserve(depth);
  for (std::size_t r = 1; r <= depth; ++r) {
    Index d = 0;
    try {
      d = sys.base(r);
    } catch (const OverflowError&) {
      break;
    }
    const double p = sys.probs(r);
    out.push_back({d, T(p), T(1) / T(p), T(1) - T(p)});
  }
  return out;
}

/// h_r(z) = (z - (1 - p_r)) / p_r.
inline Complex h_map(const FiberedSystem& sys, std::size_t r, Complex z) {
  if (r < 1) throw PreconditionError("stage index starts at r = 1");
  const double p = sys.probs(r);
  return (z - (1.0 - p)) / p;
}

/// f_r(z) = h_r(z)^{d_r}, by repeated squaring.
inline Complex stage_map(const FiberedSystem& sys, std::size_t r, Complex z) {
  if (r < 1) throw PreconditionError("stage index starts at r = 1");
  const double p = sys.probs(r);
  const Stage<double> st{sys.base(r), p, 1.0 / p, 1.0 - p};
  const auto w = detail::f_stage(st, detail::Cx<double>{z.real(), z.imag()});
  return {w.re, w.im};
}

enum class OrbitStatus { escaped, bounded };

struct OrbitResult {
  OrbitStatus status = OrbitStatus::bounded;
  std::size_t stage = 0;  // r_0 when escaped, else the depth reached
  Complex final_value;
  std::vector<Complex> trace;  // f~_1 .. f~_stage when requested

  bool escaped() const { return status == OrbitStatus::escaped; }
};

/// Escape test over precomputed stages; returns the escape stage or 0.
template <class T>
std::size_t escape_stage(const std::vector<Stage<T>>& stages, std::size_t depth, detail::Cx<T> z, T bailout,
                         detail::Cx<T>* last = nullptr) {
  const T limit = bailout * bailout;
  const std::size_t n = std::min(depth, stages.size());
  for (std::size_t r = 0; r < n; ++r) {
    z = detail::f_stage(stages[r], z);
    if (!(detail::norm2(z) <= limit)) {  // overflow to inf or NaN counts as escape
      if (last) *last = z;
      return r + 1;
    }
  }
  if (last) *last = z;
  return 0;
}

/// Iterates f~_r(lambda) = f_r(f~_{r-1}(lambda)) and stops at the first
/// r with |f~_r| > bailout, or after r_max stages.
inline OrbitResult orbit(const FiberedSystem& sys, Complex lambda, std::size_t r_max, bool keep_trace = false,
                         double bailout = 1.0) {
  if (r_max < 1) throw PreconditionError("orbit depth must be at least 1");
  const auto stages = stage_table<double>(sys, r_max);
  OrbitResult out;
  detail::Cx<double> z{lambda.real(), lambda.imag()};
  const double limit = bailout * bailout;
  for (std::size_t r = 0; r < stages.size(); ++r) {
    z = detail::f_stage(stages[r], z);
    if (keep_trace) out.trace.emplace_back(z.re, z.im);
    if (!(detail::norm2(z) <= limit)) {
      out.status = OrbitStatus::escaped;
      out.stage = r + 1;
      out.final_value = {z.re, z.im};
      return out;
    }
  }
  out.stage = stages.size();
  out.final_value = {z.re, z.im};
  return out;
}

/// iota_lambda(r) = h_r(f~_{r-1}(lambda)), so that f~_r(lambda) = iota^{d_r}.
inline std::vector<Complex> iota_sequence(const FiberedSystem& sys, Complex lambda, std::size_t r_max) {
  std::vector<Complex> out;
  out.reserve(r_max);
  Complex f = lambda;
  for (std::size_t r = 1; r <= r_max; ++r) {
    const Complex h = h_map(sys, r, f);
    out.push_back(h);
    const auto w = detail::ipow(detail::Cx<double>{h.real(), h.imag()}, sys.base(r));
    f = {w.re, w.im};
  }
  return out;
}

inline Complex iota(const FiberedSystem& sys, Complex lambda, std::size_t r) {
  if (r < 1) throw PreconditionError("stage index starts at r = 1");
  return iota_sequence(sys, lambda, r).back();
}

namespace detail {

/// n -> prod_{r <= t} iota(r)^{a_r(n)}, with 0^0 = 1.
inline std::vector<Complex> digit_product(const FiberedSystem& sys, Complex lambda, std::size_t t, Index n_states) {
  if (n_states < 1) throw PreconditionError("vector length must be at least 1");
  std::size_t length = 0;
  for (Index rest = n_states - 1; rest > 0; ++length) rest /= sys.base(length + 1);
  const std::size_t depth = std::min(t, length);
  const std::vector<Complex> io = iota_sequence(sys, lambda, depth);
  std::vector<Index> radix(depth);
  for (std::size_t r = 0; r < depth; ++r) radix[r] = sys.base(r + 1);

  std::vector<Complex> out(n_states);
  for (Index n = 0; n < n_states; ++n) {
    Complex value = 1.0;
    Index rest = n;
    for (std::size_t r = 0; r < depth && rest > 0; ++r) {
      Index a = rest % radix[r];
      rest /= radix[r];
      for (; a > 0; --a) value *= io[r];
    }
    out[n] = value;
  }
  return out;
}

}  // namespace detail

/// v_lambda(n) = prod_r iota(r)^{a_r(n)} for n < N.
inline std::vector<Complex> eigvec(const FiberedSystem& sys, Complex lambda, Index n_states) {
  return detail::digit_product(sys, lambda, std::numeric_limits<std::size_t>::max(), n_states);
}

/// g_{lambda,t}(n): the eigenvector product restricted to digits r <= t.
inline std::vector<Complex> witness(const FiberedSystem& sys, Complex lambda, std::size_t t, Index n_states) {
  if (t < 1) throw PreconditionError("witness depth must be at least 1");
  return detail::digit_product(sys, lambda, t, n_states);
}

struct FactorizationResidual {
  double absolute;
  double relative;  // absolute / max(1, |iota(r) - 1|)
};

/// Residual of iota(r) - 1 = (iota(r-k) - 1) prod_{j=r-k+1}^{r} z_j / p_j,
/// with z_j = sum_{i < d_{j-1}} iota(j-1)^i.
inline FactorizationResidual factorization_check(const FiberedSystem& sys, Complex lambda, std::size_t r,
                                                 std::size_t k) {
  if (k < 1 || k + 1 > r) throw PreconditionError("factorization requires 1 <= k <= r - 1");
  const std::vector<Complex> io = iota_sequence(sys, lambda, r);
  auto at = [&](std::size_t j) { return io[j - 1]; };
  Complex rhs = at(r - k) - 1.0;
  for (std::size_t j = r - k + 1; j <= r; ++j) {
    const Complex x = at(j - 1);
    Complex z = 0.0, power = 1.0;
    for (Index i = 0; i < sys.base(j - 1); ++i) {
      z += power;
      power *= x;
    }
    rhs *= z / sys.probs(j);
  }
  const Complex lhs = at(r) - 1.0;
  const double abs_res = std::abs(lhs - rhs);
  return {abs_res, abs_res / std::max(1.0, std::abs(lhs))};
}

/// Decimal digits needed to certify a depth-R orbit: each stage scales
/// perturbations by at most d_r / p_r while |h_r| <= 1.
inline double certification_digits(const FiberedSystem& sys, std::size_t depth) {
  double digits = 20.0;
  for (std::size_t r = 1; r <= depth; ++r) {
    digits += std::log10(static_cast<double>(sys.base(r)) / sys.probs(r));
  }
  return digits;
}

namespace detail {

// numeric_limits is not specialized for __float128.
template <class T>
constexpr int decimal_digits() {
  if constexpr (std::is_same_v<T, Quad>) {
    return 33;
  } else {
    return std::numeric_limits<T>::digits10;
  }
}

template <class T>
inline Cx<T> divide(Cx<T> a, Cx<T> b) {
  const T den = norm2(b);
  return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
}

/// A d-th root of w in type T: the double-precision root on the requested
/// branch, refined by Newton steps on u^d = w until they stop shrinking.
template <class T>
Cx<T> branch_root(Cx<T> w, Index d, Index branch) {
  if (w.re == T(0) && w.im == T(0)) return w;
  const std::complex<double> approx =
      std::pow(std::complex<double>(static_cast<double>(w.re), static_cast<double>(w.im)), 1.0 / static_cast<double>(d)) *
      std::polar(1.0, 2.0 * 3.14159265358979323846 * static_cast<double>(branch) / static_cast<double>(d));
  Cx<T> u{T(approx.real()), T(approx.imag())};
  const T dd = T(static_cast<double>(d));
  T last_step = T(-1);
  for (int it = 0; it < 64; ++it) {
    const Cx<T> pow_dm1 = ipow(u, d - 1);
    const Cx<T> residual{mul(pow_dm1, u).re - w.re, mul(pow_dm1, u).im - w.im};
    const Cx<T> step = divide(residual, Cx<T>{dd * pow_dm1.re, dd * pow_dm1.im});
    const T size = norm2(step);
    if (last_step >= T(0) && !(size < last_step)) break;
    u = {u.re - step.re, u.im - step.im};
    last_step = size;
    if (size == T(0)) break;
  }
  return u;
}

}  // namespace detail

/// Points of E: a uniform point of the closed unit disk pulled back through
/// stages depth..1 along uniformly chosen root branches. The pullback of
/// the unit disk under f_r is the disk |z - (1 - p_r)| <= p_r, so every
/// intermediate value stays in the unit disk. The computation runs in real
/// type T and each point is certified by the forward bailout-1 test to the
/// full depth in the same type, then rounded to double.
template <class T>
std::vector<Complex> sample_set_points(const FiberedSystem& sys, std::size_t count, std::size_t depth,
                                       std::mt19937_64& rng) {
  if (certification_digits(sys, depth) > static_cast<double>(detail::decimal_digits<T>())) {
    throw PreconditionError("real type too narrow to certify orbits of depth " + std::to_string(depth));
  }
  const auto stages = stage_table<T>(sys, depth);
  if (stages.size() < depth) throw OverflowError("base values exceed 64 bits before the requested depth");

  std::vector<Complex> out;
  out.reserve(count);
  for (std::size_t attempt = 0; out.size() < count; ++attempt) {
    if (attempt > 4 * count + 16) throw Error("backward samples failed forward certification");
    const std::complex<double> start = std::polar(std::sqrt(uniform01(rng)), 2.0 * 3.14159265358979323846 * uniform01(rng));
    detail::Cx<T> w{T(start.real()), T(start.imag())};
    for (std::size_t s = depth; s >= 1; --s) {
      const Stage<T>& st = stages[s - 1];
      const Index branch =
          std::min<Index>(st.degree - 1, static_cast<Index>(uniform01(rng) * static_cast<double>(st.degree)));
      const detail::Cx<T> u = detail::branch_root(w, st.degree, branch);
      w = {st.offset + st.p * u.re, st.p * u.im};
    }
    if (escape_stage<T>(stages, depth, w, T(1)) == 0) {
      out.emplace_back(static_cast<double>(w.re), static_cast<double>(w.im));
    }
  }
  return out;
}

struct Window {
  double re_min = -1.6;
  double re_max = 1.6;
  double im_min = -1.6;
  double im_max = 1.6;

  void validate() const {
    if (!(re_max > re_min) || !(im_max > im_min)) {
      throw PreconditionError("window must have positive area");
    }
  }
};

struct Resolution {
  std::size_t width = 512;
  std::size_t height = 512;
};

struct Pixel {
  std::size_t x;
  std::size_t y;

  bool operator==(const Pixel&) const = default;
};

/// Per-pixel escape stage (0 means bounded up to the depth).
struct MembershipGrid {
  Window window;
  Resolution resolution;
  std::size_t depth = 0;
  std::vector<std::uint32_t> cells;

  double dx() const { return (window.re_max - window.re_min) / static_cast<double>(resolution.width); }
  double dy() const { return (window.im_max - window.im_min) / static_cast<double>(resolution.height); }
  double pixel_diagonal() const { return std::hypot(dx(), dy()); }

  /// Pixel centers, row-major, top row at the largest imaginary part.
  Complex center(std::size_t x, std::size_t y) const {
    return {window.re_min + (static_cast<double>(x) + 0.5) * dx(),
            window.im_max - (static_cast<double>(y) + 0.5) * dy()};
  }

  std::uint32_t stage(std::size_t x, std::size_t y) const { return cells[y * resolution.width + x]; }
  bool bounded(std::size_t x, std::size_t y) const { return stage(x, y) == 0; }

  std::size_t bounded_count() const {
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), 0U));
  }
};

inline std::size_t default_threads() {
  return std::max(1U, std::thread::hardware_concurrency());
}

inline MembershipGrid render(const FiberedSystem& sys, const Window& window, const Resolution& res,
                             std::size_t r_max, std::size_t threads = default_threads()) {
  window.validate();
  if (res.width == 0 || res.height == 0) throw PreconditionError("resolution must be positive");
  if (r_max < 1) throw PreconditionError("render depth must be at least 1");

  MembershipGrid grid{window, res, r_max, std::vector<std::uint32_t>(res.width * res.height)};
  const auto stages = stage_table<double>(sys, r_max);

  auto work = [&](std::size_t first_row, std::size_t stride) {
    for (std::size_t y = first_row; y < res.height; y += stride) {
      for (std::size_t x = 0; x < res.width; ++x) {
        const Complex c = grid.center(x, y);
        grid.cells[y * res.width + x] = static_cast<std::uint32_t>(
            escape_stage<double>(stages, r_max, {c.real(), c.imag()}, 1.0));
      }
    }
  };

  threads = std::max<std::size_t>(1, std::min(threads, res.height));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(work, i, threads);
    for (auto& t : pool) t.join();
  }
  return grid;
}

/// Bounded pixels with at least one escaped 4-neighbor.
inline std::vector<Pixel> boundary_pixels(const MembershipGrid& grid) {
  const std::size_t w = grid.resolution.width, h = grid.resolution.height;
  std::vector<Pixel> out;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!grid.bounded(x, y)) continue;
      const bool edge = (x > 0 && !grid.bounded(x - 1, y)) || (x + 1 < w && !grid.bounded(x + 1, y)) ||
                        (y > 0 && !grid.bounded(x, y - 1)) || (y + 1 < h && !grid.bounded(x, y + 1));
      if (edge) out.push_back({x, y});
    }
  }
  return out;
}

/// Square window around the disk |lambda - (1 - p_1)| <= p_1, which
/// contains the whole set.
inline Window enclosing_window(const FiberedSystem& sys, double margin) {
  const double p = sys.probs(1);
  const double c = 1.0 - p;
  return {c - p - margin, c + p + margin, -p - margin, p + margin};
}

}  // namespace stochadd
