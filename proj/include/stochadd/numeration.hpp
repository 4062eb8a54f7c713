#pragma once

// Cantor (mixed-radix) numeration: base and probability sequences, digit
// expansions, counters, the successor map and truncations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stochadd/detail/text.hpp"
#include "stochadd/error.hpp"

namespace stochadd {

using Index = std::uint64_t;

namespace detail {

inline Index checked_mul(Index a, Index b) {
  Index out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw OverflowError("64-bit multiplication overflow");
  return out;
}

inline Index checked_add(Index a, Index b) {
  Index out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw OverflowError("64-bit addition overflow");
  return out;
}

inline std::string shift_suffix(std::size_t shift) {
  return shift == 0 ? std::string{} : ";shift=" + std::to_string(shift);
}

inline std::size_t parse_shift(Scanner& in) {
  if (in.consume(";shift=")) return static_cast<std::size_t>(in.integer());
  return 0;
}

}  // namespace detail

/// The integer base sequence (d_r), r >= 1, each d_r >= 2.
///
/// A closed set of generators so that every sequence has a textual form:
/// `const:3`, `periodic:3,5`, `list:2,3,4;tail=4`, `even` (d_r = 2r) and
/// `fib` (2, 3, 5, 8, ...). `shifted(k)` yields (d_{k+1}, d_{k+2}, ...),
/// written with a `;shift=k` suffix.
class BaseSeq {
 public:
  enum class Kind { constant, periodic, prefix, even, fibonacci };

  static BaseSeq constant(Index d) { return BaseSeq(Kind::constant, {}, d); }
  static BaseSeq periodic(std::vector<Index> period) {
    if (period.empty()) throw PreconditionError("periodic base needs at least one value");
    return BaseSeq(Kind::periodic, std::move(period), 0);
  }
  static BaseSeq prefix(std::vector<Index> head, Index tail) {
    return BaseSeq(Kind::prefix, std::move(head), tail);
  }
  static BaseSeq even() { return BaseSeq(Kind::even, {}, 0); }
  static BaseSeq fibonacci() { return BaseSeq(Kind::fibonacci, {}, 0); }

  static BaseSeq parse(std::string_view text) {
    detail::Scanner in(text);
    BaseSeq out = [&] {
      if (in.consume("const:")) return constant(in.integer());
      if (in.consume("periodic:")) return periodic(in.integer_list());
      if (in.consume("list:")) {
        auto head = in.integer_list();
        in.expect(";tail=");
        return prefix(std::move(head), in.integer());
      }
      if (in.consume("even")) return even();
      if (in.consume("fib")) return fibonacci();
      throw ParseError("unknown base kind (const, periodic, list, even, fib)", 0);
    }();
    out.shift_ = detail::parse_shift(in);
    in.finish();
    return out;
  }

  Kind kind() const { return kind_; }
  std::size_t shift() const { return shift_; }

  /// d_r for r >= 1.
  Index operator()(std::size_t r) const {
    if (r == 0) throw PreconditionError("base index starts at r = 1");
    const std::size_t i = r + shift_;
    switch (kind_) {
      case Kind::constant:
        return tail_;
      case Kind::periodic:
        return values_[(i - 1) % values_.size()];
      case Kind::prefix:
        return i <= values_.size() ? values_[i - 1] : tail_;
      case Kind::even:
        return detail::checked_mul(2, i);
      case Kind::fibonacci: {
        Index a = 1, b = 2;  // d_0 = 1, d_1 = 2
        for (std::size_t k = 1; k < i; ++k) b = detail::checked_add(a, b), a = b - a;
        return b;
      }
    }
    return 0;
  }

  BaseSeq shifted(std::size_t k) const {
    BaseSeq out = *this;
    out.shift_ += k;
    return out;
  }

  std::string to_string() const {
    std::string body;
    switch (kind_) {
      case Kind::constant: body = "const:" + std::to_string(tail_); break;
      case Kind::periodic: body = "periodic:" + detail::join(values_); break;
      case Kind::prefix:
        body = "list:" + detail::join(values_) + ";tail=" + std::to_string(tail_);
        break;
      case Kind::even: body = "even"; break;
      case Kind::fibonacci: body = "fib"; break;
    }
    return body + detail::shift_suffix(shift_);
  }

  bool operator==(const BaseSeq&) const = default;

 private:
  BaseSeq(Kind kind, std::vector<Index> values, Index tail)
      : kind_(kind), values_(std::move(values)), tail_(tail) {
    if (kind_ == Kind::prefix && values_.empty()) {
      throw PreconditionError("list base needs at least one explicit value");
    }
    for (Index v : values_) {
      if (v < 2) throw PreconditionError("every base value must be >= 2");
    }
    if ((kind_ == Kind::constant || kind_ == Kind::prefix) && tail_ < 2) {
      throw PreconditionError("every base value must be >= 2");
    }
  }

  Kind kind_;
  std::vector<Index> values_;
  Index tail_;
  std::size_t shift_ = 0;
};

/// The probability sequence (p_r), r >= 1, each p_r in (0, 1].
///
/// Text forms: `pconst:0.7`, `plist:0.7,1,0.5;tail=0.55` and
/// `pgeo:c=0.25,gamma=0.5` (p_r = 1 - c * gamma^r).
class ProbSeq {
 public:
  enum class Kind { constant, prefix, geometric };

  static ProbSeq constant(double p) { return ProbSeq(Kind::constant, {}, p, 0, 0); }
  static ProbSeq prefix(std::vector<double> head, double tail) {
    return ProbSeq(Kind::prefix, std::move(head), tail, 0, 0);
  }
  static ProbSeq geometric(double c, double gamma) {
    return ProbSeq(Kind::geometric, {}, 1.0, c, gamma);
  }

  static ProbSeq parse(std::string_view text) {
    detail::Scanner in(text);
    ProbSeq out = [&] {
      if (in.consume("pconst:")) return constant(in.real());
      if (in.consume("plist:")) {
        auto head = in.real_list();
        in.expect(";tail=");
        return prefix(std::move(head), in.real());
      }
      if (in.consume("pgeo:")) {
        in.expect("c=");
        const double c = in.real();
        in.expect(",gamma=");
        return geometric(c, in.real());
      }
      throw ParseError("unknown probability kind (pconst, plist, pgeo)", 0);
    }();
    out.shift_ = detail::parse_shift(in);
    in.finish();
    return out;
  }

  Kind kind() const { return kind_; }
  std::size_t shift() const { return shift_; }

  /// p_r for r >= 1.
  double operator()(std::size_t r) const {
    if (r == 0) throw PreconditionError("probability index starts at r = 1");
    const std::size_t i = r + shift_;
    switch (kind_) {
      case Kind::constant:
        return tail_;
      case Kind::prefix:
        return i <= values_.size() ? values_[i - 1] : tail_;
      case Kind::geometric:
        return 1.0 - c_ * std::pow(gamma_, static_cast<double>(i));
    }
    return 0;
  }

  ProbSeq shifted(std::size_t k) const {
    ProbSeq out = *this;
    out.shift_ += k;
    return out;
  }

  /// p_first * ... * p_last (empty product is 1).
  double product(std::size_t first, std::size_t last) const {
    double out = 1.0;
    for (std::size_t r = first; r <= last; ++r) out *= (*this)(r);
    return out;
  }

  double partial_product(std::size_t t) const { return product(1, t); }

  /// prod_{r >= from} p_r, evaluated per generator kind rather than by
  /// truncating the product at some depth.
  double infinite_product(std::size_t from = 1) const {
    const std::size_t start = from + shift_;
    switch (kind_) {
      case Kind::constant:
        return tail_ < 1.0 ? 0.0 : 1.0;
      case Kind::prefix: {
        if (tail_ < 1.0) return 0.0;
        double out = 1.0;
        for (std::size_t i = start; i <= values_.size(); ++i) out *= values_[i - 1];
        return out;
      }
      case Kind::geometric: {
        if (c_ == 0.0 || gamma_ == 0.0) return 1.0;
        // sum of log(1 - c gamma^i); terms decay geometrically
        double log_sum = 0.0;
        double term = c_ * std::pow(gamma_, static_cast<double>(start));
        while (term > 1e-18) {
          log_sum += std::log1p(-term);
          term *= gamma_;
        }
        return std::exp(log_sum);
      }
    }
    return 0;
  }

  std::string to_string() const {
    std::string body;
    switch (kind_) {
      case Kind::constant: body = "pconst:" + detail::shortest(tail_); break;
      case Kind::prefix:
        body = "plist:" + detail::join(values_) + ";tail=" + detail::shortest(tail_);
        break;
      case Kind::geometric:
        body = "pgeo:c=" + detail::shortest(c_) + ",gamma=" + detail::shortest(gamma_);
        break;
    }
    return body + detail::shift_suffix(shift_);
  }

  bool operator==(const ProbSeq&) const = default;

  /// Number of explicitly listed leading values (0 for closed-form kinds).
  std::size_t prefix_length() const { return kind_ == Kind::prefix ? values_.size() : 0; }

 private:
  ProbSeq(Kind kind, std::vector<double> values, double tail, double c, double gamma)
      : kind_(kind), values_(std::move(values)), tail_(tail), c_(c), gamma_(gamma) {
    auto valid = [](double p) { return p > 0.0 && p <= 1.0; };
    for (double v : values_) {
      if (!valid(v)) throw PreconditionError("every probability must lie in (0, 1]");
    }
    if (!valid(tail_)) throw PreconditionError("every probability must lie in (0, 1]");
    if (kind_ == Kind::prefix && values_.empty()) {
      throw PreconditionError("plist needs at least one explicit value");
    }
    if (kind_ == Kind::geometric &&
        !(c_ >= 0.0 && gamma_ >= 0.0 && gamma_ < 1.0 && c_ * gamma_ < 1.0)) {
      throw PreconditionError("pgeo requires c >= 0, 0 <= gamma < 1 and c * gamma < 1");
    }
  }

  Kind kind_;
  std::vector<double> values_;
  double tail_;
  double c_;
  double gamma_;
  std::size_t shift_ = 0;
};

/// q_r = d_1 * ... * d_r, with q_0 = 1. Throws OverflowError past 2^64.
inline Index q_product(const BaseSeq& base, std::size_t r) {
  Index q = 1;
  for (std::size_t i = 1; i <= r; ++i) q = detail::checked_mul(q, base(i));
  return q;
}

/// Finite digit expansion (a_1, ..., a_u) of a non-negative integer, kept in
/// canonical form: no trailing zeros, so equal integers compare equal.
class DigitVec {
 public:
  DigitVec(BaseSeq base, std::vector<Index> digits)
      : base_(std::move(base)), digits_(std::move(digits)) {
    for (std::size_t r = 1; r <= digits_.size(); ++r) {
      if (digits_[r - 1] >= base_(r)) {
        throw PreconditionError("digit " + std::to_string(r) + " out of range");
      }
    }
    while (!digits_.empty() && digits_.back() == 0) digits_.pop_back();
  }

  const BaseSeq& base() const { return base_; }
  const std::vector<Index>& digits() const { return digits_; }
  std::size_t size() const { return digits_.size(); }

  /// a_r for r >= 1; zero beyond the stored expansion.
  Index digit(std::size_t r) const { return r <= digits_.size() ? digits_[r - 1] : 0; }

  bool operator==(const DigitVec&) const = default;

 private:
  BaseSeq base_;
  std::vector<Index> digits_;
};

inline DigitVec to_digits(Index n, const BaseSeq& base) {
  std::vector<Index> digits;
  for (std::size_t r = 1; n > 0; ++r) {
    const Index d = base(r);
    digits.push_back(n % d);
    n /= d;
  }
  return DigitVec(base, std::move(digits));
}

inline Index from_digits(const DigitVec& dv) {
  Index n = 0;
  Index q = 1;
  for (std::size_t r = 1; r <= dv.size(); ++r) {
    n = detail::checked_add(n, detail::checked_mul(dv.digit(r), q));
    if (r < dv.size()) q = detail::checked_mul(q, dv.base()(r));
  }
  return n;
}

/// s_n: the first position whose digit is not maximal.
inline std::size_t counter(const DigitVec& dv) {
  std::size_t r = 1;
  while (r <= dv.size() && dv.digit(r) == dv.base()(r) - 1) ++r;
  return r;
}

/// Digits of n + 1: zeros below the counter, one added at the counter.
inline DigitVec successor(const DigitVec& dv) {
  const std::size_t s = counter(dv);
  std::vector<Index> digits = dv.digits();
  if (digits.size() < s) digits.resize(s, 0);
  std::fill(digits.begin(), digits.begin() + static_cast<std::ptrdiff_t>(s - 1), 0);
  digits[s - 1] += 1;
  return DigitVec(dv.base(), std::move(digits));
}

/// T_s: clears the first s digits, which must all be maximal
/// (1 <= s <= counter - 1). The value drops by q_s - 1.
inline DigitVec truncate_digits(const DigitVec& dv, std::size_t s) {
  const std::size_t sn = counter(dv);
  if (s < 1 || s + 1 > sn) {
    throw PreconditionError("truncation depth " + std::to_string(s) + " outside [1, " +
                            std::to_string(sn - 1) + "]");
  }
  std::vector<Index> digits = dv.digits();
  std::fill(digits.begin(), digits.begin() + static_cast<std::ptrdiff_t>(s), 0);
  return DigitVec(dv.base(), std::move(digits));
}

}  // namespace stochadd
