#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "stochadd/error.hpp"

namespace stochadd::detail {

/// Shortest decimal text that parses back to the same double.
inline std::string shortest(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

/// Fixed 17 significant digits, the output convention for numeric reports.
inline std::string sig17(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

template <class Seq>
std::string join(const Seq& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ',';
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) {
      out += shortest(v);
    } else {
      out += std::to_string(v);
    }
  }
  return out;
}

/// Cursor over a specification string; every failure reports its offset.
class Scanner {
 public:
  explicit Scanner(std::string_view text) : text_(text) {}

  bool done() const { return pos_ >= text_.size(); }
  std::size_t position() const { return pos_; }

  bool consume(std::string_view token) {
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view token) {
    if (!consume(token)) {
      throw ParseError("expected '" + std::string(token) + "'", pos_);
    }
  }

  std::uint64_t integer() {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc{}) throw ParseError("expected a non-negative integer", pos_);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  double real() {
    double value = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc{}) throw ParseError("expected a number", pos_);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  std::vector<std::uint64_t> integer_list() {
    std::vector<std::uint64_t> out{integer()};
    while (consume(",")) out.push_back(integer());
    return out;
  }

  std::vector<double> real_list() {
    std::vector<double> out{real()};
    while (consume(",")) out.push_back(real());
    return out;
  }

  void finish() const {
    if (!done()) throw ParseError("unexpected trailing text", pos_);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace stochadd::detail
