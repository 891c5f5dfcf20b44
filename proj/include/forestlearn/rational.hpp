#pragma once

#include <charconv>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace forestlearn {

// Non-negative rational num/den. Used wherever a setting has to survive a
// round trip through the coded container bit-exactly.
struct Rational {
  std::uint64_t num = 1;
  std::uint64_t den = 2;

  constexpr double value() const noexcept {
    return static_cast<double>(num) / static_cast<double>(den);
  }

  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

  friend constexpr bool operator==(const Rational&, const Rational&) = default;

  Rational reduced() const {
    const auto g = std::gcd(num, den);
    return g == 0 ? *this : Rational{num / g, den / g};
  }

  // Accepts "a/b", "a" or a plain decimal such as "0.25".
  static Rational parse(std::string_view text) {
    auto bad = [&] { return std::invalid_argument("not a rational: '" + std::string(text) + "'"); };
    auto parse_u64 = [&](std::string_view s) {
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) throw bad();
      return v;
    };
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      Rational r{parse_u64(text.substr(0, slash)), parse_u64(text.substr(slash + 1))};
      if (r.den == 0) throw bad();
      return r.reduced();
    }
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
      const auto whole = text.substr(0, dot);
      const auto frac = text.substr(dot + 1);
      if (frac.empty() || frac.size() > 12) throw bad();
      std::uint64_t den = 1;
      for (std::size_t k = 0; k < frac.size(); ++k) den *= 10;
      const std::uint64_t w = whole.empty() ? 0 : parse_u64(whole);
      return Rational{w * den + parse_u64(frac), den}.reduced();
    }
    return Rational{parse_u64(text), 1};
  }
};

}  // namespace forestlearn
