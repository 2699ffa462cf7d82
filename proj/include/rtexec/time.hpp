// Copyright 2026 The rtexec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RTEXEC__TIME_HPP_
#define RTEXEC__TIME_HPP_

#include <compare>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>

#include "rtexec/errors.hpp"

namespace rtexec
{

/// Virtual time in integer nanoseconds. Used for both instants and durations.
/**
 * Never negative: constructing a negative value or subtracting a larger value
 * from a smaller one throws TimeUnderflow.
 */
class TimeNs
{
public:
  constexpr TimeNs() = default;

  constexpr explicit TimeNs(std::int64_t ns)
  : ns_(ns)
  {
    if (ns < 0) {
      throw TimeUnderflow("negative time value: " + std::to_string(ns));
    }
  }

  static constexpr TimeNs from_us(std::int64_t us) {return TimeNs(us * 1'000);}
  static constexpr TimeNs from_ms(std::int64_t ms) {return TimeNs(ms * 1'000'000);}
  static constexpr TimeNs from_s(std::int64_t s) {return TimeNs(s * 1'000'000'000);}
  static constexpr TimeNs zero() {return TimeNs();}
  static constexpr TimeNs max() {return TimeNs(std::numeric_limits<std::int64_t>::max());}

  constexpr std::int64_t count() const {return ns_;}
  constexpr bool is_zero() const {return ns_ == 0;}

  constexpr auto operator<=>(const TimeNs &) const = default;

  constexpr TimeNs operator+(TimeNs other) const
  {
    if (ns_ > std::numeric_limits<std::int64_t>::max() - other.ns_) {
      throw TimeUnderflow("time overflow");
    }
    return TimeNs(ns_ + other.ns_);
  }

  constexpr TimeNs operator-(TimeNs other) const
  {
    if (other.ns_ > ns_) {
      throw TimeUnderflow(
              "time underflow: " + std::to_string(ns_) + " - " + std::to_string(other.ns_));
    }
    return TimeNs(ns_ - other.ns_);
  }

  constexpr TimeNs & operator+=(TimeNs other) {return *this = *this + other;}
  constexpr TimeNs & operator-=(TimeNs other) {return *this = *this - other;}

  constexpr TimeNs operator*(std::int64_t k) const {return TimeNs(ns_ * k);}

private:
  std::int64_t ns_{0};
};

inline std::ostream & operator<<(std::ostream & os, TimeNs t)
{
  return os << t.count() << "ns";
}

namespace literals
{
constexpr TimeNs operator""_ns(unsigned long long v) {return TimeNs(static_cast<std::int64_t>(v));}
constexpr TimeNs operator""_us(unsigned long long v)
{
  return TimeNs::from_us(static_cast<std::int64_t>(v));
}
constexpr TimeNs operator""_ms(unsigned long long v)
{
  return TimeNs::from_ms(static_cast<std::int64_t>(v));
}
constexpr TimeNs operator""_s(unsigned long long v)
{
  return TimeNs::from_s(static_cast<std::int64_t>(v));
}
}  // namespace literals

/// Exact non-negative rational, used for budget and sleep fractions.
/**
 * Parsed from plain decimal strings ("0.25", "1", "1.0") and printed back as
 * fixed decimals, so CSV output never depends on floating point or locale.
 */
class Ratio
{
public:
  constexpr Ratio() = default;
  Ratio(std::int64_t num, std::int64_t den)
  : num_(num), den_(den)
  {
    if (den <= 0 || num < 0) {
      throw InvalidParams("ratio", "ratio must be non-negative with positive denominator");
    }
    const auto g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  static Ratio parse(std::string_view text)
  {
    if (text.empty()) {
      throw InvalidParams("ratio", "empty fraction");
    }
    std::int64_t num = 0;
    std::int64_t den = 1;
    bool seen_point = false;
    bool seen_digit = false;
    for (char c : text) {
      if (c == '.' && !seen_point) {
        seen_point = true;
        continue;
      }
      if (c < '0' || c > '9') {
        throw InvalidParams("ratio", "not a decimal fraction: '" + std::string(text) + "'");
      }
      seen_digit = true;
      if (num > 100'000'000'000LL || den > 100'000'000'000LL) {
        throw InvalidParams("ratio", "too many digits: '" + std::string(text) + "'");
      }
      num = num * 10 + (c - '0');
      if (seen_point) {
        den *= 10;
      }
    }
    if (!seen_digit) {
      throw InvalidParams("ratio", "not a decimal fraction: '" + std::string(text) + "'");
    }
    return Ratio(num, den);
  }

  constexpr std::int64_t num() const {return num_;}
  constexpr std::int64_t den() const {return den_;}

  /// floor(t * this)
  TimeNs scale(TimeNs t) const
  {
    const auto wide = static_cast<__int128>(t.count()) * num_ / den_;
    if (wide > std::numeric_limits<std::int64_t>::max()) {
      throw TimeUnderflow("scaled time overflows");
    }
    return TimeNs(static_cast<std::int64_t>(wide));
  }

  friend bool operator==(const Ratio & a, const Ratio & b)
  {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Ratio & a, const Ratio & b)
  {
    return static_cast<__int128>(a.num_) * b.den_ <=> static_cast<__int128>(b.num_) * a.den_;
  }

  /// Fixed decimal text; exact when the denominator divides a power of ten.
  std::string to_string() const
  {
    std::string out = std::to_string(num_ / den_) + ".";
    std::int64_t rem = num_ % den_;
    int digits = 0;
    do {
      rem *= 10;
      out += static_cast<char>('0' + rem / den_);
      rem %= den_;
      ++digits;
    } while (rem != 0 && digits < 9);
    return out;
  }

private:
  std::int64_t num_{0};
  std::int64_t den_{1};
};

}  // namespace rtexec

#endif  // RTEXEC__TIME_HPP_
