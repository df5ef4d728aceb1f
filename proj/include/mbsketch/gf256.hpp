/*
 * Copyright 2026 The mbsketch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace mbsketch {

/*
 * Arithmetic in GF(2^8) generated by the primitive polynomial
 * x^8 + x^4 + x^3 + x^2 + 1 (0x11D) with alpha = 0x02.
 *
 * The polynomial is part of the on-disk contract: sketch bits, and hence the
 * stored digests, change if it changes.
 */
inline constexpr unsigned kGfPrimitivePoly = 0x11D;
inline constexpr unsigned kGfOrder = 256;
inline constexpr unsigned kGfMultOrder = 255;

namespace detail {

struct GfTables {
  // exp has 510 entries so exp[log a + log b] needs no reduction.
  std::array<std::uint8_t, 2 * kGfMultOrder> exp{};
  std::array<std::uint8_t, kGfOrder> log{};
};

constexpr GfTables make_gf_tables() {
  GfTables t{};
  unsigned x = 1;
  for (unsigned i = 0; i < kGfMultOrder; ++i) {
    t.exp[i] = static_cast<std::uint8_t>(x);
    t.log[x] = static_cast<std::uint8_t>(i);
    x <<= 1;
    if (x & 0x100) x ^= kGfPrimitivePoly;
  }
  for (unsigned i = kGfMultOrder; i < 2 * kGfMultOrder; ++i) t.exp[i] = t.exp[i - kGfMultOrder];
  return t;
}

inline constexpr GfTables kGf = make_gf_tables();

}  // namespace detail

/// One GF(2^8) symbol.
class Gf256 {
 public:
  constexpr Gf256() = default;
  constexpr explicit Gf256(std::uint8_t v) : v_(v) {}

  /// alpha^power, power taken modulo 255 (negative powers allowed).
  static constexpr Gf256 alpha_pow(long power) {
    long p = power % static_cast<long>(kGfMultOrder);
    if (p < 0) p += kGfMultOrder;
    return Gf256(detail::kGf.exp[static_cast<std::size_t>(p)]);
  }

  constexpr std::uint8_t value() const { return v_; }
  constexpr bool is_zero() const { return v_ == 0; }

  /// Discrete log base alpha. Undefined for zero.
  constexpr unsigned log() const {
    if (v_ == 0) throw std::domain_error("log of zero in GF(256)");
    return detail::kGf.log[v_];
  }

  constexpr Gf256 inverse() const {
    if (v_ == 0) throw std::domain_error("inverse of zero in GF(256)");
    return Gf256(detail::kGf.exp[kGfMultOrder - detail::kGf.log[v_]]);
  }

  constexpr Gf256 pow(unsigned e) const {
    if (v_ == 0) return e == 0 ? Gf256(1) : Gf256(0);
    return alpha_pow(static_cast<long>((static_cast<unsigned long>(detail::kGf.log[v_]) * e) % kGfMultOrder));
  }

  friend constexpr Gf256 operator+(Gf256 a, Gf256 b) { return Gf256(a.v_ ^ b.v_); }
  friend constexpr Gf256 operator-(Gf256 a, Gf256 b) { return a + b; }
  friend constexpr Gf256 operator*(Gf256 a, Gf256 b) {
    if (a.v_ == 0 || b.v_ == 0) return Gf256(0);
    return Gf256(detail::kGf.exp[detail::kGf.log[a.v_] + detail::kGf.log[b.v_]]);
  }
  friend constexpr Gf256 operator/(Gf256 a, Gf256 b) { return a * b.inverse(); }

  constexpr Gf256& operator+=(Gf256 o) { return *this = *this + o; }
  constexpr Gf256& operator-=(Gf256 o) { return *this = *this - o; }
  constexpr Gf256& operator*=(Gf256 o) { return *this = *this * o; }

  friend constexpr bool operator==(Gf256, Gf256) = default;

 private:
  std::uint8_t v_ = 0;
};

}  // namespace mbsketch
