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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "mbsketch/error.hpp"

namespace mbsketch::analysis {

enum class Compromise { kKeyOnly, kSketchOnly, kSketchAndKey };

inline const char* to_string(Compromise c) {
  switch (c) {
    case Compromise::kKeyOnly: return "key_only";
    case Compromise::kSketchOnly: return "sketch_only";
    case Compromise::kSketchAndKey: return "sketch_and_key";
  }
  return "?";
}

using BigInt = boost::multiprecision::cpp_int;

inline BigInt binomial(std::size_t n, std::size_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  BigInt c = 1;
  for (std::size_t i = 1; i <= r; ++i) {
    c *= n - r + i;
    c /= i;  // exact: c is C(n - r + i, i) here
  }
  return c;
}

/// log2 of a positive integer from its top 64 bits and its bit length.
inline double log2_exact(const BigInt& x) {
  if (x <= 0) throw DomainError("log2 of a non-positive integer");
  const std::size_t bits = boost::multiprecision::msb(x) + 1;
  if (bits <= 64) return std::log2(static_cast<long double>(static_cast<unsigned long long>(x)));
  const std::size_t shift = bits - 64;
  const auto top = static_cast<unsigned long long>(x >> shift);
  return static_cast<double>(std::log2(static_cast<long double>(top)) + static_cast<long double>(shift));
}

inline double log2_binomial(std::size_t n, std::size_t r) { return log2_exact(binomial(n, r)); }

/*
 * Bits of the k-bit secret exposed to an attacker holding the given material.
 * Sketch only: max(0, k - log2 C(J, n)), where C(J, n) counts the index sets
 * the attacker must still guess.
 */
inline double privacy_leakage(std::size_t J, std::size_t n, std::size_t k, Compromise compromised) {
  if (!(1 <= k && k <= n && n <= J))
    throw DomainError("privacy leakage needs 1 <= k <= n <= J (got J=" + std::to_string(J) +
                      ", n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
  switch (compromised) {
    case Compromise::kKeyOnly: return 0.0;
    case Compromise::kSketchAndKey: return static_cast<double>(k);
    case Compromise::kSketchOnly: {
      const BigInt c = binomial(J, n);
      if (c >= (BigInt(1) << k)) return 0.0;  // decided exactly, no rounding at the boundary
      return std::max(0.0, static_cast<double>(k) - log2_exact(c));
    }
  }
  return 0.0;
}

/// Largest n such that sketch-only leakage is zero for every k <= n' for all
/// n' <= n. Zero leakage for all k <= n holds iff C(J, n) >= 2^n.
inline std::size_t zero_leakage_boundary(std::size_t J) {
  std::size_t last = 0;
  for (std::size_t n = 1; n <= J; ++n) {
    if (binomial(J, n) < (BigInt(1) << n)) break;
    last = n;
  }
  return last;
}

/// Smallest k with positive sketch-only leakage at (J, n), if any k <= n leaks.
inline std::optional<std::size_t> first_leaking_k(std::size_t J, std::size_t n) {
  const BigInt c = binomial(J, n);
  for (std::size_t k = 1; k <= n; ++k)
    if (c < (BigInt(1) << k)) return k;
  return std::nullopt;
}

}  // namespace mbsketch::analysis
