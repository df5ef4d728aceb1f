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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mbsketch/error.hpp"
#include "mbsketch/gf256.hpp"

namespace mbsketch {

/// Geometry of a shortened [N, K] Reed-Solomon code over GF(2^m) derived
/// from the [N' = 2^m - 1, K' = K + (N' - N)] mother code.
struct RsCodeParams {
  unsigned m = 8;
  std::size_t n_prime = kGfMultOrder;
  std::size_t k_prime = 0;
  std::size_t n_symbols = 0;
  std::size_t k_symbols = 0;
  std::size_t t = 0;

  static RsCodeParams shortened(std::size_t n, std::size_t k) {
    if (k < 1 || k > n || n > kGfMultOrder)
      throw ParameterError("invalid RS geometry: need 1 <= K <= N <= 255, got N=" + std::to_string(n) +
                           " K=" + std::to_string(k));
    RsCodeParams p;
    p.n_symbols = n;
    p.k_symbols = k;
    p.k_prime = k + (p.n_prime - n);
    p.t = (n - k) / 2;
    return p;
  }

  std::size_t parity_symbols() const { return n_symbols - k_symbols; }
  std::size_t n_bits() const { return m * n_symbols; }
  std::size_t k_bits() const { return m * k_symbols; }

  friend bool operator==(const RsCodeParams&, const RsCodeParams&) = default;
};

using Codeword = std::vector<Gf256>;
using Message = std::vector<Gf256>;

struct DecodeResult {
  Message message;
  std::size_t corrected = 0;
};

/*
 * Systematic shortened Reed-Solomon codec.
 *
 * Array layout is message first: index 0 holds the coefficient of x^(N-1),
 * index N-1 the constant term. The generator polynomial has roots
 * alpha^1 .. alpha^(N-K). Shortening drops the N'-N leading (zero) message
 * symbols of the mother code, which leaves the codeword polynomial unchanged,
 * so the decoder only has to restrict its root search to degrees below N.
 *
 * Decoding is bounded-distance: syndromes, Berlekamp-Massey, Chien search,
 * Forney. Anything that does not resolve to a codeword within t symbols is
 * reported as a failure; a received word beyond t errors may also land on a
 * different codeword (miscorrection), which is returned as-is.
 *
 * Instances are immutable after construction and safe to share across threads.
 */
class ReedSolomon {
 public:
  explicit ReedSolomon(const RsCodeParams& params) : params_(params) {
    if (params.m != 8 || params.n_prime != kGfMultOrder || params.k_symbols < 1 ||
        params.k_symbols > params.n_symbols || params.n_symbols > params.n_prime ||
        params.k_prime != params.k_symbols + (params.n_prime - params.n_symbols) ||
        params.t != (params.n_symbols - params.k_symbols) / 2)
      throw ParameterError("inconsistent RS parameters");
    // generator, highest degree first: prod_{i=1}^{P} (x + alpha^i)
    generator_ = {Gf256(1)};
    for (std::size_t i = 1; i <= params.parity_symbols(); ++i) {
      const Gf256 root = Gf256::alpha_pow(static_cast<long>(i));
      std::vector<Gf256> next(generator_.size() + 1);
      for (std::size_t j = 0; j < generator_.size(); ++j) {
        next[j] += generator_[j];
        next[j + 1] += generator_[j] * root;
      }
      generator_ = std::move(next);
    }
  }

  const RsCodeParams& params() const { return params_; }

  Codeword encode(std::span<const Gf256> message) const {
    if (message.size() != params_.k_symbols)
      throw ParameterError("message length " + std::to_string(message.size()) + " != K=" +
                           std::to_string(params_.k_symbols));
    const std::size_t k = params_.k_symbols;
    const std::size_t p = params_.parity_symbols();
    Codeword buf(message.begin(), message.end());
    buf.resize(k + p);
    for (std::size_t i = 0; i < k; ++i) {
      const Gf256 coef = buf[i];
      if (coef.is_zero()) continue;
      for (std::size_t j = 1; j <= p; ++j) buf[i + j] += coef * generator_[j];
    }
    std::copy(message.begin(), message.end(), buf.begin());
    return buf;
  }

  /// S_i = r(alpha^i) for i = 1 .. N-K.
  std::vector<Gf256> syndromes(std::span<const Gf256> received) const {
    check_length(received);
    std::vector<Gf256> s(params_.parity_symbols());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Gf256 x = Gf256::alpha_pow(static_cast<long>(i + 1));
      Gf256 acc;
      for (Gf256 c : received) acc = acc * x + c;
      s[i] = acc;
    }
    return s;
  }

  std::optional<DecodeResult> decode_detailed(std::span<const Gf256> received) const {
    const std::vector<Gf256> synd = syndromes(received);
    const std::size_t n = params_.n_symbols;
    const std::size_t k = params_.k_symbols;
    bool clean = true;
    for (Gf256 s : synd) clean = clean && s.is_zero();
    if (clean) return DecodeResult{Message(received.begin(), received.begin() + static_cast<long>(k)), 0};

    const std::vector<Gf256> locator = berlekamp_massey(synd);
    const std::size_t errors = locator.size() - 1;
    if (errors > params_.t) return std::nullopt;

    // Chien search restricted to the degrees present in the shortened word.
    std::vector<std::size_t> degrees;
    for (std::size_t deg = 0; deg < n; ++deg) {
      if (eval(locator, Gf256::alpha_pow(-static_cast<long>(deg))).is_zero()) degrees.push_back(deg);
    }
    if (degrees.size() != errors) return std::nullopt;

    // Forney (first consecutive root = 1): e = Omega(X^-1) / Lambda'(X^-1).
    std::vector<Gf256> omega(synd.size());
    for (std::size_t i = 0; i < synd.size(); ++i)
      for (std::size_t j = 0; j < locator.size() && j <= i; ++j) omega[i] += synd[i - j] * locator[j];
    std::vector<Gf256> derivative(locator.size() > 1 ? locator.size() - 1 : 1);
    for (std::size_t j = 1; j < locator.size(); j += 2) derivative[j - 1] = locator[j];

    Codeword corrected(received.begin(), received.end());
    for (std::size_t deg : degrees) {
      const Gf256 x_inv = Gf256::alpha_pow(-static_cast<long>(deg));
      const Gf256 denom = eval(derivative, x_inv);
      if (denom.is_zero()) return std::nullopt;
      corrected[n - 1 - deg] += eval(omega, x_inv) / denom;
    }
    for (Gf256 s : syndromes(corrected))
      if (!s.is_zero()) return std::nullopt;
    corrected.resize(k);
    return DecodeResult{std::move(corrected), errors};
  }

  std::optional<Message> decode(std::span<const Gf256> received) const {
    auto r = decode_detailed(received);
    if (!r) return std::nullopt;
    return std::move(r->message);
  }

 private:
  void check_length(std::span<const Gf256> received) const {
    if (received.size() != params_.n_symbols)
      throw ParameterError("received length " + std::to_string(received.size()) + " != N=" +
                           std::to_string(params_.n_symbols));
  }

  // Lowest degree first.
  static Gf256 eval(const std::vector<Gf256>& poly, Gf256 x) {
    Gf256 acc;
    for (auto it = poly.rbegin(); it != poly.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  // Error locator, lowest degree first, sized to its nominal degree l.
  static std::vector<Gf256> berlekamp_massey(const std::vector<Gf256>& synd) {
    std::vector<Gf256> c{Gf256(1)};
    std::vector<Gf256> b{Gf256(1)};
    std::size_t l = 0;
    std::size_t shift = 1;
    Gf256 last(1);
    for (std::size_t r = 0; r < synd.size(); ++r) {
      Gf256 d = synd[r];
      for (std::size_t i = 1; i <= l && i < c.size(); ++i) d += c[i] * synd[r - i];
      if (d.is_zero()) {
        ++shift;
        continue;
      }
      const Gf256 coef = d / last;
      std::vector<Gf256> prev = c;
      if (c.size() < b.size() + shift) c.resize(b.size() + shift);
      for (std::size_t i = 0; i < b.size(); ++i) c[i + shift] += coef * b[i];
      if (2 * l <= r) {
        l = r + 1 - l;
        b = std::move(prev);
        last = d;
        shift = 1;
      } else {
        ++shift;
      }
    }
    // A vanished leading term leaves fewer than l roots; the caller's root count check rejects it.
    c.resize(l + 1);
    return c;
  }

  RsCodeParams params_;
  std::vector<Gf256> generator_;  // highest degree first, monic
};

/// One-shot wrappers; prefer a long-lived ReedSolomon when decoding in a loop.
inline Codeword rs_encode(std::span<const Gf256> message, const RsCodeParams& params) {
  return ReedSolomon(params).encode(message);
}

inline std::optional<Message> rs_decode(std::span<const Gf256> received, const RsCodeParams& params) {
  return ReedSolomon(params).decode(received);
}

inline std::vector<Gf256> syndromes(std::span<const Gf256> received, const RsCodeParams& params) {
  return ReedSolomon(params).syndromes(received);
}

}  // namespace mbsketch
