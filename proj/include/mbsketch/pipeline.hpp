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
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mbsketch/error.hpp"
#include "mbsketch/feature_model.hpp"
#include "mbsketch/random.hpp"
#include "mbsketch/reed_solomon.hpp"
#include "mbsketch/sha256.hpp"
#include "mbsketch/template_store.hpp"

namespace mbsketch {

/// Ordered selection of G distinct bit positions out of J. The order is
/// reliability-descending and is part of the key.
struct UserKey {
  std::vector<std::uint32_t> indices;
  std::size_t dimension = 0;  // J

  std::size_t size() const { return indices.size(); }
  friend bool operator==(const UserKey&, const UserKey&) = default;
};

struct CancelableTemplate {
  Bits bits;
};

struct SecureSketch {
  Bits message_bits;
  friend bool operator==(const SecureSketch&, const SecureSketch&) = default;
};

/// What to do when the bounded-distance decoder finds no codeword within t.
enum class DecodeFailurePolicy {
  /// No sketch: enrollment retries with a fresh key, authentication denies.
  kReject,
  /// Use the received word's K systematic (message-position) symbols as the sketch.
  kSystematic,
};

inline const char* to_string(DecodeFailurePolicy p) {
  return p == DecodeFailurePolicy::kReject ? "reject" : "systematic";
}

inline DecodeFailurePolicy parse_decode_policy(const std::string& name) {
  if (name == "reject") return DecodeFailurePolicy::kReject;
  if (name == "systematic") return DecodeFailurePolicy::kSystematic;
  throw ParameterError("unknown decode-failure policy '" + name + "' (expected reject|systematic)");
}

inline constexpr int kMaxEnrollmentAttempts = 16;

/*
 * Draws G of J positions uniformly without replacement, then orders them by
 * descending reliability. Equal scores keep their draw order.
 */
inline UserKey issue_key(std::size_t dimension, std::size_t selection, std::span<const double> reliability,
                         std::uint64_t seed) {
  if (selection > dimension) throw ParameterError("G > J");
  if (reliability.size() != dimension) throw ParameterError("reliability length differs from J");
  Rng rng = make_rng(seed, {0x4b4559ULL});
  std::vector<std::uint32_t> pool(dimension);
  std::iota(pool.begin(), pool.end(), 0u);
  for (std::size_t i = 0; i < selection; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, dimension - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(selection);
  std::stable_sort(pool.begin(), pool.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return reliability[a] > reliability[b]; });
  return UserKey{std::move(pool), dimension};
}

inline UserKey issue_key(std::size_t dimension, std::size_t selection, std::uint64_t seed) {
  const std::vector<double> flat(dimension, 1.0);
  return issue_key(dimension, selection, flat, seed);
}

inline CancelableTemplate select_bits(const FeatureVector& feature, const UserKey& key) {
  CancelableTemplate t;
  t.bits.reserve(key.size());
  for (auto idx : key.indices) {
    if (idx >= feature.dimension())
      throw ShapeError("key index " + std::to_string(idx) + " out of range for J=" +
                       std::to_string(feature.dimension()));
    t.bits.push_back(feature.bits[idx]);
  }
  return t;
}

/// 8 consecutive bits per symbol, first bit is the MSB.
inline std::vector<Gf256> bits_to_symbols(std::span<const std::uint8_t> bits) {
  if (bits.size() % 8 != 0) throw ParameterError("bit count is not a multiple of 8");
  std::vector<Gf256> out(bits.size() / 8);
  for (std::size_t s = 0; s < out.size(); ++s) {
    std::uint8_t v = 0;
    for (std::size_t b = 0; b < 8; ++b) v = static_cast<std::uint8_t>(v << 1 | (bits[8 * s + b] & 1u));
    out[s] = Gf256(v);
  }
  return out;
}

inline Bits symbols_to_bits(std::span<const Gf256> symbols) {
  Bits out;
  out.reserve(symbols.size() * 8);
  for (Gf256 s : symbols)
    for (int b = 7; b >= 0; --b) out.push_back(static_cast<std::uint8_t>((s.value() >> b) & 1u));
  return out;
}

/// 4-byte big-endian bit count followed by the bits packed MSB-first, zero-padded.
inline std::vector<std::uint8_t> pack_sketch(const SecureSketch& sketch) {
  const auto k = static_cast<std::uint32_t>(sketch.message_bits.size());
  std::vector<std::uint8_t> out{static_cast<std::uint8_t>(k >> 24), static_cast<std::uint8_t>(k >> 16),
                                static_cast<std::uint8_t>(k >> 8), static_cast<std::uint8_t>(k)};
  out.resize(4 + (k + 7) / 8, 0);
  for (std::size_t i = 0; i < k; ++i)
    if (sketch.message_bits[i]) out[4 + i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  return out;
}

inline Digest sketch_digest(const SecureSketch& sketch) { return sha256(pack_sketch(sketch)); }

enum class DenyReason { kNone, kUnknownSubject, kDecodeFailure, kDigestMismatch };

inline const char* to_string(DenyReason r) {
  switch (r) {
    case DenyReason::kNone: return "none";
    case DenyReason::kUnknownSubject: return "unknown subject";
    case DenyReason::kDecodeFailure: return "decode failure";
    case DenyReason::kDigestMismatch: return "digest mismatch";
  }
  return "?";
}

struct AuthOutcome {
  bool granted = false;
  DenyReason reason = DenyReason::kNone;
};

struct Enrollment {
  UserKey key;
  SecureTemplate record;
  int attempts = 1;
};

/*
 * Cancelable template -> RS decode -> sketch -> SHA-256 -> store.
 *
 * Stateless apart from the precomputed codec; one instance serves any number
 * of threads. The store is passed per call and owns its own locking.
 */
class SketchPipeline {
 public:
  using Clock = std::function<std::string()>;

  explicit SketchPipeline(RsCodeParams params, DecodeFailurePolicy policy = DecodeFailurePolicy::kSystematic,
                          Clock clock = utc_timestamp_now)
      : codec_(params), policy_(policy), clock_(std::move(clock)) {}

  const RsCodeParams& params() const { return codec_.params(); }
  DecodeFailurePolicy policy() const { return policy_; }
  const ReedSolomon& codec() const { return codec_; }

  std::size_t template_bits() const { return params().n_bits(); }

  /// Sketch of a cancelable template, or nullopt on decode failure under kReject.
  std::optional<SecureSketch> derive_sketch(const CancelableTemplate& t) const {
    if (t.bits.size() != template_bits())
      throw ParameterError("template has " + std::to_string(t.bits.size()) + " bits, code needs m*N=" +
                           std::to_string(template_bits()));
    const std::vector<Gf256> received = bits_to_symbols(t.bits);
    if (auto msg = codec_.decode(received)) return SecureSketch{symbols_to_bits(*msg)};
    if (policy_ == DecodeFailurePolicy::kReject) return std::nullopt;
    return SecureSketch{symbols_to_bits(std::span(received).first(params().k_symbols))};
  }

  std::optional<SecureSketch> derive_sketch(const FeatureVector& feature, const UserKey& key) const {
    return derive_sketch(select_bits(feature, key));
  }

  /// Throws DecodeFailure (the retry signal) when no sketch exists, ConflictError
  /// when the subject is enrolled and overwrite is false.
  SecureTemplate enroll(const FeatureVector& feature, const UserKey& key, TemplateStore& store,
                        const std::string& subject_id, bool overwrite = false) const {
    SecureTemplate record = make_record(feature, key, subject_id);
    check_store(store);
    store.insert(record, overwrite);
    return record;
  }

  /// Issues keys from derived seeds until one yields a sketch (at most
  /// kMaxEnrollmentAttempts). The key is returned, never stored.
  Enrollment enroll_with_fresh_key(const FeatureVector& feature, std::span<const double> reliability,
                                   TemplateStore& store, const std::string& subject_id, std::uint64_t seed,
                                   bool overwrite = false) const {
    check_store(store);
    if (!overwrite && store.contains(subject_id))
      throw ConflictError("subject '" + subject_id + "' is already enrolled");
    Enrollment e = make_enrollment(feature, reliability, subject_id, seed);
    store.insert(e.record, overwrite);
    return e;
  }

  AuthOutcome authenticate(const FeatureVector& feature, const UserKey& key, const TemplateStore& store,
                           const std::string& subject_id) const {
    auto record = store.find(subject_id);
    if (!record) return {false, DenyReason::kUnknownSubject};
    if (!(record->code_params == params())) throw ParameterError("store was built with different code parameters");
    auto sketch = derive_sketch(feature, key);
    if (!sketch) return {false, DenyReason::kDecodeFailure};
    if (sketch_digest(*sketch) != record->digest) return {false, DenyReason::kDigestMismatch};
    return {true, DenyReason::kNone};
  }

  /// Replaces the subject's record with one built from a fresh feature and a
  /// key issued from new_seed. The old key stops working.
  Enrollment revoke_and_reissue(TemplateStore& store, const std::string& subject_id, const FeatureVector& feature,
                                std::uint64_t new_seed, std::span<const double> reliability) const {
    check_store(store);
    if (!store.contains(subject_id)) throw LookupError("unknown subject '" + subject_id + "'");
    Enrollment e = make_enrollment(feature, reliability, subject_id, new_seed);
    store.replace(e.record);
    return e;
  }

 private:
  void check_store(const TemplateStore& store) const {
    if (!(store.code_params() == params())) throw ParameterError("store was built with different code parameters");
  }

  SecureTemplate make_record(const FeatureVector& feature, const UserKey& key, const std::string& subject_id) const {
    auto sketch = derive_sketch(feature, key);
    if (!sketch) throw DecodeFailure("cancelable template is farther than t symbols from every codeword");
    return SecureTemplate{subject_id, sketch_digest(*sketch), params(), clock_()};
  }

  Enrollment make_enrollment(const FeatureVector& feature, std::span<const double> reliability,
                             const std::string& subject_id, std::uint64_t seed) const {
    for (int attempt = 0; attempt < kMaxEnrollmentAttempts; ++attempt) {
      UserKey key = issue_key(feature.dimension(), template_bits(), reliability,
                              attempt == 0 ? seed : derive_seed(seed, {static_cast<std::uint64_t>(attempt)}));
      if (auto sketch = derive_sketch(feature, key))
        return Enrollment{std::move(key), SecureTemplate{subject_id, sketch_digest(*sketch), params(), clock_()},
                          attempt + 1};
    }
    throw DecodeFailure("no decodable cancelable template after " + std::to_string(kMaxEnrollmentAttempts) +
                        " keys for subject '" + subject_id + "'");
  }

  ReedSolomon codec_;
  DecodeFailurePolicy policy_;
  Clock clock_;
};

}  // namespace mbsketch
