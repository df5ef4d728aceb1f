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
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mbsketch/error.hpp"
#include "mbsketch/random.hpp"

namespace mbsketch {

/// Bits are stored as 0/1 bytes. A network emitting -1/+1 maps -1 to 0.
using Bits = std::vector<std::uint8_t>;

struct FeatureVector {
  std::string subject_id;
  std::string sample_id;  // empty when the source had none
  Bits bits;

  std::size_t dimension() const { return bits.size(); }
};

inline std::size_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw ShapeError("hamming distance of vectors with different lengths");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
  return d;
}

inline double normalized_hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.empty()) return 0.0;
  return static_cast<double>(hamming_distance(a, b)) / static_cast<double>(a.size());
}

/// Per-bit genuine flip and impostor disagreement probabilities.
struct BitChannelModel {
  std::vector<double> p_genuine;
  std::vector<double> p_impostor;

  static BitChannelModel uniform(std::size_t dimension, double p_genuine, double p_impostor = 0.5) {
    BitChannelModel c{std::vector<double>(dimension, p_genuine), std::vector<double>(dimension, p_impostor)};
    c.validate();
    return c;
  }

  std::size_t dimension() const { return p_genuine.size(); }

  void validate() const {
    if (p_genuine.size() != p_impostor.size()) throw ParameterError("channel vectors differ in length");
    auto bad = [](double p) { return !(p >= 0.0 && p <= 1.0); };
    if (std::any_of(p_genuine.begin(), p_genuine.end(), bad) ||
        std::any_of(p_impostor.begin(), p_impostor.end(), bad))
      throw ParameterError("channel probabilities must lie in [0, 1]");
  }

  /// Reliability score (1 - p_g) * p_i per bit; larger is more reliable.
  std::vector<double> reliability() const {
    std::vector<double> r(dimension());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = (1.0 - p_genuine[i]) * p_impostor[i];
    return r;
  }
};

/*
 * A set of enrolled identities. `references` holds one vector per subject.
 * Ingested populations additionally carry the recorded samples per subject
 * (`recorded[i]` belongs to `references[i]`); synthetic ones leave it empty
 * and draw samples through the channel model.
 */
struct SubjectPopulation {
  std::vector<FeatureVector> references;
  BitChannelModel channel;
  std::uint64_t rng_seed = 0;
  std::vector<std::vector<FeatureVector>> recorded;

  std::size_t size() const { return references.size(); }
  std::size_t dimension() const { return references.empty() ? 0 : references.front().dimension(); }
  bool has_recorded_samples() const { return !recorded.empty(); }

  std::size_t index_of(const std::string& subject_id) const {
    for (std::size_t i = 0; i < references.size(); ++i)
      if (references[i].subject_id == subject_id) return i;
    throw LookupError("unknown subject '" + subject_id + "'");
  }
};

inline std::string synthetic_subject_id(std::size_t i) {
  std::string digits = std::to_string(i);
  return "s" + std::string(digits.size() < 4 ? 4 - digits.size() : 0, '0') + digits;
}

inline Bits uniform_bits(std::size_t dimension, Rng& rng) {
  Bits b(dimension);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < dimension; ++i) {
    if (i % 64 == 0) word = rng();
    b[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
  }
  return b;
}

inline SubjectPopulation synth_population(std::size_t num_subjects, std::size_t dimension,
                                          const BitChannelModel& channel, std::uint64_t seed) {
  if (num_subjects < 1 || dimension < 1) throw ParameterError("population needs >= 1 subject and J >= 1");
  if (channel.dimension() != dimension) throw ParameterError("channel dimension does not match J");
  channel.validate();
  SubjectPopulation pop;
  pop.channel = channel;
  pop.rng_seed = seed;
  pop.references.reserve(num_subjects);
  for (std::size_t s = 0; s < num_subjects; ++s) {
    Rng rng = make_rng(seed, {0x5245465ULL, s});
    pop.references.push_back(FeatureVector{synthetic_subject_id(s), "ref", uniform_bits(dimension, rng)});
  }
  return pop;
}

/// Flips each reference bit i independently with probability p_genuine[i].
inline std::vector<FeatureVector> sample_genuine(const SubjectPopulation& pop, std::size_t subject_index,
                                                 std::size_t count, std::uint64_t seed) {
  if (subject_index >= pop.size()) throw LookupError("subject index out of range");
  const FeatureVector& ref = pop.references[subject_index];
  const auto& pg = pop.channel.p_genuine;
  if (pg.size() != ref.dimension()) throw ParameterError("channel dimension does not match population");
  Rng rng = make_rng(seed, {0x53414dULL, subject_index});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FeatureVector> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    FeatureVector v{ref.subject_id, std::to_string(c), ref.bits};
    for (std::size_t i = 0; i < v.bits.size(); ++i)
      if (pg[i] > 0.0 && u(rng) < pg[i]) v.bits[i] ^= 1u;
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<FeatureVector> sample_genuine(const SubjectPopulation& pop, const std::string& subject_id,
                                                 std::size_t count, std::uint64_t seed) {
  return sample_genuine(pop, pop.index_of(subject_id), count, seed);
}

/// Bitwise majority over a subject's samples; ties resolve to 0.
inline Bits consensus(std::span<const FeatureVector> samples) {
  if (samples.empty()) throw ParameterError("consensus of no samples");
  const std::size_t dim = samples.front().dimension();
  std::vector<std::size_t> ones(dim, 0);
  for (const auto& s : samples) {
    if (s.dimension() != dim) throw ShapeError("samples of one subject differ in dimension");
    for (std::size_t i = 0; i < dim; ++i) ones[i] += s.bits[i];
  }
  Bits out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = 2 * ones[i] > samples.size() ? 1 : 0;
  return out;
}

/*
 * Empirical channel from grouped samples. p_genuine[i] is the rate at which
 * samples disagree with their own subject's majority bit; p_impostor[i] is
 * the fraction of subject pairs whose majority bits differ.
 */
inline BitChannelModel estimate_channel(const std::vector<std::vector<FeatureVector>>& groups) {
  std::size_t usable = 0;
  for (const auto& g : groups) usable += g.size() >= 2;
  if (groups.size() < 2 || usable < 2)
    throw ParameterError("channel estimation needs >= 2 samples for >= 2 subjects");
  const std::size_t dim = groups.front().front().dimension();

  std::vector<double> flips(dim, 0.0);
  std::vector<std::size_t> ones(dim, 0);
  std::size_t genuine_count = 0;
  for (const auto& g : groups) {
    const Bits c = consensus(g);
    if (c.size() != dim) throw ShapeError("subjects differ in dimension");
    for (std::size_t i = 0; i < dim; ++i) ones[i] += c[i];
    if (g.size() < 2) continue;
    for (const auto& s : g)
      for (std::size_t i = 0; i < dim; ++i) flips[i] += (s.bits[i] != c[i]);
    genuine_count += g.size();
  }
  const double subjects = static_cast<double>(groups.size());
  const double pairs = subjects * (subjects - 1.0) / 2.0;
  BitChannelModel out{std::vector<double>(dim), std::vector<double>(dim)};
  for (std::size_t i = 0; i < dim; ++i) {
    out.p_genuine[i] = flips[i] / static_cast<double>(genuine_count);
    const double o = static_cast<double>(ones[i]);
    out.p_impostor[i] = o * (subjects - o) / pairs;
  }
  return out;
}

}  // namespace mbsketch
