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

#include <cstdint>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "mbsketch/error.hpp"
#include "mbsketch/feature_model.hpp"
#include "mbsketch/parallel.hpp"
#include "mbsketch/pipeline.hpp"
#include "mbsketch/random.hpp"

namespace mbsketch::analysis {

/// Unknown key: the impostor presents a synthesized key of their own.
/// Stolen key: the impostor presents the victim's key.
enum class Scenario { kUnknownKey, kStolenKey };

inline const char* to_string(Scenario s) { return s == Scenario::kUnknownKey ? "unknown_key" : "stolen_key"; }

inline Scenario parse_scenario(const std::string& name) {
  if (name == "unknown_key" || name == "unknown") return Scenario::kUnknownKey;
  if (name == "stolen_key" || name == "stolen") return Scenario::kStolenKey;
  throw ParameterError("unknown scenario '" + name + "' (expected unknown_key|stolen_key)");
}

struct ScenarioConfig {
  Scenario scenario = Scenario::kStolenKey;
  std::size_t n_bits = 768;
  std::size_t k_bits = 104;
  std::size_t trials = 20;  // genuine probes per subject
  std::uint64_t seed = 0;

  void validate() const {
    if (k_bits > n_bits || n_bits % 8 != 0 || k_bits % 8 != 0)
      throw ParameterError("scenario needs k <= n with both multiples of 8");
  }
};

/// Normalized Hamming distances.
struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
  std::vector<double> attacker_stolen;
};

/// Enrollment sample plus genuine probes for one subject.
struct SubjectSamples {
  FeatureVector enrollment;
  std::vector<FeatureVector> probes;
};

/*
 * Synthetic populations draw 1 + probes fresh samples per subject; ingested
 * ones use the first recorded sample for enrollment and up to `probes` of the
 * rest. The result depends only on (population, probes, seed).
 */
inline std::vector<SubjectSamples> draw_samples(const SubjectPopulation& pop, std::size_t probes,
                                                std::uint64_t seed) {
  std::vector<SubjectSamples> out(pop.size());
  for (std::size_t s = 0; s < pop.size(); ++s) {
    if (pop.has_recorded_samples()) {
      const auto& rec = pop.recorded[s];
      out[s].enrollment = rec.front();
      for (std::size_t i = 1; i < rec.size() && out[s].probes.size() < probes; ++i) out[s].probes.push_back(rec[i]);
    } else {
      auto drawn = sample_genuine(pop, s, probes + 1, derive_seed(seed, {0x44524157ULL}));
      out[s].enrollment = std::move(drawn.front());
      out[s].probes.assign(std::make_move_iterator(drawn.begin() + 1), std::make_move_iterator(drawn.end()));
    }
  }
  return out;
}

/// Keys for subject s are issued from derive_seed(seed, {kSubjectKeyStream, s}),
/// so every analysis seeded alike hands a subject the same key.
inline constexpr std::uint64_t kSubjectKeyStream = 0x55534b;
inline constexpr std::uint64_t kSynthKeyStream = 0x53594e;

inline UserKey subject_key(const SubjectPopulation& pop, std::span<const double> reliability, std::size_t subject,
                           std::size_t selection, std::uint64_t seed) {
  return issue_key(pop.dimension(), selection, reliability, derive_seed(seed, {kSubjectKeyStream, subject}));
}

/// Impostor's own key in the unknown-key scenario: uniform random selection, no reliability ordering.
inline UserKey synthesized_key(std::size_t dimension, std::size_t selection, std::size_t attacker,
                               std::size_t victim, std::uint64_t seed) {
  return issue_key(dimension, selection, derive_seed(seed, {kSynthKeyStream, attacker, victim}));
}

/*
 * Cancelable-template distance distributions.
 *   genuine:          enrollment vs each probe of the same subject, subject's key
 *   impostor:         per `scenario`, one probe of every other subject against the victim
 *   attacker_stolen:  always the stolen-key distribution
 */
inline ScoreSet score_distributions(const SubjectPopulation& pop, std::size_t selection, Scenario scenario,
                                    std::uint64_t seed, std::size_t probes = 20, unsigned jobs = 1) {
  if (pop.size() < 2) throw ParameterError("score distributions need >= 2 subjects");
  const std::size_t dim = pop.dimension();
  if (selection > dim) throw ParameterError("G > J");
  const auto reliability = pop.channel.reliability();
  const auto samples = draw_samples(pop, probes, seed);
  const std::size_t n = pop.size();

  struct PerSubject {
    std::vector<double> genuine, unknown, stolen;
  };
  std::vector<UserKey> keys(n);
  std::vector<Bits> enrolled(n);
  for (std::size_t s = 0; s < n; ++s) {
    keys[s] = subject_key(pop, reliability, s, selection, seed);
    enrolled[s] = select_bits(samples[s].enrollment, keys[s]).bits;
  }
  std::vector<PerSubject> parts(n);
  parallel_for(n, jobs, [&](std::size_t v) {
    auto& part = parts[v];
    for (const auto& p : samples[v].probes)
      part.genuine.push_back(normalized_hamming(enrolled[v], select_bits(p, keys[v]).bits));
    for (std::size_t a = 0; a < n; ++a) {
      if (a == v || samples[a].probes.empty()) continue;
      const FeatureVector& probe = samples[a].probes[v % samples[a].probes.size()];
      part.stolen.push_back(normalized_hamming(enrolled[v], select_bits(probe, keys[v]).bits));
      const UserKey own = synthesized_key(dim, selection, a, v, seed);
      part.unknown.push_back(normalized_hamming(enrolled[v], select_bits(probe, own).bits));
    }
  });
  ScoreSet out;
  for (auto& p : parts) {
    out.genuine.insert(out.genuine.end(), p.genuine.begin(), p.genuine.end());
    out.attacker_stolen.insert(out.attacker_stolen.end(), p.stolen.begin(), p.stolen.end());
    auto& imp = scenario == Scenario::kUnknownKey ? p.unknown : p.stolen;
    out.impostor.insert(out.impostor.end(), imp.begin(), imp.end());
  }
  return out;
}

}  // namespace mbsketch::analysis
