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
#include <optional>
#include <string>
#include <vector>

#include "mbsketch/analysis/scores.hpp"
#include "mbsketch/error.hpp"
#include "mbsketch/feature_model.hpp"
#include "mbsketch/parallel.hpp"
#include "mbsketch/pipeline.hpp"
#include "mbsketch/template_store.hpp"

namespace mbsketch::analysis {

struct GsPoint {
  std::size_t k_symbols = 0;
  std::size_t k_bits = 0;
  double gar = 0.0;
  double far = 0.0;
  double enroll_failure_rate = 0.0;   // subjects with no decodable key
  double genuine_decode_failure_rate = 0.0;
  std::size_t genuine_trials = 0;
  std::size_t impostor_trials = 0;
};

struct GsCurve {
  std::size_t n_bits = 0;
  Scenario scenario = Scenario::kStolenKey;
  DecodeFailurePolicy policy = DecodeFailurePolicy::kSystematic;
  std::vector<GsPoint> points;  // k strictly increasing
};

struct GsOptions {
  Scenario scenario = Scenario::kStolenKey;
  DecodeFailurePolicy policy = DecodeFailurePolicy::kSystematic;
  std::size_t probes = 19;  // genuine probes per subject besides the enrollment sample
  unsigned jobs = 1;
};

/*
 * One point per K. Every subject enrolls with enroll_with_fresh_key under the
 * subject key seed, so for a fixed seed the n = 256 key is a prefix of the
 * n = 768 key when reliabilities tie. A subject whose enrollment is exhausted
 * counts every one of its genuine probes as a rejection and is not an
 * impostor target.
 */
inline GsCurve gs_curve(const SubjectPopulation& pop, std::size_t n_symbols, std::vector<std::size_t> k_sweep,
                        std::uint64_t seed, const GsOptions& opt = {}) {
  if (pop.size() < 2) throw ParameterError("G-S curve needs >= 2 subjects");
  if (k_sweep.empty()) throw ParameterError("empty K sweep");
  std::sort(k_sweep.begin(), k_sweep.end());
  if (std::adjacent_find(k_sweep.begin(), k_sweep.end()) != k_sweep.end())
    throw ParameterError("K sweep has duplicates");
  if (8 * n_symbols > pop.dimension()) throw ParameterError("G = 8N exceeds J");

  const auto samples = draw_samples(pop, opt.probes, seed);
  const auto reliability = pop.channel.reliability();
  const std::size_t n = pop.size();

  GsCurve curve{8 * n_symbols, opt.scenario, opt.policy, {}};
  for (std::size_t k : k_sweep) {
    const SketchPipeline pipe(RsCodeParams::shortened(n_symbols, k), opt.policy, [] { return std::string(); });
    TemplateStore store(pipe.params());

    struct PerSubject {
      std::optional<UserKey> key;
      std::size_t granted = 0, decode_failures = 0, trials = 0;
      std::size_t impostor_granted = 0, impostor_trials = 0;
    };
    std::vector<PerSubject> parts(n);
    parallel_for(n, opt.jobs, [&](std::size_t s) {
      try {
        auto e = pipe.enroll_with_fresh_key(samples[s].enrollment, reliability, store,
                                            pop.references[s].subject_id,
                                            derive_seed(seed, {kSubjectKeyStream, s}));
        parts[s].key = std::move(e.key);
      } catch (const DecodeFailure&) {
      }
    });
    parallel_for(n, opt.jobs, [&](std::size_t v) {
      auto& part = parts[v];
      const std::string& id = pop.references[v].subject_id;
      part.trials = samples[v].probes.size();
      if (!part.key) return;
      for (const auto& probe : samples[v].probes) {
        const auto out = pipe.authenticate(probe, *part.key, store, id);
        part.granted += out.granted;
        part.decode_failures += out.reason == DenyReason::kDecodeFailure;
      }
      for (std::size_t a = 0; a < n; ++a) {
        if (a == v || samples[a].probes.empty()) continue;
        const FeatureVector& probe = samples[a].probes[v % samples[a].probes.size()];
        const UserKey key = opt.scenario == Scenario::kStolenKey
                                ? *part.key
                                : synthesized_key(pop.dimension(), 8 * n_symbols, a, v, seed);
        part.impostor_granted += pipe.authenticate(probe, key, store, id).granted;
        ++part.impostor_trials;
      }
    });

    GsPoint pt;
    pt.k_symbols = k;
    pt.k_bits = 8 * k;
    std::size_t granted = 0, failures = 0, enrolled = 0, imp_granted = 0;
    for (const auto& p : parts) {
      enrolled += p.key.has_value();
      granted += p.granted;
      failures += p.decode_failures;
      pt.genuine_trials += p.trials;
      imp_granted += p.impostor_granted;
      pt.impostor_trials += p.impostor_trials;
    }
    pt.enroll_failure_rate = 1.0 - static_cast<double>(enrolled) / static_cast<double>(n);
    if (pt.genuine_trials) {
      pt.gar = static_cast<double>(granted) / static_cast<double>(pt.genuine_trials);
      pt.genuine_decode_failure_rate = static_cast<double>(failures) / static_cast<double>(pt.genuine_trials);
    }
    if (pt.impostor_trials) pt.far = static_cast<double>(imp_granted) / static_cast<double>(pt.impostor_trials);
    curve.points.push_back(pt);
  }
  return curve;
}

}  // namespace mbsketch::analysis
