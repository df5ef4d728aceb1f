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
#include <span>
#include <vector>

#include "mbsketch/analysis/scores.hpp"
#include "mbsketch/error.hpp"
#include "mbsketch/feature_model.hpp"
#include "mbsketch/parallel.hpp"
#include "mbsketch/pipeline.hpp"

namespace mbsketch::analysis {

struct LinkabilityReport {
  std::vector<double> bin_centers;
  std::vector<double> d_local;        // D(s) per bin
  std::vector<double> mated_hist;     // raw fraction per bin
  std::vector<double> nonmated_hist;  // raw fraction per bin
  double d_sys = 0.0;
  double omega = 1.0;
  std::size_t mated_count = 0;
  std::size_t nonmated_count = 0;
};

/*
 * Equal-width bins over the observed score range. Bin probabilities for the
 * likelihood ratio use add-one smoothing; D_sys weights D(s) by the raw mated
 * fraction so it stays in [0, 1].
 */
inline LinkabilityReport compute_linkability(std::span<const double> mated, std::span<const double> nonmated,
                                             std::size_t bins = 50, double omega = 1.0) {
  if (mated.empty() || nonmated.empty()) throw DomainError("mated and non-mated scores must be non-empty");
  if (bins == 0) throw ParameterError("bin count must be positive");
  if (!(omega > 0.0)) throw ParameterError("prior ratio omega must be positive");

  const auto [mlo, mhi] = std::minmax_element(mated.begin(), mated.end());
  const auto [nlo, nhi] = std::minmax_element(nonmated.begin(), nonmated.end());
  const double lo = std::min(*mlo, *nlo), hi = std::max(*mhi, *nhi);
  if (hi == lo) bins = 1;
  const double width = hi == lo ? 1.0 : (hi - lo) / static_cast<double>(bins);
  auto bin_of = [&](double s) {
    return std::min(bins - 1, static_cast<std::size_t>((s - lo) / width));
  };

  std::vector<std::size_t> hm(bins, 0), hn(bins, 0);
  for (double s : mated) ++hm[bin_of(s)];
  for (double s : nonmated) ++hn[bin_of(s)];

  LinkabilityReport r;
  r.omega = omega;
  r.mated_count = mated.size();
  r.nonmated_count = nonmated.size();
  const double nm = static_cast<double>(mated.size()), nn = static_cast<double>(nonmated.size());
  const double b = static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    r.bin_centers.push_back(hi == lo ? lo : lo + (static_cast<double>(i) + 0.5) * width);
    const double pm = (static_cast<double>(hm[i]) + 1.0) / (nm + b);
    const double pn = (static_cast<double>(hn[i]) + 1.0) / (nn + b);
    const double olr = omega * pm / pn;
    const double d = std::clamp(2.0 * olr / (1.0 + olr) - 1.0, 0.0, 1.0);
    r.d_local.push_back(d);
    r.mated_hist.push_back(static_cast<double>(hm[i]) / nm);
    r.nonmated_hist.push_back(static_cast<double>(hn[i]) / nn);
    r.d_sys += d * r.mated_hist.back();
  }
  r.d_sys = std::clamp(r.d_sys, 0.0, 1.0);
  return r;
}

struct LinkageScores {
  std::vector<double> mated;
  std::vector<double> nonmated;
};

inline constexpr std::uint64_t kDatabaseKeyStream = 0x444253;

/*
 * Database d holds, for every subject, the sketch of its d-th sample under a
 * key issued for (d, subject). Linkage score = Hamming distance between two
 * sketches normalized by k. Mated: same subject in two databases. Non-mated:
 * different subjects in two databases. Under the reject policy, undecodable
 * templates are left out.
 */
inline LinkageScores linkage_scores(const SubjectPopulation& pop, const RsCodeParams& params,
                                    std::size_t num_databases, std::uint64_t seed,
                                    DecodeFailurePolicy policy = DecodeFailurePolicy::kSystematic,
                                    unsigned jobs = 1) {
  if (num_databases < 2) throw ParameterError("unlinkability needs >= 2 databases");
  if (pop.size() < 2) throw ParameterError("unlinkability needs >= 2 subjects");
  if (params.n_bits() > pop.dimension()) throw ParameterError("G = 8N exceeds J");
  const SketchPipeline pipe(params, policy, [] { return std::string(); });
  const auto reliability = pop.channel.reliability();
  const auto samples = draw_samples(pop, num_databases - 1, seed);
  const std::size_t n = pop.size();

  // sketches[d][s]
  std::vector<std::vector<std::optional<SecureSketch>>> sketches(num_databases,
                                                                 std::vector<std::optional<SecureSketch>>(n));
  parallel_for(n, jobs, [&](std::size_t s) {
    for (std::size_t d = 0; d < num_databases; ++d) {
      const auto& probes = samples[s].probes;
      const FeatureVector& f = d == 0 || probes.empty() ? samples[s].enrollment : probes[(d - 1) % probes.size()];
      const UserKey key = issue_key(pop.dimension(), params.n_bits(), reliability,
                                    derive_seed(seed, {kDatabaseKeyStream, d, s}));
      sketches[d][s] = pipe.derive_sketch(f, key);
    }
  });

  LinkageScores out;
  for (std::size_t d1 = 0; d1 < num_databases; ++d1)
    for (std::size_t d2 = d1 + 1; d2 < num_databases; ++d2)
      for (std::size_t s1 = 0; s1 < n; ++s1)
        for (std::size_t s2 = 0; s2 < n; ++s2) {
          const auto& a = sketches[d1][s1];
          const auto& b = sketches[d2][s2];
          if (!a || !b) continue;
          const double score = normalized_hamming(a->message_bits, b->message_bits);
          (s1 == s2 ? out.mated : out.nonmated).push_back(score);
        }
  return out;
}

inline LinkabilityReport unlinkability(const SubjectPopulation& pop, const RsCodeParams& params,
                                       std::size_t num_databases, std::uint64_t seed,
                                       DecodeFailurePolicy policy = DecodeFailurePolicy::kSystematic,
                                       std::size_t bins = 50, double omega = 1.0, unsigned jobs = 1) {
  const auto scores = linkage_scores(pop, params, num_databases, seed, policy, jobs);
  if (scores.mated.empty() || scores.nonmated.empty())
    throw DecodeFailure("no decodable templates to link");
  return compute_linkability(scores.mated, scores.nonmated, bins, omega);
}

}  // namespace mbsketch::analysis
