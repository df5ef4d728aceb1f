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
#include <iterator>
#include <span>
#include <vector>

#include "mbsketch/error.hpp"

namespace mbsketch::analysis {

// Scores are distances: a comparison is accepted when its score <= threshold.

struct ErrorRates {
  double threshold = 0.0;
  double far = 0.0;  // impostor scores accepted
  double frr = 0.0;  // genuine scores rejected
};

/// FAR/FRR at every distinct observed score, ascending, preceded by a point
/// below every score (FAR = 0, FRR = 1).
inline std::vector<ErrorRates> error_rate_sweep(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty()) throw DomainError("genuine and impostor scores must be non-empty");
  std::vector<double> g(genuine.begin(), genuine.end()), im(impostor.begin(), impostor.end());
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> thresholds;
  thresholds.reserve(g.size() + im.size());
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<ErrorRates> out;
  out.reserve(thresholds.size() + 1);
  out.push_back({thresholds.front(), 0.0, 1.0});
  const double ng = static_cast<double>(g.size()), ni = static_cast<double>(im.size());
  std::size_t gi = 0, ii = 0;
  for (double th : thresholds) {
    while (gi < g.size() && g[gi] <= th) ++gi;
    while (ii < im.size() && im[ii] <= th) ++ii;
    out.push_back({th, static_cast<double>(ii) / ni, 1.0 - static_cast<double>(gi) / ng});
  }
  return out;
}

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/*
 * Equal error rate. FAR - FRR is non-decreasing along the sweep; the EER is
 * taken where it first reaches zero, linearly interpolated between the two
 * adjacent thresholds when no observed threshold hits it exactly.
 */
inline EerResult eer(std::span<const double> genuine, std::span<const double> impostor) {
  const auto sweep = error_rate_sweep(genuine, impostor);
  if (sweep.size() == 2)
    throw DomainError("EER undefined: every score is identical");
  for (std::size_t j = 1; j < sweep.size(); ++j) {
    const double diff = sweep[j].far - sweep[j].frr;
    if (diff < 0.0) continue;
    if (diff == 0.0) return {sweep[j].far, sweep[j].threshold};
    const auto& a = sweep[j - 1];
    const auto& b = sweep[j];
    const double da = a.far - a.frr;
    const double lambda = -da / (diff - da);
    return {a.far + lambda * (b.far - a.far), a.threshold + lambda * (b.threshold - a.threshold)};
  }
  return {sweep.back().far, sweep.back().threshold};  // unreachable: last point has FAR = 1, FRR = 0
}

struct RocPoint {
  double far = 0.0;
  double gar = 0.0;
};

/// (FAR, GAR) from the strictest to the loosest threshold; starts at (0, 0)
/// and ends at (1, 1).
inline std::vector<RocPoint> roc(std::span<const double> genuine, std::span<const double> impostor) {
  const auto sweep = error_rate_sweep(genuine, impostor);
  std::vector<RocPoint> out;
  out.reserve(sweep.size());
  for (const auto& r : sweep) out.push_back({r.far, 1.0 - r.frr});
  return out;
}

/// Best GAR among operating points whose FAR does not exceed `far`.
inline double gar_at_far(std::span<const RocPoint> curve, double far) {
  double best = 0.0;
  for (const auto& p : curve)
    if (p.far <= far) best = std::max(best, p.gar);
  return best;
}

inline double roc_auc(std::span<const RocPoint> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    area += (curve[i].far - curve[i - 1].far) * (curve[i].gar + curve[i - 1].gar) / 2.0;
  return area;
}

}  // namespace mbsketch::analysis
