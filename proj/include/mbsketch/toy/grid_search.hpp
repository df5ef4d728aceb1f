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
#include <array>
#include <functional>
#include <vector>

#include "mbsketch/error.hpp"
#include "mbsketch/parallel.hpp"

namespace mbsketch::toy {

struct GridPoint {
  double alpha = 1.0, beta = 1.0, gamma = 1.0;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

struct GridResult {
  GridPoint best;
  double score = 0.0;
  std::size_t iterations = 0;
  bool converged = false;  // false: max_iterations hit, `best` is the best seen
};

/// {1, 2, 4, ..., 30}.
inline std::vector<double> default_grid_candidates() {
  std::vector<double> s{1.0};
  for (int i = 1; i <= 15; ++i) s.push_back(2.0 * i);
  return s;
}

/*
 * Iterative coordinate grid search. Each iteration has three steps (beta,
 * gamma, alpha); every step sweeps one parameter over S while the other two
 * stay at the previous iteration's values (1 at the start). Ties go to the
 * smaller value. Stops when an iteration leaves all three unchanged.
 * Higher scores are better.
 */
inline GridResult grid_search(std::vector<double> candidates, const std::function<double(const GridPoint&)>& score,
                              std::size_t max_iterations = 20, unsigned jobs = 1) {
  if (candidates.empty()) throw ParameterError("grid search needs a non-empty candidate set");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  GridPoint current;
  GridResult result;
  bool have_best = false;
  const std::size_t S = candidates.size();
  for (std::size_t it = 0; it < max_iterations; ++it) {
    std::vector<GridPoint> cells;
    cells.reserve(3 * S);
    for (double b : candidates) cells.push_back({current.alpha, b, current.gamma});
    for (double g : candidates) cells.push_back({current.alpha, current.beta, g});
    for (double a : candidates) cells.push_back({a, current.beta, current.gamma});
    std::vector<double> scores(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t i) { scores[i] = score(cells[i]); });

    std::array<std::size_t, 3> pick{};  // per step, index into candidates
    for (std::size_t step = 0; step < 3; ++step)
      for (std::size_t j = 1; j < S; ++j)
        if (scores[step * S + j] > scores[step * S + pick[step]]) pick[step] = j;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (!have_best || scores[i] > result.score) {
        result.score = scores[i];
        result.best = cells[i];
        have_best = true;
      }

    const GridPoint next{candidates[pick[2]], candidates[pick[0]], candidates[pick[1]]};
    result.iterations = it + 1;
    if (next == current) {
      result.best = current;
      result.score = score(current);
      result.converged = true;
      return result;
    }
    current = next;
  }
  return result;
}

}  // namespace mbsketch::toy
