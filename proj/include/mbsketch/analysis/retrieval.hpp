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
#include <bit>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mbsketch/error.hpp"
#include "mbsketch/feature_model.hpp"
#include "mbsketch/parallel.hpp"

namespace mbsketch::analysis {

struct LabeledCode {
  Bits bits;
  int label = 0;
};

struct RetrievalOptions {
  std::size_t map_cutoff = 1000;  // R
  std::size_t radius = 2;
  std::vector<std::size_t> top_k{1, 10, 100, 1000};
  unsigned jobs = 1;
};

struct RetrievalReport {
  double map = 0.0;
  double precision_at_radius = 0.0;
  std::size_t queries_without_neighbors = 0;  // scored 0 in precision_at_radius
  std::vector<std::size_t> top_k;
  std::vector<double> precision_at_k;
};

namespace detail {

inline std::vector<std::uint64_t> pack_words(const Bits& bits) {
  std::vector<std::uint64_t> w((bits.size() + 63) / 64, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) w[i / 64] |= std::uint64_t{1} << (i % 64);
  return w;
}

}  // namespace detail

/*
 * Database ranked by Hamming distance to each query, ties by database index.
 * AP@R = (1 / relevant-in-top-R) * sum of precision at each relevant rank in
 * the top R; a query with no relevant item in the top R scores 0.
 */
inline RetrievalReport retrieval_metrics(std::span<const LabeledCode> database, std::span<const LabeledCode> queries,
                                         const RetrievalOptions& opt = {}) {
  if (database.empty()) throw DomainError("empty retrieval database");
  if (queries.empty()) throw DomainError("no retrieval queries");
  const std::size_t len = database.front().bits.size();
  auto check = [&](const LabeledCode& c) {
    if (c.bits.size() != len) throw ShapeError("retrieval codes differ in length");
  };
  std::for_each(database.begin(), database.end(), check);
  std::for_each(queries.begin(), queries.end(), check);

  std::vector<std::vector<std::uint64_t>> db_words;
  db_words.reserve(database.size());
  for (const auto& c : database) db_words.push_back(detail::pack_words(c.bits));

  struct PerQuery {
    double ap = 0.0, p_radius = 0.0;
    bool no_neighbors = false;
    std::vector<double> p_at_k;
  };
  std::vector<PerQuery> per(queries.size());
  parallel_for(queries.size(), opt.jobs, [&](std::size_t q) {
    const auto qw = detail::pack_words(queries[q].bits);
    std::vector<std::uint32_t> dist(database.size());
    for (std::size_t i = 0; i < database.size(); ++i) {
      std::uint32_t d = 0;
      for (std::size_t w = 0; w < qw.size(); ++w) d += static_cast<std::uint32_t>(std::popcount(qw[w] ^ db_words[i][w]));
      dist[i] = d;
    }
    std::vector<std::size_t> order(database.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

    auto& out = per[q];
    const int label = queries[q].label;
    const std::size_t cutoff = std::min(opt.map_cutoff, order.size());
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t r = 0; r < cutoff; ++r)
      if (database[order[r]].label == label) sum += static_cast<double>(++hits) / static_cast<double>(r + 1);
    out.ap = hits ? sum / static_cast<double>(hits) : 0.0;

    std::size_t near = 0, near_hits = 0;
    for (std::size_t r = 0; r < order.size() && dist[order[r]] <= opt.radius; ++r) {
      ++near;
      near_hits += database[order[r]].label == label;
    }
    out.no_neighbors = near == 0;
    out.p_radius = near ? static_cast<double>(near_hits) / static_cast<double>(near) : 0.0;

    for (std::size_t k : opt.top_k) {
      const std::size_t top = std::min(k, order.size());
      std::size_t h = 0;
      for (std::size_t r = 0; r < top; ++r) h += database[order[r]].label == label;
      out.p_at_k.push_back(top ? static_cast<double>(h) / static_cast<double>(top) : 0.0);
    }
  });

  RetrievalReport rep;
  rep.top_k = opt.top_k;
  rep.precision_at_k.assign(opt.top_k.size(), 0.0);
  for (const auto& p : per) {
    rep.map += p.ap;
    rep.precision_at_radius += p.p_radius;
    rep.queries_without_neighbors += p.no_neighbors;
    for (std::size_t i = 0; i < p.p_at_k.size(); ++i) rep.precision_at_k[i] += p.p_at_k[i];
  }
  const double nq = static_cast<double>(queries.size());
  rep.map /= nq;
  rep.precision_at_radius /= nq;
  for (double& v : rep.precision_at_k) v /= nq;
  return rep;
}

}  // namespace mbsketch::analysis
