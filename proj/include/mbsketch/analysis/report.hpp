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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mbsketch/analysis/gs_curve.hpp"
#include "mbsketch/analysis/scores.hpp"
#include "mbsketch/analysis/unlinkability.hpp"
#include "mbsketch/analysis/verification.hpp"
#include "mbsketch/error.hpp"
#include "mbsketch/format.hpp"

namespace mbsketch::analysis {

/*
 * CSV with leading "# key: value" header rows naming the experiment and its
 * parameters, then one column-name row and the data rows.
 */
struct CsvTable {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw ShapeError("CSV row width differs from header");
    rows.push_back(std::move(row));
  }

  std::string str() const {
    std::ostringstream os;
    os << "# experiment: " << experiment << '\n';
    for (const auto& [k, v] : params) os << "# " << k << ": " << v << '\n';
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
      os << '\n';
    };
    line(columns);
    for (const auto& r : rows) line(r);
    return os.str();
  }
};

struct JsonReport {
  std::string experiment;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();

  std::string str() const {
    nlohmann::ordered_json doc;
    doc["experiment"] = experiment;
    doc["params"] = params;
    doc["seed"] = seed;
    doc["metrics"] = metrics;
    return doc.dump(2) + "\n";
  }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("short write to '" + path.string() + "'");
}

inline CsvTable gs_curve_csv(const GsCurve& c) {
  CsvTable t{"gs_curve",
             {{"n_bits", std::to_string(c.n_bits)}, {"scenario", to_string(c.scenario)}, {"policy", to_string(c.policy)}},
             {"k", "GAR", "FAR", "K", "enroll_failure_rate", "genuine_decode_failure_rate", "genuine_trials",
              "impostor_trials"},
             {}};
  for (const auto& p : c.points)
    t.add_row({std::to_string(p.k_bits), format_number(p.gar), format_number(p.far), std::to_string(p.k_symbols),
               format_number(p.enroll_failure_rate), format_number(p.genuine_decode_failure_rate),
               std::to_string(p.genuine_trials), std::to_string(p.impostor_trials)});
  return t;
}

inline CsvTable roc_csv(std::span<const RocPoint> curve, std::string label) {
  CsvTable t{"roc", {{"label", std::move(label)}}, {"FAR", "GAR"}, {}};
  for (const auto& p : curve) t.add_row({format_number(p.far), format_number(p.gar)});
  return t;
}

inline CsvTable linkability_csv(const LinkabilityReport& r) {
  CsvTable t{"unlinkability",
             {{"omega", format_number(r.omega)}, {"D_sys", format_number(r.d_sys)},
              {"mated", std::to_string(r.mated_count)}, {"nonmated", std::to_string(r.nonmated_count)}},
             {"s", "D(s)", "mated_fraction", "nonmated_fraction"},
             {}};
  for (std::size_t i = 0; i < r.bin_centers.size(); ++i)
    t.add_row({format_number(r.bin_centers[i]), format_number(r.d_local[i]), format_number(r.mated_hist[i]),
               format_number(r.nonmated_hist[i])});
  return t;
}

/// One row per score; `bits` is the distance before normalization.
inline CsvTable scores_csv(const ScoreSet& s, std::size_t length, std::string scenario) {
  CsvTable t{"distributions", {{"scenario", std::move(scenario)}, {"length", std::to_string(length)}},
             {"kind", "distance", "bits"}, {}};
  auto emit = [&](const char* kind, const std::vector<double>& v) {
    for (double d : v)
      t.add_row({kind, format_number(d),
                 std::to_string(static_cast<long long>(std::llround(d * static_cast<double>(length))))});
  };
  emit("genuine", s.genuine);
  emit("impostor", s.impostor);
  emit("attacker_stolen", s.attacker_stolen);
  return t;
}

}  // namespace mbsketch::analysis
