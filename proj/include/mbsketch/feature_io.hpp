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

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mbsketch/error.hpp"
#include "mbsketch/feature_model.hpp"

namespace mbsketch {

// JSONL: {"subject_id": "...", "sample_id": "...", "bits": "0101..."} per line
// (sample_id optional). CSV: subject_id,sample_id,b0,b1,...,b{J-1}.
enum class FeatureFormat { kJsonl, kCsv };

inline FeatureFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return FeatureFormat::kCsv;
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return FeatureFormat::kJsonl;
  throw FormatError("cannot infer feature format from extension '" + ext + "'");
}

inline FeatureFormat parse_feature_format(const std::string& name) {
  if (name == "jsonl") return FeatureFormat::kJsonl;
  if (name == "csv") return FeatureFormat::kCsv;
  throw FormatError("unknown feature format '" + name + "'");
}

namespace detail {

inline std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline Bits parse_bit_string(const std::string& text, std::size_t line) {
  Bits bits;
  bits.reserve(text.size());
  for (char ch : text) {
    if (ch != '0' && ch != '1') throw FormatError("non-binary value", line);
    bits.push_back(static_cast<std::uint8_t>(ch - '0'));
  }
  return bits;
}

inline std::string bit_string(const Bits& bits) {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? '1' : '0';
  return s;
}

}  // namespace detail

/// Parses and validates a feature file. Every vector must share one J; a
/// (subject_id, sample_id) pair may appear only once. Missing sample ids are
/// numbered per subject in order of appearance.
inline std::vector<FeatureVector> read_features(std::istream& in, FeatureFormat format) {
  std::vector<FeatureVector> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, std::size_t> per_subject;
  std::size_t dim = 0;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = detail::trim(raw);
    if (text.empty()) continue;
    FeatureVector v;
    if (format == FeatureFormat::kJsonl) {
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error&) {
        throw FormatError("malformed JSON record", line);
      }
      if (!rec.is_object() || !rec.contains("subject_id") || !rec.contains("bits") || !rec["bits"].is_string())
        throw FormatError("record needs string fields subject_id and bits", line);
      const auto& sid = rec["subject_id"];
      v.subject_id = sid.is_string() ? sid.get<std::string>() : sid.dump();
      if (rec.contains("sample_id")) {
        const auto& s = rec["sample_id"];
        v.sample_id = s.is_string() ? s.get<std::string>() : s.dump();
      }
      v.bits = detail::parse_bit_string(rec["bits"].get<std::string>(), line);
    } else {
      std::vector<std::string> fields;
      std::stringstream ss(text);
      std::string f;
      while (std::getline(ss, f, ',')) fields.push_back(detail::trim(f));
      if (line == 1 && !fields.empty() && fields[0] == "subject_id") continue;  // header
      if (fields.size() < 3) throw FormatError("expected subject_id,sample_id and at least one bit", line);
      v.subject_id = fields[0];
      v.sample_id = fields[1];
      v.bits.reserve(fields.size() - 2);
      for (std::size_t i = 2; i < fields.size(); ++i) {
        if (fields[i] != "0" && fields[i] != "1") throw FormatError("non-binary value", line);
        v.bits.push_back(static_cast<std::uint8_t>(fields[i][0] - '0'));
      }
    }
    if (v.subject_id.empty()) throw FormatError("empty subject_id", line);
    if (v.bits.empty()) throw FormatError("empty bit vector", line);
    if (dim == 0) dim = v.dimension();
    if (v.dimension() != dim)
      throw FormatError("mixed dimensions (" + std::to_string(v.dimension()) + " vs " + std::to_string(dim) + ")",
                        line);
    std::size_t& ordinal = per_subject[v.subject_id];
    if (v.sample_id.empty()) v.sample_id = std::to_string(ordinal);
    ++ordinal;
    if (!seen.emplace(v.subject_id, v.sample_id).second)
      throw FormatError("duplicate (subject, sample) key (" + v.subject_id + ", " + v.sample_id + ")", line);
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<FeatureVector> read_features(const std::filesystem::path& path, FeatureFormat format) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return read_features(in, format);
}

inline std::vector<FeatureVector> read_features(const std::filesystem::path& path) {
  return read_features(path, format_from_path(path));
}

inline void write_features(std::ostream& out, const std::vector<FeatureVector>& vectors, FeatureFormat format) {
  for (const auto& v : vectors) {
    if (format == FeatureFormat::kJsonl) {
      nlohmann::ordered_json rec;
      rec["subject_id"] = v.subject_id;
      if (!v.sample_id.empty()) rec["sample_id"] = v.sample_id;
      rec["bits"] = detail::bit_string(v.bits);
      out << rec.dump() << '\n';
    } else {
      out << v.subject_id << ',' << v.sample_id;
      for (auto b : v.bits) out << ',' << static_cast<int>(b);
      out << '\n';
    }
  }
}

inline void write_features(const std::filesystem::path& path, const std::vector<FeatureVector>& vectors,
                           FeatureFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  write_features(out, vectors, format);
}

/// Groups samples by subject, keeping first-appearance order.
inline std::vector<std::vector<FeatureVector>> group_by_subject(std::vector<FeatureVector> vectors) {
  std::vector<std::vector<FeatureVector>> groups;
  std::map<std::string, std::size_t> slot;
  for (auto& v : vectors) {
    auto [it, fresh] = slot.emplace(v.subject_id, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(std::move(v));
  }
  return groups;
}

/// Builds a population from recorded samples; references are per-subject
/// majority vectors and the channel is estimated from the samples.
inline SubjectPopulation population_from_samples(std::vector<FeatureVector> vectors) {
  if (vectors.empty()) throw FormatError("no feature vectors");
  SubjectPopulation pop;
  pop.recorded = group_by_subject(std::move(vectors));
  pop.channel = estimate_channel(pop.recorded);
  for (const auto& g : pop.recorded)
    pop.references.push_back(FeatureVector{g.front().subject_id, "consensus", consensus(g)});
  return pop;
}

inline SubjectPopulation ingest_features(const std::filesystem::path& path, FeatureFormat format) {
  return population_from_samples(read_features(path, format));
}

inline SubjectPopulation ingest_features(const std::filesystem::path& path) {
  return ingest_features(path, format_from_path(path));
}

}  // namespace mbsketch
