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

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mbsketch/error.hpp"
#include "mbsketch/reed_solomon.hpp"
#include "mbsketch/sha256.hpp"

namespace mbsketch {

/// What the database keeps per identity: a digest and public code geometry.
struct SecureTemplate {
  std::string subject_id;
  Digest digest{};
  RsCodeParams code_params;
  std::string created_at;
};

inline std::string utc_timestamp_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/*
 * subject_id -> SecureTemplate. Readers share, writers are exclusive.
 *
 * File form:
 *   {"version":1,"code_params":{"m":8,"N":96,"K":13},
 *    "records":[{"subject_id":..,"digest_hex":..,"created_at":..}, ...]}
 * Records are written in subject_id order. save() writes a sibling temp file
 * and renames it over the target.
 */
class TemplateStore {
 public:
  static constexpr int kVersion = 1;

  explicit TemplateStore(RsCodeParams params) : params_(params) {}

  TemplateStore(const TemplateStore& other) {
    std::shared_lock lock(other.mutex_);
    params_ = other.params_;
    records_ = other.records_;
  }
  TemplateStore& operator=(const TemplateStore&) = delete;

  const RsCodeParams& code_params() const { return params_; }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
  }

  bool contains(const std::string& subject_id) const {
    std::shared_lock lock(mutex_);
    return records_.count(subject_id) != 0;
  }

  std::optional<SecureTemplate> find(const std::string& subject_id) const {
    std::shared_lock lock(mutex_);
    auto it = records_.find(subject_id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
  }

  /// Throws ConflictError when the subject exists and overwrite is false.
  void insert(SecureTemplate record, bool overwrite = false) {
    if (!(record.code_params == params_)) throw ParameterError("record code parameters differ from the store's");
    std::unique_lock lock(mutex_);
    auto it = records_.find(record.subject_id);
    if (it != records_.end() && !overwrite)
      throw ConflictError("subject '" + record.subject_id + "' is already enrolled");
    records_[record.subject_id] = std::move(record);
  }

  bool erase(const std::string& subject_id) {
    std::unique_lock lock(mutex_);
    return records_.erase(subject_id) != 0;
  }

  /// Replaces an existing record; throws LookupError if absent.
  void replace(SecureTemplate record) {
    if (!(record.code_params == params_)) throw ParameterError("record code parameters differ from the store's");
    std::unique_lock lock(mutex_);
    auto it = records_.find(record.subject_id);
    if (it == records_.end()) throw LookupError("unknown subject '" + record.subject_id + "'");
    it->second = std::move(record);
  }

  std::string to_json() const {
    nlohmann::ordered_json doc;
    doc["version"] = kVersion;
    doc["code_params"] = {{"m", params_.m}, {"N", params_.n_symbols}, {"K", params_.k_symbols}};
    auto records = nlohmann::ordered_json::array();
    {
      std::shared_lock lock(mutex_);
      for (const auto& [id, r] : records_) {
        nlohmann::ordered_json rec;
        rec["subject_id"] = id;
        rec["digest_hex"] = to_hex(r.digest);
        rec["created_at"] = r.created_at;
        records.push_back(std::move(rec));
      }
    }
    doc["records"] = std::move(records);
    return doc.dump(2) + "\n";
  }

  static TemplateStore from_json(const std::string& text) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(std::string("template store is not valid JSON: ") + e.what());
    }
    try {
      if (doc.at("version").get<int>() != kVersion) throw FormatError("unsupported template store version");
      const auto& cp = doc.at("code_params");
      if (cp.at("m").get<unsigned>() != 8) throw FormatError("only m = 8 is supported");
      TemplateStore store(
          RsCodeParams::shortened(cp.at("N").get<std::size_t>(), cp.at("K").get<std::size_t>()));
      for (const auto& rec : doc.at("records")) {
        SecureTemplate t;
        t.subject_id = rec.at("subject_id").get<std::string>();
        t.digest = digest_from_hex(rec.at("digest_hex").get<std::string>());
        t.created_at = rec.at("created_at").get<std::string>();
        t.code_params = store.params_;
        store.insert(std::move(t));
      }
      return store;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed template store: ") + e.what());
    } catch (const ConflictError& e) {
      throw FormatError(std::string("malformed template store: ") + e.what());
    }
  }

  static TemplateStore load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open template store '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
  }

  void save(const std::filesystem::path& path) const {
    const std::string text = to_json();
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write '" + tmp.string() + "'");
      out << text;
      out.flush();
      if (!out) throw Error("short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  RsCodeParams params_;
  std::map<std::string, SecureTemplate> records_;
  mutable std::shared_mutex mutex_;
};

}  // namespace mbsketch
