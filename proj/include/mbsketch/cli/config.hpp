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
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mbsketch/analysis/scores.hpp"
#include "mbsketch/error.hpp"
#include "mbsketch/pipeline.hpp"
#include "mbsketch/reed_solomon.hpp"
#include "mbsketch/toy/dataset.hpp"
#include "mbsketch/toy/network.hpp"
#include "mbsketch/toy/trainer.hpp"

namespace mbsketch::cli {

/*
 * Experiment configuration, read from an INI-style file:
 *
 *   [population]  source = synthetic | <features.jsonl|csv>
 *                 subjects, J, p_genuine, p_impostor, samples, seed
 *   [code]        N, K = [7, 10, 13], G (optional, must be 8N), policy
 *   [eval]        analyses = [...], scenario, seed, n_sweep = [256, 512, 768],
 *                 out, jobs, far_target
 *   [unlink]      databases, bins, omega, K
 *   [retrieval]   codes (optional path), classes, bits, database, queries, cutoff, radius
 *   [toy]         dataset, network, loss, schedule and grid-search settings
 *
 * Precedence: built-in defaults < config file < command-line flags.
 */
struct PopulationConfig {
  std::string source = "synthetic";
  std::size_t subjects = 50;
  std::size_t J = 1024;
  double p_genuine = 0.05;
  double p_impostor = 0.5;
  std::size_t samples = 20;  // per subject: one enrollment sample, the rest are probes
  std::uint64_t seed = 1;
};

struct CodeConfig {
  std::size_t N = 96;
  std::vector<std::size_t> K{7, 10, 13};
  std::optional<std::size_t> G;
  DecodeFailurePolicy policy = DecodeFailurePolicy::kSystematic;
};

inline const std::vector<std::string>& all_analyses() {
  static const std::vector<std::string> names{"distributions", "eer", "roc", "gs", "privacy", "unlink", "retrieval"};
  return names;
}

struct EvalConfig {
  std::vector<std::string> analyses = all_analyses();
  analysis::Scenario scenario = analysis::Scenario::kStolenKey;
  std::uint64_t seed = 42;
  std::vector<std::size_t> n_sweep;  // template sizes in bits; empty = {8N}
  std::string out = "results";
  unsigned jobs = 1;
  double far_target = 0.005;
};

struct UnlinkConfig {
  std::size_t databases = 6;
  std::size_t bins = 50;
  double omega = 1.0;
  std::optional<std::size_t> K;  // default: largest swept K
};

struct RetrievalConfig {
  std::string codes;  // empty: synthetic random codes
  std::size_t classes = 10;
  std::size_t bits = 64;
  std::size_t database = 2000;
  std::size_t queries = 200;
  std::size_t cutoff = 1000;
  std::size_t radius = 2;
};

struct ToyConfig {
  toy::ToyDataConfig data;
  toy::ToyShape shape;
  toy::TrainOptions train;
  std::uint64_t network_seed = 3;
  std::size_t grid_epochs = 15;
  std::size_t grid_max_iterations = 5;
};

struct ExperimentConfig {
  PopulationConfig population;
  CodeConfig code;
  EvalConfig eval;
  UnlinkConfig unlink;
  RetrievalConfig retrieval;
  ToyConfig toy;

  std::size_t n_bits() const { return 8 * code.N; }
  std::vector<std::size_t> template_sizes() const {
    return eval.n_sweep.empty() ? std::vector<std::size_t>{n_bits()} : eval.n_sweep;
  }
  std::size_t unlink_k() const { return unlink.K.value_or(*std::max_element(code.K.begin(), code.K.end())); }

  /// Throws ParameterError on the first violated invariant; FormatError if a referenced path is missing.
  void validate() const {
    if (code.G && *code.G != 8 * code.N)
      throw ParameterError("G = " + std::to_string(*code.G) + " but the code needs G = 8N = " +
                           std::to_string(8 * code.N));
    if (code.K.empty()) throw ParameterError("code.K is empty");
    for (std::size_t k : code.K) RsCodeParams::shortened(code.N, k);
    for (std::size_t n : template_sizes()) {
      if (n % 8 != 0 || n == 0) throw ParameterError("template size " + std::to_string(n) + " is not a multiple of 8");
      if (n > population.J) throw ParameterError("template size " + std::to_string(n) + " exceeds J");
      for (std::size_t k : code.K) RsCodeParams::shortened(n / 8, k);
    }
    if (8 * code.N > population.J) throw ParameterError("G = 8N exceeds J");
    if (population.source == "synthetic") {
      if (population.subjects < 2) throw ParameterError("population needs >= 2 subjects");
      if (population.samples < 2) throw ParameterError("population needs >= 2 samples per subject");
      BitChannelModel::uniform(1, population.p_genuine, population.p_impostor);
    } else if (!std::filesystem::exists(population.source)) {
      throw FormatError("population source '" + population.source + "' does not exist");
    }
    if (!retrieval.codes.empty() && !std::filesystem::exists(retrieval.codes))
      throw FormatError("retrieval codes '" + retrieval.codes + "' do not exist");
    for (const auto& a : eval.analyses)
      if (std::find(all_analyses().begin(), all_analyses().end(), a) == all_analyses().end())
        throw ParameterError("unknown analysis '" + a + "'");
    if (eval.jobs == 0) throw ParameterError("jobs must be >= 1");
    if (unlink.databases < 2) throw ParameterError("unlink.databases must be >= 2");
    RsCodeParams::shortened(code.N, unlink_k());
    toy.train.weights.validate();
    toy.train.schedule.validate();
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

/// "[a, b, c]" or "a, b, c".
inline std::vector<std::string> split_list(std::string text) {
  text = trim(text);
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') throw FormatError("unterminated list '" + text + "'");
    text = text.substr(1, text.size() - 2);
  }
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw FormatError("bad value '" + text + "' for " + key);
  return value;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw FormatError("bad boolean '" + text + "' for " + key);
}

class Reader {
 public:
  explicit Reader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  template <class T>
  void number(const std::string& key, T& dst) {
    if (auto v = get(key)) dst = parse_number<T>(key, *v);
  }
  template <class T>
  void number(const std::string& key, std::optional<T>& dst) {
    if (auto v = get(key)) dst = parse_number<T>(key, *v);
  }
  template <class T>
  void numbers(const std::string& key, std::vector<T>& dst) {
    if (auto v = get(key)) {
      dst.clear();
      for (const auto& item : split_list(*v)) dst.push_back(parse_number<T>(key, item));
    }
  }
  void text(const std::string& key, std::string& dst) {
    if (auto v = get(key)) dst = trim(*v);
  }
  void texts(const std::string& key, std::vector<std::string>& dst) {
    if (auto v = get(key)) dst = split_list(*v);
  }
  void boolean(const std::string& key, bool& dst) {
    if (auto v = get(key)) dst = parse_bool(key, *v);
  }
  template <class F>
  void with(const std::string& key, F&& f) {
    if (auto v = get(key)) f(trim(*v));
  }

  /// Rejects keys no reader asked for, catching typos.
  void check_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty())
        throw FormatError("key '" + section + "' outside any section");
      for (const auto& [key, value] : body)
        if (!seen_.count(section + "." + key)) throw FormatError("unknown config key '" + section + "." + key + "'");
    }
  }

 private:
  std::optional<std::string> get(const std::string& key) {
    seen_.insert(key);
    if (auto v = tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'))) return *v;
    return std::nullopt;
  }

  const boost::property_tree::ptree& tree_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw FormatError(std::string("config: ") + e.message(), static_cast<std::size_t>(e.line()));
  }
  ExperimentConfig c;
  detail::Reader r(tree);

  auto& p = c.population;
  r.text("population.source", p.source);
  r.number("population.subjects", p.subjects);
  r.number("population.J", p.J);
  r.number("population.p_genuine", p.p_genuine);
  r.number("population.p_impostor", p.p_impostor);
  r.number("population.samples", p.samples);
  r.number("population.seed", p.seed);

  r.number("code.N", c.code.N);
  r.numbers("code.K", c.code.K);
  r.number("code.G", c.code.G);
  r.with("code.policy", [&](const std::string& v) { c.code.policy = parse_decode_policy(v); });

  r.texts("eval.analyses", c.eval.analyses);
  r.with("eval.scenario", [&](const std::string& v) { c.eval.scenario = analysis::parse_scenario(v); });
  r.number("eval.seed", c.eval.seed);
  r.numbers("eval.n_sweep", c.eval.n_sweep);
  r.text("eval.out", c.eval.out);
  r.number("eval.jobs", c.eval.jobs);
  r.number("eval.far_target", c.eval.far_target);

  r.number("unlink.databases", c.unlink.databases);
  r.number("unlink.bins", c.unlink.bins);
  r.number("unlink.omega", c.unlink.omega);
  r.number("unlink.K", c.unlink.K);

  auto& rt = c.retrieval;
  r.text("retrieval.codes", rt.codes);
  r.number("retrieval.classes", rt.classes);
  r.number("retrieval.bits", rt.bits);
  r.number("retrieval.database", rt.database);
  r.number("retrieval.queries", rt.queries);
  r.number("retrieval.cutoff", rt.cutoff);
  r.number("retrieval.radius", rt.radius);

  auto& t = c.toy;
  r.number("toy.classes", t.data.classes);
  r.number("toy.per_class", t.data.per_class);
  r.number("toy.input", t.data.input_face);
  t.data.input_iris = t.data.input_face;
  r.number("toy.separation", t.data.separation);
  r.number("toy.noise", t.data.noise);
  r.number("toy.data_seed", t.data.seed);
  r.number("toy.modality_dim", t.shape.face);
  t.shape.iris = t.shape.face;
  r.number("toy.hidden", t.shape.hidden);
  r.number("toy.code_bits", t.shape.code_bits);
  r.with("toy.fusion", [&](const std::string& v) { t.shape.mode = toy::parse_fusion_mode(v); });
  r.number("toy.network_seed", t.network_seed);
  r.number("toy.alpha", t.train.weights.alpha);
  r.number("toy.beta", t.train.weights.beta);
  r.number("toy.gamma", t.train.weights.gamma);
  r.number("toy.lambda", t.train.weights.lambda);
  r.numbers("toy.schedule", t.train.schedule.bandwidths);
  r.number("toy.tolerance", t.train.schedule.tolerance);
  r.number("toy.patience", t.train.schedule.patience);
  r.number("toy.max_epochs", t.train.schedule.max_epochs);
  r.number("toy.learning_rate", t.train.learning_rate);
  r.number("toy.batch_size", t.train.batch_size);
  r.number("toy.train_seed", t.train.seed);
  r.number("toy.grid_epochs", t.grid_epochs);
  r.number("toy.grid_max_iterations", t.grid_max_iterations);
  t.shape.input_face = t.data.input_face;
  t.shape.input_iris = t.data.input_iris;
  t.shape.classes = t.data.classes;

  r.check_unknown();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config '" + path.string() + "'");
  return parse_config(in);
}

}  // namespace mbsketch::cli
