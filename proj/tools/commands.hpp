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
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mbsketch/analysis/gs_curve.hpp"
#include "mbsketch/analysis/privacy.hpp"
#include "mbsketch/analysis/report.hpp"
#include "mbsketch/analysis/retrieval.hpp"
#include "mbsketch/analysis/scores.hpp"
#include "mbsketch/analysis/unlinkability.hpp"
#include "mbsketch/analysis/verification.hpp"
#include "mbsketch/cli/config.hpp"
#include "mbsketch/error.hpp"
#include "mbsketch/feature_io.hpp"
#include "mbsketch/pipeline.hpp"
#include "mbsketch/template_store.hpp"
#include "mbsketch/toy/dataset.hpp"
#include "mbsketch/toy/grid_search.hpp"
#include "mbsketch/toy/trainer.hpp"

namespace mbsketch::cli {

enum ExitCode : int {
  kOk = 0,
  kDeny = 1,
  kUsage = 2,
  kParseError = 3,      // malformed feature, key, store or config file
  kDecodeFailure = 4,   // enrollment retries exhausted
  kUnknownSubject = 5,  // lookup of a subject or sample failed
  kInvalidInput = 6,    // parameters or data rejected by validation
  kInternal = 7,        // training divergence or any other failure
};

/// Published zero-leakage boundary for J = 1024, reported next to the exact one.
inline constexpr std::size_t kReferenceBoundary = 792;

// ---- key files --------------------------------------------------------------

inline std::string format_key(const UserKey& key) {
  std::ostringstream os;
  os << std::hex;
  for (auto idx : key.indices) os << idx << '\n';
  return os.str();
}

/// One lowercase or uppercase hex index per line; blank lines are ignored.
inline UserKey parse_key(std::istream& in, std::size_t expected_size) {
  UserKey key;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::uint32_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    std::uint32_t v = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v, 16);
    if (ec != std::errc() || ptr != line.data() + line.size())
      throw FormatError("key entry '" + line + "' is not a hex index", line_no);
    if (!seen.insert(v).second) throw FormatError("duplicate key index", line_no);
    key.indices.push_back(v);
  }
  if (key.indices.size() != expected_size)
    throw FormatError("key has " + std::to_string(key.indices.size()) + " indices, the code needs " +
                      std::to_string(expected_size));
  return key;
}

inline UserKey load_key(const std::filesystem::path& path, std::size_t expected_size) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open key file '" + path.string() + "'");
  return parse_key(in, expected_size);
}

// ---- helpers ----------------------------------------------------------------

/// Stable 64-bit FNV-1a; maps subject ids to key-seed streams.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

struct SubjectInput {
  FeatureVector feature;
  std::vector<double> reliability;
};

/*
 * Picks the subject's sample (first one unless sample_id is given). Reliability
 * is estimated from the whole file when it has >= 2 subjects with >= 2 samples
 * each; otherwise every bit counts as equally reliable.
 */
inline SubjectInput subject_input(const std::filesystem::path& features, const std::string& subject,
                                  const std::optional<std::string>& sample_id) {
  auto vectors = read_features(features);
  const FeatureVector* chosen = nullptr;
  for (const auto& v : vectors)
    if (v.subject_id == subject && (!sample_id || v.sample_id == *sample_id)) {
      chosen = &v;
      break;
    }
  if (!chosen)
    throw LookupError("no sample for subject '" + subject + "'" + (sample_id ? " with id '" + *sample_id + "'" : "") +
                      " in '" + features.string() + "'");
  SubjectInput in{*chosen, std::vector<double>(chosen->dimension(), 1.0)};
  const auto groups = group_by_subject(vectors);
  const auto multi = std::count_if(groups.begin(), groups.end(), [](const auto& g) { return g.size() >= 2; });
  if (groups.size() >= 2 && static_cast<std::size_t>(multi) == groups.size())
    in.reliability = estimate_channel(groups).reliability();
  return in;
}

inline std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::string out;
  std::string decode_policy;
};

inline ExperimentConfig resolve_config(const GlobalOptions& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  if (g.seed) c.eval.seed = *g.seed;
  if (g.jobs) c.eval.jobs = *g.jobs;
  if (!g.out.empty()) c.eval.out = g.out;
  if (!g.decode_policy.empty()) c.code.policy = parse_decode_policy(g.decode_policy);
  return c;
}

// ---- enroll / auth / revoke ---------------------------------------------------

struct SubjectArgs {
  std::string store, features, subject, sample, key, key_out;
  std::optional<std::size_t> N, K;
  bool overwrite = false;
};

inline void write_key(const std::string& key_out, const UserKey& key, std::ostream& out) {
  const std::string text = format_key(key);
  out << text;
  if (!key_out.empty()) analysis::write_text(key_out, text);
}

inline int cmd_enroll(const GlobalOptions& g, const SubjectArgs& a, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve_config(g);
  std::optional<TemplateStore> store;
  if (std::filesystem::exists(a.store)) {
    store.emplace(TemplateStore::load(a.store));
  } else {
    const std::size_t N = a.N.value_or(cfg.code.N);
    const std::size_t K = a.K.value_or(*std::max_element(cfg.code.K.begin(), cfg.code.K.end()));
    if (cfg.code.G && *cfg.code.G != 8 * N) throw ParameterError("G must equal 8N");
    store.emplace(RsCodeParams::shortened(N, K));
  }
  if (!a.overwrite && store->contains(a.subject))
    throw ConflictError("subject '" + a.subject + "' is already enrolled (use --overwrite)");
  const auto in = subject_input(a.features, a.subject, a.sample.empty() ? std::nullopt : std::optional(a.sample));
  const SketchPipeline pipe(store->code_params(), cfg.code.policy);
  const std::uint64_t seed = derive_seed(g.seed.value_or(fresh_seed()), {fnv1a(a.subject)});
  const Enrollment e = pipe.enroll_with_fresh_key(in.feature, in.reliability, *store, a.subject, seed, a.overwrite);
  store->save(a.store);
  write_key(a.key_out, e.key, out);
  err << "enrolled " << a.subject << " (k = " << store->code_params().k_bits() << " bits, " << e.attempts
      << (e.attempts == 1 ? " attempt" : " attempts") << ")\n";
  return kOk;
}

inline int cmd_auth(const GlobalOptions& g, const SubjectArgs& a, std::ostream& out, std::ostream&) {
  const ExperimentConfig cfg = resolve_config(g);
  const TemplateStore store = TemplateStore::load(a.store);
  const UserKey key = load_key(a.key, store.code_params().n_bits());
  if (!store.contains(a.subject)) {
    out << "DENY: " << to_string(DenyReason::kUnknownSubject) << '\n';
    return kDeny;
  }
  const auto in = subject_input(a.features, a.subject, a.sample.empty() ? std::nullopt : std::optional(a.sample));
  const SketchPipeline pipe(store.code_params(), cfg.code.policy);
  const AuthOutcome r = pipe.authenticate(in.feature, key, store, a.subject);
  if (r.granted) {
    out << "GRANT\n";
    return kOk;
  }
  out << "DENY: " << to_string(r.reason) << '\n';
  return kDeny;
}

inline int cmd_revoke(const GlobalOptions& g, const SubjectArgs& a, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve_config(g);
  TemplateStore store = TemplateStore::load(a.store);
  if (!store.contains(a.subject)) throw LookupError("unknown subject '" + a.subject + "'");
  const auto in = subject_input(a.features, a.subject, a.sample.empty() ? std::nullopt : std::optional(a.sample));
  const SketchPipeline pipe(store.code_params(), cfg.code.policy);
  const std::uint64_t seed = derive_seed(g.seed.value_or(fresh_seed()), {fnv1a(a.subject), 0x5245564bULL});
  const Enrollment e = pipe.revoke_and_reissue(store, a.subject, in.feature, seed, in.reliability);
  store.save(a.store);
  write_key(a.key_out, e.key, out);
  err << "revoked " << a.subject << "; the previous key no longer authenticates\n";
  return kOk;
}

// ---- eval -------------------------------------------------------------------

struct AnalysisStatus {
  std::string name;
  bool ok = false;
  std::string summary;
};

inline SubjectPopulation eval_population(const ExperimentConfig& cfg) {
  const auto& p = cfg.population;
  if (p.source == "synthetic")
    return synth_population(p.subjects, p.J, BitChannelModel::uniform(p.J, p.p_genuine, p.p_impostor), p.seed);
  return ingest_features(p.source);
}

inline std::vector<analysis::LabeledCode> codes_from_features(const std::string& path) {
  std::vector<analysis::LabeledCode> out;
  std::map<std::string, int> labels;
  for (auto& v : read_features(path)) {
    auto [it, fresh] = labels.emplace(v.subject_id, static_cast<int>(labels.size()));
    out.push_back({std::move(v.bits), it->second});
  }
  return out;
}

class Evaluator {
 public:
  Evaluator(ExperimentConfig cfg, std::ostream& err) : cfg_(std::move(cfg)), out_dir_(cfg_.eval.out), err_(err) {}

  std::vector<AnalysisStatus> run() {
    std::vector<AnalysisStatus> statuses;
    for (const auto& name : cfg_.eval.analyses) {
      AnalysisStatus s{name, false, {}};
      try {
        s.summary = dispatch(name);
        s.ok = true;
      } catch (const std::exception& e) {
        s.summary = e.what();
        failures_.push_back(classify(e));
      }
      statuses.push_back(std::move(s));
    }
    return statuses;
  }

  /// Exit code of the first failed analysis, 0 when all succeeded.
  int exit_code() const { return failures_.empty() ? kOk : failures_.front(); }

 private:
  static int classify(const std::exception& e);

  std::string dispatch(const std::string& name) {
    if (name == "distributions") return distributions();
    if (name == "eer") return eer();
    if (name == "roc") return roc();
    if (name == "gs") return gs();
    if (name == "privacy") return privacy();
    if (name == "unlink") return unlink();
    if (name == "retrieval") return retrieval();
    throw ParameterError("unknown analysis '" + name + "'");
  }

  const SubjectPopulation& population() {
    if (!population_) population_ = eval_population(cfg_);
    return *population_;
  }

  std::size_t probes() const { return cfg_.population.samples - 1; }

  const analysis::ScoreSet& scores() {
    if (!scores_)
      scores_ = analysis::score_distributions(population(), cfg_.n_bits(), cfg_.eval.scenario, cfg_.eval.seed,
                                              probes(), cfg_.eval.jobs);
    return *scores_;
  }

  analysis::JsonReport report(const std::string& experiment) const {
    analysis::JsonReport r;
    r.experiment = experiment;
    r.seed = cfg_.eval.seed;
    r.params["scenario"] = analysis::to_string(cfg_.eval.scenario);
    r.params["J"] = population_ ? population_->dimension() : cfg_.population.J;
    r.params["n_bits"] = cfg_.n_bits();
    r.params["policy"] = to_string(cfg_.code.policy);
    r.params["population_seed"] = cfg_.population.seed;
    return r;
  }

  void write(const std::string& file, const std::string& text) const { analysis::write_text(out_dir_ / file, text); }

  static double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  }

  std::string distributions() {
    const auto& s = scores();
    write("distributions.csv",
          analysis::scores_csv(s, cfg_.n_bits(), analysis::to_string(cfg_.eval.scenario)).str());
    auto r = report("distributions");
    r.metrics["genuine_mean"] = mean(s.genuine);
    r.metrics["impostor_mean"] = mean(s.impostor);
    r.metrics["attacker_stolen_mean"] = mean(s.attacker_stolen);
    r.metrics["genuine_count"] = s.genuine.size();
    r.metrics["impostor_count"] = s.impostor.size();
    write("distributions.json", r.str());
    return "genuine mean " + format_number(mean(s.genuine)) + ", impostor mean " + format_number(mean(s.impostor));
  }

  std::string eer() {
    const auto& s = scores();
    const auto e = analysis::eer(s.genuine, s.impostor);
    auto r = report("eer");
    r.metrics["eer"] = e.eer;
    r.metrics["threshold"] = e.threshold;
    write("eer.json", r.str());
    return "EER " + format_number(e.eer) + " at threshold " + format_number(e.threshold);
  }

  std::string roc() {
    const auto& s = scores();
    const auto curve = analysis::roc(s.genuine, s.impostor);
    write("roc.csv", analysis::roc_csv(curve, analysis::to_string(cfg_.eval.scenario)).str());
    const double gar = analysis::gar_at_far(curve, cfg_.eval.far_target);
    auto r = report("roc");
    r.params["far_target"] = cfg_.eval.far_target;
    r.metrics["gar_at_far"] = gar;
    r.metrics["auc"] = analysis::roc_auc(curve);
    write("roc.json", r.str());
    return "GAR " + format_number(gar) + " at FAR " + format_number(cfg_.eval.far_target);
  }

  std::string gs() {
    auto r = report("gs_curve");
    r.params["K"] = cfg_.code.K;
    r.params["n_sweep"] = cfg_.template_sizes();
    std::ostringstream summary;
    for (std::size_t n : cfg_.template_sizes()) {
      const auto curve = analysis::gs_curve(
          population(), n / 8, cfg_.code.K, cfg_.eval.seed,
          {cfg_.eval.scenario, cfg_.code.policy, probes(), cfg_.eval.jobs});
      write("gs_n" + std::to_string(n) + ".csv", analysis::gs_curve_csv(curve).str());
      auto points = nlohmann::ordered_json::array();
      for (const auto& p : curve.points) {
        points.push_back({{"k", p.k_bits}, {"GAR", p.gar}, {"FAR", p.far},
                          {"enroll_failure_rate", p.enroll_failure_rate},
                          {"genuine_decode_failure_rate", p.genuine_decode_failure_rate}});
        summary << (summary.tellp() ? ", " : "") << "n=" << n << " k=" << p.k_bits << " GAR "
                << format_number(p.gar);
      }
      r.metrics["n" + std::to_string(n)] = points;
    }
    write("gs.json", r.str());
    return summary.str();
  }

  std::string privacy() {
    const std::size_t J = cfg_.population.source == "synthetic" ? cfg_.population.J : population().dimension();
    analysis::CsvTable t{"privacy", {{"J", std::to_string(J)}}, {"n", "k", "key_only", "sketch_only", "sketch_and_key"}, {}};
    auto r = report("privacy");
    r.params["J"] = J;
    for (std::size_t n : cfg_.template_sizes())
      for (std::size_t K : cfg_.code.K) {
        const std::size_t k = 8 * K;
        using analysis::Compromise;
        t.add_row({std::to_string(n), std::to_string(k),
                   format_number(analysis::privacy_leakage(J, n, k, Compromise::kKeyOnly)),
                   format_number(analysis::privacy_leakage(J, n, k, Compromise::kSketchOnly)),
                   format_number(analysis::privacy_leakage(J, n, k, Compromise::kSketchAndKey))});
      }
    write("privacy.csv", t.str());
    const std::size_t boundary = analysis::zero_leakage_boundary(J);
    r.metrics["zero_leakage_boundary"] = boundary;
    if (J == 1024) {
      r.metrics["reference_boundary"] = kReferenceBoundary;
      r.metrics["boundary_difference"] =
          static_cast<long long>(boundary) - static_cast<long long>(kReferenceBoundary);
    }
    if (boundary < J) {
      const auto first = analysis::first_leaking_k(J, boundary + 1);
      r.metrics["smallest_leaking_n"] = boundary + 1;
      r.metrics["first_leaking_k"] = first ? nlohmann::ordered_json(*first) : nlohmann::ordered_json(nullptr);
    }
    write("privacy.json", r.str());
    return "zero leakage for all k <= n up to n = " + std::to_string(boundary) + " (J = " + std::to_string(J) + ")";
  }

  std::string unlink() {
    const auto params = RsCodeParams::shortened(cfg_.code.N, cfg_.unlink_k());
    const auto rep = analysis::unlinkability(population(), params, cfg_.unlink.databases, cfg_.eval.seed,
                                             cfg_.code.policy, cfg_.unlink.bins, cfg_.unlink.omega, cfg_.eval.jobs);
    write("unlink.csv", analysis::linkability_csv(rep).str());
    auto r = report("unlinkability");
    r.params["databases"] = cfg_.unlink.databases;
    r.params["k_bits"] = params.k_bits();
    r.params["bins"] = cfg_.unlink.bins;
    r.params["omega"] = cfg_.unlink.omega;
    r.metrics["D_sys"] = rep.d_sys;
    r.metrics["mated"] = rep.mated_count;
    r.metrics["nonmated"] = rep.nonmated_count;
    write("unlink.json", r.str());
    return "D_sys " + format_number(rep.d_sys);
  }

  std::string retrieval() {
    const auto& rc = cfg_.retrieval;
    std::vector<analysis::LabeledCode> db, queries;
    if (rc.codes.empty()) {
      Rng rng = make_rng(cfg_.eval.seed, {0x524554ULL});
      auto draw = [&](std::size_t count, std::vector<analysis::LabeledCode>& dst) {
        for (std::size_t i = 0; i < count; ++i)
          dst.push_back({uniform_bits(rc.bits, rng), static_cast<int>(i % rc.classes)});
      };
      draw(rc.database, db);
      draw(rc.queries, queries);
    } else {
      // first sample of every label is a query, the rest form the database
      std::set<int> queried;
      for (auto& c : codes_from_features(rc.codes)) (queried.insert(c.label).second ? queries : db).push_back(std::move(c));
    }
    analysis::RetrievalOptions opt;
    opt.map_cutoff = rc.cutoff;
    opt.radius = rc.radius;
    opt.jobs = cfg_.eval.jobs;
    const auto rep = analysis::retrieval_metrics(db, queries, opt);
    analysis::CsvTable t{"precision_at_k", {{"source", rc.codes.empty() ? "synthetic" : rc.codes}}, {"K", "precision"}, {}};
    for (std::size_t i = 0; i < rep.top_k.size(); ++i)
      t.add_row({std::to_string(rep.top_k[i]), format_number(rep.precision_at_k[i])});
    write("retrieval_pk.csv", t.str());
    auto r = report("retrieval");
    r.params["source"] = rc.codes.empty() ? "synthetic" : rc.codes;
    r.params["cutoff"] = rc.cutoff;
    r.params["radius"] = rc.radius;
    r.metrics["map"] = rep.map;
    r.metrics["precision_at_radius"] = rep.precision_at_radius;
    r.metrics["queries_without_neighbors"] = rep.queries_without_neighbors;
    write("retrieval.json", r.str());
    return "MAP@" + std::to_string(rc.cutoff) + " " + format_number(rep.map);
  }

  ExperimentConfig cfg_;
  std::filesystem::path out_dir_;
  std::ostream& err_;
  std::optional<SubjectPopulation> population_;
  std::optional<analysis::ScoreSet> scores_;
  std::vector<int> failures_;
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const FormatError*>(&e)) return kParseError;
  if (dynamic_cast<const DecodeFailure*>(&e)) return kDecodeFailure;
  if (dynamic_cast<const LookupError*>(&e)) return kUnknownSubject;
  if (dynamic_cast<const ParameterError*>(&e) || dynamic_cast<const ShapeError*>(&e) ||
      dynamic_cast<const DomainError*>(&e) || dynamic_cast<const ConflictError*>(&e))
    return kInvalidInput;
  return kInternal;
}

inline int Evaluator::classify(const std::exception& e) { return exit_code_for(e); }

inline int cmd_eval(const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = resolve_config(g);
  cfg.validate();  // before any work
  Evaluator ev(cfg, err);
  const auto statuses = ev.run();
  out << std::left << std::setw(15) << "analysis" << std::setw(8) << "status" << "result\n";
  for (const auto& s : statuses)
    out << std::left << std::setw(15) << s.name << std::setw(8) << (s.ok ? "ok" : "FAILED") << s.summary << '\n';
  const auto failed = std::count_if(statuses.begin(), statuses.end(), [](const auto& s) { return !s.ok; });
  if (failed) err << failed << " of " << statuses.size() << " analyses failed\n";
  return ev.exit_code();
}

// ---- train-toy ----------------------------------------------------------------

inline double toy_validation_map(const toy::Batch& data, const toy::ToyNetwork& net) {
  std::vector<std::size_t> even, odd;
  for (std::size_t i = 0; i < data.size(); ++i) (i % 2 ? odd : even).push_back(i);
  auto codes = [&](const std::vector<std::size_t>& idx) {
    const toy::Batch part = toy::subset(data, idx);
    const auto o = toy::hash_activations(net, part.face, part.iris);
    std::vector<analysis::LabeledCode> out;
    for (std::size_t j = 0; j < idx.size(); ++j)
      out.push_back({toy::binarize(o.col(static_cast<Eigen::Index>(j))), part.labels[j]});
    return out;
  };
  return analysis::retrieval_metrics(codes(even), codes(odd)).map;
}

inline int cmd_train_toy(const GlobalOptions& g, bool grid, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = resolve_config(g);
  auto& tc = cfg.toy;
  tc.train.weights.validate();
  tc.train.schedule.validate();
  if (g.seed) tc.train.seed = *g.seed;
  const toy::Batch data = toy::make_toy_dataset(tc.data);
  const toy::ToyNetwork initial = toy::ToyNetwork::create(tc.shape, tc.network_seed);

  if (grid) {
    toy::TrainOptions quick = tc.train;
    quick.schedule.max_epochs = tc.grid_epochs;
    const auto result = toy::grid_search(
        toy::default_grid_candidates(),
        [&](const toy::GridPoint& p) {
          toy::TrainOptions o = quick;
          o.weights.alpha = p.alpha;
          o.weights.beta = p.beta;
          o.weights.gamma = p.gamma;
          try {
            return toy_validation_map(data, toy::train_two_step(data, initial, o).network);
          } catch (const DivergenceError&) {
            return 0.0;
          }
        },
        tc.grid_max_iterations, cfg.eval.jobs);
    out << "selected (alpha, beta, gamma) = (" << format_number(result.best.alpha) << ", "
        << format_number(result.best.beta) << ", " << format_number(result.best.gamma) << ")\n";
    if (!result.converged) err << "warning: grid search stopped after " << result.iterations << " iterations\n";
    tc.train.weights.alpha = result.best.alpha;
    tc.train.weights.beta = result.best.beta;
    tc.train.weights.gamma = result.best.gamma;
  }

  const auto trained = toy::train_two_step(data, initial, tc.train);
  const std::filesystem::path dir(cfg.eval.out);
  analysis::write_text(dir / "toy_history.csv", toy::history_csv(trained.history, tc.train.weights));
  std::ostringstream codes;
  write_features(codes, toy::export_codes(trained.network, data), FeatureFormat::kJsonl);
  analysis::write_text(dir / "toy_codes.jsonl", codes.str());
  const auto o = toy::hash_activations(trained.network, data.face, data.iris);
  out << "trained " << toy::to_string(tc.shape.mode) << " toy network: " << data.size() << " codes of "
      << tc.shape.code_bits << " bits, mean |activation| " << format_number(toy::mean_abs_activation(o))
      << ", balance " << format_number(toy::mean_balance(o)) << '\n';
  return kOk;
}

// ---- entry point --------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multibiometric secure sketch toolkit"};
  app.name("mbsketch");
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "experiment config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "seed for keys and experiments");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output directory");
  app.add_option("--decode-policy", g.decode_policy, "reject | systematic")
      ->check(CLI::IsMember({"reject", "systematic"}));

  SubjectArgs a;
  auto subject_opts = [&](CLI::App* sub, bool needs_key) {
    sub->add_option("--store", a.store, "template store (JSON)")->required();
    sub->add_option("--features", a.features, "feature file (.jsonl or .csv)")->required()->check(CLI::ExistingFile);
    sub->add_option("--subject", a.subject, "subject id")->required();
    sub->add_option("--sample", a.sample, "sample id (default: first sample of the subject)");
    if (needs_key) sub->add_option("--key", a.key, "key file (hex index per line)")->required();
  };
  auto* enroll = app.add_subcommand("enroll", "enroll a subject; prints the issued key");
  subject_opts(enroll, false);
  enroll->add_option("--key-out", a.key_out, "also write the key to this file");
  enroll->add_option("--N", a.N, "code length in symbols (new store only)");
  enroll->add_option("--K", a.K, "code dimension in symbols (new store only)");
  enroll->add_flag("--overwrite", a.overwrite, "replace an existing record");
  auto* auth = app.add_subcommand("auth", "authenticate a probe; prints GRANT or DENY");
  subject_opts(auth, true);
  auto* revoke = app.add_subcommand("revoke", "revoke a key and reissue; prints the new key");
  subject_opts(revoke, false);
  revoke->add_option("--key-out", a.key_out, "also write the key to this file");
  auto* eval = app.add_subcommand("eval", "run the configured analyses");
  bool grid = false;
  auto* train = app.add_subcommand("train-toy", "train the toy hashing network and export codes");
  train->add_flag("--grid-search", grid, "tune (alpha, beta, gamma) first");

  std::vector<const char*> argv{"mbsketch"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (enroll->parsed()) return cmd_enroll(g, a, out, err);
    if (auth->parsed()) return cmd_auth(g, a, out, err);
    if (revoke->parsed()) return cmd_revoke(g, a, out, err);
    if (eval->parsed()) return cmd_eval(g, out, err);
    if (train->parsed()) return cmd_train_toy(g, grid, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kUsage;
}

}  // namespace mbsketch::cli
