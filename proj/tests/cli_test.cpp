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

#include "commands.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace mbsketch::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("mbsketch_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    // 4 subjects x 3 samples, 1024 bits, 3 % noise around a random reference
    const auto pop = synth_population(4, 1024, BitChannelModel::uniform(1024, 0.03), 11);
    std::vector<FeatureVector> samples;
    for (std::size_t s = 0; s < 4; ++s)
      for (auto& v : sample_genuine(pop, s, 3, 100 + s)) samples.push_back(v);
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i].sample_id = std::to_string(i % 3);
    write_features(features(), samples, FeatureFormat::kJsonl);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }
  std::string features() const { return path("features.jsonl").string(); }
  std::string store() const { return path("store.json").string(); }

  Result enroll(const std::string& subject, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"--seed", "7", "enroll", "--store", store(), "--features", features(), "--subject",
                                  subject, "--K", "13"};
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  }

  Result auth(const std::string& subject, const std::string& key, const std::string& sample = "2") {
    return run_cli({"auth", "--store", store(), "--features", features(), "--subject", subject, "--sample", sample,
                    "--key", key});
  }

  fs::path dir_;
};

TEST(KeyFile, RoundTripsHexIndices) {
  UserKey key{{0, 10, 255, 1023}};
  EXPECT_EQ(format_key(key), "0\na\nff\n3ff\n");
  std::istringstream in("0\nA\n\nff\n3FF\n");
  EXPECT_EQ(parse_key(in, 4).indices, key.indices);
}

TEST(KeyFile, RejectsMalformedEntries) {
  std::istringstream bad("1\nzz\n");
  try {
    parse_key(bad, 2);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream dup("1\n1\n");
  EXPECT_THROW(parse_key(dup, 2), FormatError);
  std::istringstream short_key("1\n2\n");
  EXPECT_THROW(parse_key(short_key, 3), FormatError);
}

TEST_F(CliTest, EnrollThenAuthGrants) {
  const auto e = enroll("s0001");
  ASSERT_EQ(e.code, kOk) << e.err;
  EXPECT_EQ(count_lines(e.out), 768u);  // stdout carries the key and nothing else
  spit(path("key.txt"), e.out);
  const auto a = auth("s0001", path("key.txt").string());
  EXPECT_EQ(a.code, kOk) << a.err;
  EXPECT_EQ(a.out, "GRANT\n");
}

TEST_F(CliTest, EnrollIsDeterministicGivenSeed) {
  const auto first = enroll("s0001");
  fs::remove(store());
  const auto second = enroll("s0001");
  EXPECT_EQ(first.out, second.out);
}

TEST_F(CliTest, OtherSubjectsProbeIsDenied) {
  spit(path("key.txt"), enroll("s0001").out);
  const auto a = run_cli({"auth", "--store", store(), "--features", features(), "--subject", "s0001", "--sample", "0",
                          "--key", path("key.txt").string()});
  EXPECT_EQ(a.code, kOk);
  // present s0002's samples under s0001's id
  auto vectors = read_features(features());
  for (auto& v : vectors) v.subject_id = v.subject_id == "s0002" ? "s0001" : v.subject_id == "s0001" ? "x" : v.subject_id;
  write_features(path("swapped.jsonl"), vectors, FeatureFormat::kJsonl);
  const auto d = run_cli({"auth", "--store", store(), "--features", path("swapped.jsonl").string(), "--subject",
                          "s0001", "--key", path("key.txt").string()});
  EXPECT_EQ(d.code, kDeny);
  EXPECT_EQ(d.out.rfind("DENY", 0), 0u);
}

TEST_F(CliTest, TruncatedKeyIsParseErrorWithoutStoreMutation) {
  const auto e = enroll("s0001");
  std::string truncated = e.out.substr(0, e.out.size() / 2);
  truncated = truncated.substr(0, truncated.rfind('\n') + 1);
  spit(path("key.txt"), truncated);
  const std::string before = slurp(store());
  const auto a = auth("s0001", path("key.txt").string());
  EXPECT_EQ(a.code, kParseError);
  EXPECT_TRUE(a.out.empty());
  EXPECT_EQ(slurp(store()), before);
}

TEST_F(CliTest, EmptyStoreDeniesUnknownSubject) {
  TemplateStore(RsCodeParams::shortened(96, 13)).save(store());
  spit(path("key.txt"), format_key(issue_key(1024, 768, 5)));
  const auto a = auth("s0001", path("key.txt").string());
  EXPECT_EQ(a.code, kDeny);
  EXPECT_EQ(a.out, "DENY: unknown subject\n");
}

TEST_F(CliTest, RevokeInvalidatesOldKey) {
  spit(path("old.txt"), enroll("s0001").out);
  const auto r = run_cli({"--seed", "8", "revoke", "--store", store(), "--features", features(), "--subject", "s0001"});
  ASSERT_EQ(r.code, kOk) << r.err;
  spit(path("new.txt"), r.out);
  EXPECT_NE(slurp(path("old.txt")), r.out);
  EXPECT_EQ(auth("s0001", path("old.txt").string()).code, kDeny);
  EXPECT_EQ(auth("s0001", path("new.txt").string()).code, kOk);
}

TEST_F(CliTest, ErrorClassesHaveDistinctExitCodes) {
  enroll("s0001");
  const auto unknown = run_cli({"revoke", "--store", store(), "--features", features(), "--subject", "nobody"});
  EXPECT_EQ(unknown.code, kUnknownSubject);

  const std::string before = slurp(store());
  EXPECT_EQ(enroll("s0001").code, kInvalidInput);  // already enrolled
  EXPECT_EQ(slurp(store()), before);
  EXPECT_EQ(enroll("s0001", {"--overwrite"}).code, kOk);

  // random templates are not codewords, so the reject policy exhausts its retries
  const auto fresh = path("fresh.json").string();
  const auto exhausted = run_cli({"--seed", "1", "--decode-policy", "reject", "enroll", "--store", fresh,
                                  "--features", features(), "--subject", "s0002", "--K", "13"});
  EXPECT_EQ(exhausted.code, kDecodeFailure);
  EXPECT_FALSE(fs::exists(fresh));

  spit(path("broken.jsonl"), "{\"subject_id\": \"a\"}\n");
  EXPECT_EQ(run_cli({"enroll", "--store", fresh, "--features", path("broken.jsonl").string(), "--subject", "a"}).code,
            kParseError);

  std::set<int> codes{kDeny, kUsage, kParseError, kDecodeFailure, kUnknownSubject, kInvalidInput, kInternal};
  EXPECT_EQ(codes.size(), 7u);
  EXPECT_EQ(codes.count(kOk), 0u);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, kUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kUsage);
  EXPECT_EQ(run_cli({"auth", "--store", store()}).code, kUsage);
  EXPECT_EQ(run_cli({"--decode-policy", "maybe", "eval"}).code, kUsage);
  const auto help = run_cli({"--help"});
  EXPECT_EQ(help.code, kOk);
  EXPECT_NE(help.out.find("train-toy"), std::string::npos);
}

TEST_F(CliTest, EvalRejectsBadConfigBeforeWork) {
  const auto out = path("results");
  spit(path("bad.ini"), "[code]\nN = 96\nG = 700\n[eval]\nout = " + out.string() + "\n");
  const auto r = run_cli({"--config", path("bad.ini").string(), "eval"});
  EXPECT_EQ(r.code, kInvalidInput);
  EXPECT_FALSE(fs::exists(out));

  spit(path("typo.ini"), "[code]\nNN = 96\n");
  EXPECT_EQ(run_cli({"--config", path("typo.ini").string(), "eval"}).code, kParseError);
}

TEST_F(CliTest, EvalSweepReportsSecurityLevelsAndIsDeterministic) {
  spit(path("cfg.ini"),
       "[population]\nsubjects = 12\nsamples = 5\n[code]\nN = 96\nK = [7, 10, 13]\n"
       "[eval]\nn_sweep = [768]\n[unlink]\ndatabases = 3\n[retrieval]\ndatabase = 300\nqueries = 30\n");
  const auto a = run_cli({"--config", path("cfg.ini").string(), "--out", path("a").string(), "eval"});
  ASSERT_EQ(a.code, kOk) << a.err;
  const auto b = run_cli({"--config", path("cfg.ini").string(), "--out", path("b").string(), "eval"});
  ASSERT_EQ(b.code, kOk);
  EXPECT_EQ(a.out, b.out);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(path("a"))) {
    ++files;
    EXPECT_EQ(slurp(entry.path()), slurp(path("b") / entry.path().filename())) << entry.path();
  }
  EXPECT_GE(files, 7u);

  std::istringstream csv(slurp(path("a") / "gs_n768.csv"));
  std::string line;
  std::vector<std::string> ks;
  while (std::getline(csv, line))
    if (!line.empty() && line[0] != '#' && line[0] != 'k') ks.push_back(line.substr(0, line.find(',')));
  EXPECT_EQ(ks, (std::vector<std::string>{"56", "80", "104"}));
}

TEST_F(CliTest, EvalSurvivesOneFailingAnalysis) {
  // one sample per subject: every code is a query and the retrieval database is empty
  std::vector<FeatureVector> singles;
  for (int i = 0; i < 3; ++i) singles.push_back({"u" + std::to_string(i), "0", Bits(16, static_cast<std::uint8_t>(i % 2))});
  write_features(path("singles.jsonl"), singles, FeatureFormat::kJsonl);
  spit(path("cfg.ini"), "[population]\nsubjects = 6\nsamples = 3\n[code]\nK = [13]\n[eval]\nanalyses = [privacy, "
                        "retrieval, eer]\nn_sweep = [768]\n[retrieval]\ncodes = " +
                            path("singles.jsonl").string() + "\n");
  const auto r = run_cli({"--config", path("cfg.ini").string(), "--out", path("o").string(), "eval"});
  EXPECT_EQ(r.code, kInvalidInput);
  EXPECT_NE(r.out.find("retrieval      FAILED"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("eer            ok"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("o") / "privacy.json"));
  EXPECT_TRUE(fs::exists(path("o") / "eer.json"));
}

TEST_F(CliTest, TrainToyExportsCodesConsumableByEval) {
  spit(path("toy.ini"), "[eval]\nout = " + path("toy").string() + "\n");
  const auto t = run_cli({"--config", path("toy.ini").string(), "train-toy"});
  ASSERT_EQ(t.code, kOk) << t.err;
  const auto codes = read_features(path("toy") / "toy_codes.jsonl");
  ASSERT_EQ(codes.size(), 128u);  // 4 classes x 32 samples
  for (const auto& c : codes) EXPECT_EQ(c.dimension(), 32u);
  EXPECT_EQ(slurp(path("toy") / "toy_history.csv").rfind("# weights: alpha=8 beta=2 gamma=2", 0), 0u);

  spit(path("eval.ini"), "[population]\nsource = " + (path("toy") / "toy_codes.jsonl").string() +
                             "\nsamples = 32\n[code]\nN = 4\nK = [1, 2]\n[eval]\nanalyses = [distributions, eer, gs, "
                             "retrieval]\nn_sweep = [32]\n[retrieval]\ncodes = " +
                             (path("toy") / "toy_codes.jsonl").string() + "\n");
  const auto e = run_cli({"--config", path("eval.ini").string(), "--out", path("toy_eval").string(), "eval"});
  EXPECT_EQ(e.code, kOk) << e.out << e.err;
  EXPECT_TRUE(fs::exists(path("toy_eval") / "retrieval.json"));
}

TEST_F(CliTest, TrainToyGridSearchPrintsSelection) {
  spit(path("toy.ini"), "[toy]\ngrid_epochs = 1\ngrid_max_iterations = 1\nmax_epochs = 3\n[eval]\nout = " +
                            path("toy").string() + "\n");
  const auto t = run_cli({"--config", path("toy.ini").string(), "train-toy", "--grid-search"});
  ASSERT_EQ(t.code, kOk) << t.err;
  EXPECT_EQ(t.out.rfind("selected (alpha, beta, gamma) = (", 0), 0u);
}

TEST_F(CliTest, TrainToyReportsDivergence) {
  spit(path("toy.ini"), "[toy]\nlearning_rate = 1e12\n[eval]\nout = " + path("toy").string() + "\n");
  const auto t = run_cli({"--config", path("toy.ini").string(), "train-toy"});
  EXPECT_EQ(t.code, kInternal);
  EXPECT_NE(t.err.find("stage"), std::string::npos);
  EXPECT_NE(t.err.find("epoch"), std::string::npos);
}

}  // namespace
}  // namespace mbsketch::cli
