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

#include "mbsketch/feature_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "mbsketch/feature_io.hpp"

namespace mbsketch {
namespace {

TEST(SynthPopulationTest, ZeroGenuineNoiseReproducesReference) {
  auto pop = synth_population(5, 256, BitChannelModel::uniform(256, 0.0), 1);
  for (std::size_t s = 0; s < pop.size(); ++s)
    for (const auto& v : sample_genuine(pop, s, 10, 2)) EXPECT_EQ(v.bits, pop.references[s].bits);
}

TEST(SynthPopulationTest, DeskScaleProtocolShape) {
  auto pop = synth_population(50, 1024, BitChannelModel::uniform(1024, 0.05), 3);
  std::size_t total = 0;
  for (std::size_t s = 0; s < pop.size(); ++s) {
    auto samples = sample_genuine(pop, s, 20, 4);
    for (const auto& v : samples) EXPECT_EQ(v.dimension(), 1024u);
    total += samples.size();
  }
  EXPECT_EQ(total, 1000u);
}

TEST(SynthPopulationTest, SubjectIdsAreUnique) {
  auto pop = synth_population(300, 8, BitChannelModel::uniform(8, 0.1), 5);
  std::set<std::string> ids;
  for (const auto& r : pop.references) ids.insert(r.subject_id);
  EXPECT_EQ(ids.size(), 300u);
}

TEST(SynthPopulationTest, DistinctSubjectsDisagreeOnHalfTheBits) {
  auto pop = synth_population(200, 1024, BitChannelModel::uniform(1024, 0.05, 0.5), 6);
  std::vector<std::vector<FeatureVector>> samples;
  for (std::size_t s = 0; s < pop.size(); ++s) samples.push_back(sample_genuine(pop, s, 1, 7));
  double sum = 0;
  int pairs = 0;
  for (std::size_t a = 0; a < pop.size() && pairs < 10000; ++a)
    for (std::size_t b = a + 1; b < pop.size() && pairs < 10000; ++b, ++pairs)
      sum += normalized_hamming(samples[a][0].bits, samples[b][0].bits);
  EXPECT_EQ(pairs, 10000);
  EXPECT_NEAR(sum / pairs, 0.5, 0.02);
}

TEST(SynthPopulationTest, GenuineDistanceMatchesBinomialMean) {
  const double pg = 0.05;
  auto pop = synth_population(100, 1024, BitChannelModel::uniform(1024, pg), 8);
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < pop.size(); ++s)
    for (const auto& v : sample_genuine(pop, s, 100, 9)) {
      sum += static_cast<double>(hamming_distance(v.bits, pop.references[s].bits));
      ++count;
    }
  ASSERT_EQ(count, 10000u);
  const double mean = 1024 * pg;
  const double sigma_of_mean = std::sqrt(1024 * pg * (1 - pg) / static_cast<double>(count));
  EXPECT_NEAR(sum / static_cast<double>(count), mean, 3 * sigma_of_mean);
}

TEST(SynthPopulationTest, ReferenceBitsAreBalanced) {
  auto pop = synth_population(50, 1024, BitChannelModel::uniform(1024, 0.05), 10);
  for (const auto& r : pop.references) {
    double ones = 0;
    for (auto b : r.bits) ones += b;
    EXPECT_NEAR(ones / 1024.0, 0.5, 0.05);
  }
}

TEST(SynthPopulationTest, SamplingIsAPureFunctionOfSeed) {
  auto a = synth_population(3, 128, BitChannelModel::uniform(128, 0.2), 11);
  auto b = synth_population(3, 128, BitChannelModel::uniform(128, 0.2), 11);
  EXPECT_EQ(a.references[2].bits, b.references[2].bits);
  auto s1 = sample_genuine(a, "s0001", 4, 99);
  auto s2 = sample_genuine(b, "s0001", 4, 99);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(s1[i].bits, s2[i].bits);
  EXPECT_NE(sample_genuine(a, "s0001", 1, 100)[0].bits, s1[0].bits);
}

TEST(SynthPopulationTest, UnknownSubjectIsALookupError) {
  auto pop = synth_population(2, 16, BitChannelModel::uniform(16, 0.1), 1);
  EXPECT_THROW(sample_genuine(pop, "nobody", 1, 1), LookupError);
}

TEST(SynthPopulationTest, RejectsBadArguments) {
  EXPECT_THROW(synth_population(0, 16, BitChannelModel::uniform(16, 0.1), 1), ParameterError);
  EXPECT_THROW(synth_population(2, 16, BitChannelModel::uniform(8, 0.1), 1), ParameterError);
  EXPECT_THROW(BitChannelModel::uniform(8, 1.5), ParameterError);
}

TEST(EstimateChannelTest, RecoversGenuineFlipRate) {
  const std::size_t dim = 256;
  auto pop = synth_population(20, dim, BitChannelModel::uniform(dim, 0.05), 12);
  std::vector<std::vector<FeatureVector>> groups;
  for (std::size_t s = 0; s < pop.size(); ++s) groups.push_back(sample_genuine(pop, s, 100, 13));
  auto est = estimate_channel(groups);
  ASSERT_EQ(est.dimension(), dim);
  for (std::size_t i = 0; i < dim; ++i) EXPECT_NEAR(est.p_genuine[i], 0.05, 0.02) << "bit " << i;
  double mean_pi = 0;
  for (double p : est.p_impostor) mean_pi += p / dim;
  EXPECT_NEAR(mean_pi, 0.5, 0.05);
}

TEST(EstimateChannelTest, IdenticalSamplesGiveZeroGenuineRate) {
  FeatureVector a{"a", "", {0, 1, 1, 0}};
  FeatureVector b{"b", "", {1, 1, 0, 0}};
  auto est = estimate_channel({{a, a, a}, {b, b}});
  for (double p : est.p_genuine) EXPECT_EQ(p, 0.0);
}

TEST(EstimateChannelTest, ComplementaryReferencesGiveFullImpostorDisagreement) {
  FeatureVector a{"a", "", {0, 1, 1, 0, 1}};
  FeatureVector b{"b", "", {1, 0, 0, 1, 0}};
  auto est = estimate_channel({{a, a}, {b, b}});
  for (double p : est.p_impostor) EXPECT_EQ(p, 1.0);
}

TEST(EstimateChannelTest, InsufficientSamplesRejected) {
  FeatureVector a{"a", "", {0, 1}};
  EXPECT_THROW(estimate_channel({{a, a}}), ParameterError);
  EXPECT_THROW(estimate_channel({{a}, {a}}), ParameterError);
}

TEST(ReliabilityTest, ProductOfGenuineAgreementAndImpostorDisagreement) {
  BitChannelModel c{{0.0, 0.1, 0.5}, {0.5, 0.5, 1.0}};
  auto r = c.reliability();
  EXPECT_DOUBLE_EQ(r[0], 0.5);
  EXPECT_DOUBLE_EQ(r[1], 0.45);
  EXPECT_DOUBLE_EQ(r[2], 0.5);
}

TEST(FeatureIoTest, JsonlRoundTripIsByteIdentical) {
  auto pop = synth_population(4, 64, BitChannelModel::uniform(64, 0.1), 14);
  std::vector<FeatureVector> vs;
  for (std::size_t s = 0; s < pop.size(); ++s)
    for (auto& v : sample_genuine(pop, s, 3, 15)) vs.push_back(v);
  std::ostringstream first;
  write_features(first, vs, FeatureFormat::kJsonl);
  std::istringstream in(first.str());
  std::ostringstream second;
  write_features(second, read_features(in, FeatureFormat::kJsonl), FeatureFormat::kJsonl);
  EXPECT_EQ(first.str(), second.str());
  EXPECT_NE(first.str().find("{\"subject_id\":\"s0000\",\"sample_id\":\"0\",\"bits\":\""), std::string::npos);
}

TEST(FeatureIoTest, CsvRoundTrip) {
  std::vector<FeatureVector> vs{{"alice", "x", {0, 1, 1}}, {"bob", "y", {1, 0, 0}}};
  std::ostringstream out;
  write_features(out, vs, FeatureFormat::kCsv);
  EXPECT_EQ(out.str(), "alice,x,0,1,1\nbob,y,1,0,0\n");
  std::istringstream in(out.str());
  auto back = read_features(in, FeatureFormat::kCsv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].bits, vs[1].bits);
}

TEST(FeatureIoTest, CsvNonBinaryValueReportsLine) {
  std::istringstream in("subject_id,sample_id,b0,b1\na,0,0,1\na,1,0.7,1\n");
  try {
    read_features(in, FeatureFormat::kCsv);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_STREQ(e.what(), "non-binary value at line 3");
  }
}

TEST(FeatureIoTest, MixedDimensionsRejected) {
  std::istringstream in("{\"subject_id\":\"a\",\"bits\":\"0101\"}\n{\"subject_id\":\"b\",\"bits\":\"010\"}\n");
  try {
    read_features(in, FeatureFormat::kJsonl);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(FeatureIoTest, DuplicateKeysRejected) {
  std::istringstream in("a,1,0,1\nb,1,1,1\na,1,1,1\n");
  try {
    read_features(in, FeatureFormat::kCsv);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(FeatureIoTest, NonBinaryJsonlCharacterRejected) {
  std::istringstream in("{\"subject_id\":\"a\",\"bits\":\"01x1\"}\n");
  EXPECT_THROW(read_features(in, FeatureFormat::kJsonl), FormatError);
}

TEST(FeatureIoTest, IngestsCohortOf294Subjects) {
  auto pop = synth_population(294, 1024, BitChannelModel::uniform(1024, 0.03), 16);
  std::vector<FeatureVector> vs;
  for (std::size_t s = 0; s < pop.size(); ++s)
    for (auto& v : sample_genuine(pop, s, 2, 17)) vs.push_back(v);
  const auto path = std::filesystem::temp_directory_path() / "mbsketch_cohort_294.jsonl";
  write_features(path, vs, FeatureFormat::kJsonl);
  auto back = ingest_features(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.size(), 294u);
  EXPECT_EQ(back.dimension(), 1024u);
  EXPECT_EQ(back.recorded.front().size(), 2u);
  EXPECT_EQ(back.channel.dimension(), 1024u);
}

TEST(FeatureIoTest, FormatFromExtension) {
  EXPECT_EQ(format_from_path("x.csv"), FeatureFormat::kCsv);
  EXPECT_EQ(format_from_path("x.jsonl"), FeatureFormat::kJsonl);
  EXPECT_THROW(format_from_path("x.bin"), FormatError);
}

}  // namespace
}  // namespace mbsketch
