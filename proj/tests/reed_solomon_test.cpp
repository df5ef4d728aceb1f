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

#include "mbsketch/reed_solomon.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "mbsketch/random.hpp"

namespace mbsketch {
namespace {

// Bitwise carry-less multiply reduced by 0x11D; independent of the log tables.
std::uint8_t slow_mul(std::uint8_t a, std::uint8_t b) {
  unsigned acc = 0;
  for (int i = 0; i < 8; ++i)
    if (b & (1u << i)) acc ^= static_cast<unsigned>(a) << i;
  for (int bit = 15; bit >= 8; --bit)
    if (acc & (1u << bit)) acc ^= kGfPrimitivePoly << (bit - 8);
  return static_cast<std::uint8_t>(acc);
}

Message random_message(Rng& rng, std::size_t k) {
  std::uniform_int_distribution<int> sym(0, 255);
  Message m(k);
  for (auto& s : m) s = Gf256(static_cast<std::uint8_t>(sym(rng)));
  return m;
}

// Corrupts `count` distinct positions with nonzero error values.
void corrupt(Codeword& word, std::size_t count, Rng& rng) {
  std::vector<std::size_t> pos(word.size());
  std::iota(pos.begin(), pos.end(), 0);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::uniform_int_distribution<int> err(1, 255);
  for (std::size_t i = 0; i < count; ++i) word[pos[i]] += Gf256(static_cast<std::uint8_t>(err(rng)));
}

bool is_codeword(const ReedSolomon& rs, const Codeword& word) {
  Message head(word.begin(), word.begin() + static_cast<long>(rs.params().k_symbols));
  return rs.encode(head) == word;
}

TEST(Gf256Test, MultiplicationMatchesCarrylessOracleExhaustively) {
  for (unsigned a = 0; a < 256; ++a)
    for (unsigned b = 0; b < 256; ++b)
      ASSERT_EQ((Gf256(a) * Gf256(b)).value(), slow_mul(a, b)) << a << "*" << b;
}

TEST(Gf256Test, ExpAndLogAreInverse) {
  for (unsigned a = 1; a < 256; ++a) {
    EXPECT_EQ(Gf256::alpha_pow(Gf256(a).log()).value(), a);
    EXPECT_EQ((Gf256(a) * Gf256(a).inverse()).value(), 1u);
  }
  for (unsigned i = 0; i < 255; ++i) EXPECT_EQ(Gf256::alpha_pow(i).log(), i);
}

TEST(Gf256Test, FieldAxiomsOnSampledTriples) {
  Rng rng = make_rng(11);
  std::uniform_int_distribution<int> d(0, 255);
  for (int i = 0; i < 200000; ++i) {
    Gf256 a(d(rng)), b(d(rng)), c(d(rng));
    ASSERT_EQ((a * b) * c, a * (b * c));
    ASSERT_EQ((a + b) + c, a + (b + c));
    ASSERT_EQ(a * b, b * a);
    ASSERT_EQ(a * (b + c), a * b + a * c);
  }
}

TEST(Gf256Test, ZeroHasNoInverse) { EXPECT_THROW(Gf256(0).inverse(), std::domain_error); }

TEST(RsCodeParamsTest, PaperGeometry) {
  const auto p = RsCodeParams::shortened(96, 13);
  EXPECT_EQ(p.n_prime, 255u);
  EXPECT_EQ(p.k_prime, 13u + (255u - 96u));
  EXPECT_EQ(p.t, 41u);
  EXPECT_EQ(p.n_bits(), 768u);
  EXPECT_EQ(p.k_bits(), 104u);
}

TEST(RsCodeParamsTest, OddRedundancyFloorsT) { EXPECT_EQ(RsCodeParams::shortened(33, 8).t, 12u); }

TEST(RsCodeParamsTest, RejectsInvalidGeometry) {
  EXPECT_THROW(RsCodeParams::shortened(10, 11), ParameterError);
  EXPECT_THROW(RsCodeParams::shortened(256, 11), ParameterError);
  EXPECT_THROW(RsCodeParams::shortened(10, 0), ParameterError);
}

TEST(ReedSolomonTest, ZeroMessageEncodesToZeroCodeword) {
  for (auto [n, k] : {std::pair{96, 13}, {32, 7}, {255, 223}}) {
    const auto p = RsCodeParams::shortened(n, k);
    Codeword c = rs_encode(Message(p.k_symbols), p);
    EXPECT_EQ(c, Codeword(p.n_symbols));
  }
}

TEST(ReedSolomonTest, EncodeLengthAndSystematicPrefix) {
  const auto p = RsCodeParams::shortened(96, 13);
  ReedSolomon rs(p);
  Rng rng = make_rng(1);
  Message m = random_message(rng, 13);
  Codeword c = rs.encode(m);
  ASSERT_EQ(c.size(), 96u);
  EXPECT_EQ(c.size() * 8, 768u);
  EXPECT_TRUE(std::equal(m.begin(), m.end(), c.begin()));
  EXPECT_THROW(rs.encode(Message(12)), ParameterError);
}

TEST(ReedSolomonTest, SyndromesVanishOnCodewords) {
  const auto p = RsCodeParams::shortened(64, 13);
  ReedSolomon rs(p);
  Rng rng = make_rng(2);
  for (int i = 0; i < 100; ++i) {
    auto s = rs.syndromes(rs.encode(random_message(rng, 13)));
    EXPECT_EQ(s.size(), 51u);
    for (Gf256 v : s) ASSERT_TRUE(v.is_zero());
  }
}

TEST(ReedSolomonTest, SingleErrorSyndromeMatchesDirectEvaluation) {
  const auto p = RsCodeParams::shortened(32, 7);
  ReedSolomon rs(p);
  Rng rng = make_rng(3);
  Codeword c = rs.encode(random_message(rng, 7));
  for (std::size_t idx = 0; idx < 32; ++idx) {
    const Gf256 v(static_cast<std::uint8_t>(1 + (idx * 37) % 255));
    Codeword r = c;
    r[idx] += v;
    const unsigned degree = static_cast<unsigned>(31 - idx);
    auto s = rs.syndromes(r);
    for (unsigned i = 1; i <= s.size(); ++i)
      ASSERT_EQ(s[i - 1], v * Gf256(2).pow(degree * i)) << "idx " << idx << " i " << i;
  }
}

TEST(ReedSolomonTest, NonCodewordHasNonzeroSyndrome) {
  const auto p = RsCodeParams::shortened(32, 7);
  ReedSolomon rs(p);
  Rng rng = make_rng(4);
  std::uniform_int_distribution<int> sym(0, 255);
  for (int trial = 0; trial < 2000; ++trial) {
    Codeword r(32);
    for (auto& s : r) s = Gf256(static_cast<std::uint8_t>(sym(rng)));
    auto s = rs.syndromes(r);
    const bool all_zero = std::all_of(s.begin(), s.end(), [](Gf256 v) { return v.is_zero(); });
    ASSERT_EQ(all_zero, is_codeword(rs, r));
  }
}

TEST(ReedSolomonTest, CleanCodewordDecodesToMessage) {
  const auto p = RsCodeParams::shortened(96, 13);
  ReedSolomon rs(p);
  Rng rng = make_rng(5);
  Message m = random_message(rng, 13);
  auto out = rs.decode(rs.encode(m));
  ASSERT_TRUE(out);
  EXPECT_EQ(*out, m);
}

TEST(ReedSolomonTest, ExactlyTErrorsAlwaysCorrected) {
  const auto p = RsCodeParams::shortened(32, 7);
  ASSERT_EQ(p.t, 12u);
  ReedSolomon rs(p);
  Rng rng = make_rng(6);
  for (int trial = 0; trial < 10000; ++trial) {
    Message m = random_message(rng, 7);
    Codeword r = rs.encode(m);
    corrupt(r, p.t, rng);
    auto out = rs.decode_detailed(r);
    ASSERT_TRUE(out) << "trial " << trial;
    ASSERT_EQ(out->message, m);
    ASSERT_EQ(out->corrected, p.t);
  }
}

TEST(ReedSolomonTest, BoundedDistancePropertyForAllErrorCounts) {
  for (auto [n, k] : {std::pair{33, 8}, {96, 13}, {20, 19}, {255, 223}}) {
    const auto p = RsCodeParams::shortened(n, k);
    ReedSolomon rs(p);
    Rng rng = make_rng(7, {static_cast<std::uint64_t>(n)});
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t e = static_cast<std::size_t>(trial) % (p.t + 1);
      Message m = random_message(rng, p.k_symbols);
      Codeword r = rs.encode(m);
      corrupt(r, e, rng);
      auto out = rs.decode(r);
      ASSERT_TRUE(out) << n << "," << k << " e=" << e;
      ASSERT_EQ(*out, m);
    }
  }
}

TEST(ReedSolomonTest, BeyondTNeverSilentlyReturnsOriginal) {
  const auto p = RsCodeParams::shortened(32, 7);
  ReedSolomon rs(p);
  Rng rng = make_rng(8);
  int failures = 0, miscorrections = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    Message m = random_message(rng, 7);
    Codeword r = rs.encode(m);
    corrupt(r, p.t + 1, rng);
    auto out = rs.decode(r);
    if (!out) {
      ++failures;
    } else {
      ASSERT_NE(*out, m);
      // whatever it lands on must be a codeword within t of the received word
      Codeword landed = rs.encode(*out);
      std::size_t dist = 0;
      for (std::size_t i = 0; i < r.size(); ++i) dist += landed[i] != r[i];
      ASSERT_LE(dist, p.t);
      ++miscorrections;
    }
  }
  EXPECT_EQ(failures + miscorrections, 2000);
  EXPECT_GT(failures, 0);
}

TEST(ReedSolomonTest, ReencodingDecodedOutputReproducesCodeword) {
  const auto p = RsCodeParams::shortened(32, 7);
  ReedSolomon rs(p);
  Rng rng = make_rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    Codeword c = rs.encode(random_message(rng, 7));
    auto out = rs.decode(c);
    ASSERT_TRUE(out);
    ASSERT_EQ(rs.encode(*out), c);
  }
}

TEST(ReedSolomonTest, ShortenedDecodingMatchesZeroPaddedMotherCode) {
  const auto shortened = RsCodeParams::shortened(64, 13);
  const auto mother = RsCodeParams::shortened(255, shortened.k_prime);
  ASSERT_EQ(mother.parity_symbols(), shortened.parity_symbols());
  ReedSolomon rs_short(shortened), rs_mother(mother);
  const std::size_t pad = 255 - 64;
  Rng rng = make_rng(10);
  for (int trial = 0; trial < 500; ++trial) {
    Message m = random_message(rng, 13);
    Codeword r = rs_short.encode(m);
    corrupt(r, static_cast<std::size_t>(trial) % (shortened.t + 4), rng);

    Codeword padded(pad);
    padded.insert(padded.end(), r.begin(), r.end());
    auto via_mother = rs_mother.decode(padded);
    auto via_short = rs_short.decode(r);
    if (via_short) {
      ASSERT_TRUE(via_mother);
      ASSERT_TRUE(std::all_of(via_mother->begin(), via_mother->begin() + static_cast<long>(pad),
                              [](Gf256 v) { return v.is_zero(); }));
      ASSERT_TRUE(std::equal(via_short->begin(), via_short->end(), via_mother->begin() + static_cast<long>(pad)));
    } else if (via_mother) {
      // mother decoder may "correct" into the pad region, which the shortened code excludes
      ASSERT_FALSE(std::all_of(via_mother->begin(), via_mother->begin() + static_cast<long>(pad),
                               [](Gf256 v) { return v.is_zero(); }));
    }
  }
}

TEST(ReedSolomonTest, DecodingIsDeterministic) {
  const auto p = RsCodeParams::shortened(96, 13);
  ReedSolomon rs(p);
  Rng rng = make_rng(12);
  std::uniform_int_distribution<int> sym(0, 255);
  for (int trial = 0; trial < 50; ++trial) {
    Codeword r = rs.encode(random_message(rng, 13));
    corrupt(r, 30 + trial, rng);
    EXPECT_EQ(rs.decode(r), rs.decode(r));
    EXPECT_EQ(rs.decode(r), ReedSolomon(p).decode(r));
  }
}

TEST(ReedSolomonTest, WrongLengthIsAParameterError) {
  ReedSolomon rs(RsCodeParams::shortened(32, 7));
  EXPECT_THROW(rs.syndromes(Codeword(31)), ParameterError);
  EXPECT_THROW(rs.decode(Codeword(33)), ParameterError);
}

}  // namespace
}  // namespace mbsketch
