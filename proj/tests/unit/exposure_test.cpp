// Copyright 2026 The tclab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tracecorona/exposure.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <tuple>

namespace tc {
namespace {

EncounterToken make_token(SeededRng& rng, UnixSeconds start, Seconds duration = 600,
                          Dbm rssi = -65) {
  EncounterToken t;
  t.secret = rng.bytes<32>();
  t.start_time = start;
  t.first_seen = start;
  t.duration = duration;
  t.max_signal_strength = rssi;
  t.frame_index = start / 900;
  t.peer_ephemeral_id = rng.bytes<16>();
  return t;
}

TokenUploadRecord record_of(const TokenSecret& s, UnixSeconds t,
                            RecordTag tag = RecordTag::direct) {
  return TokenUploadRecord{token_hash(s), encrypt_metadata(s, t), tag};
}

std::vector<ExposureNotification> brute_force(const TokenStore& store,
                                              const PublishedFeed& feed,
                                              Seconds epsilon) {
  std::vector<ExposureNotification> out;
  for (const auto& [key, token] : store) {
    for (const auto& record : feed.records) {
      if (token_hash(token.secret) != record.hash) continue;
      UnixSeconds remote;
      try {
        remote = decrypt_metadata(token.secret, record.ciphertext);
      } catch (const AuthenticationFailure&) {
        continue;
      }
      if (remote - token.start_time > epsilon || token.start_time - remote > epsilon) {
        continue;
      }
      out.push_back(ExposureNotification{
          record.hash,
          record.tag == RecordTag::direct ? NotificationLevel::direct
                                          : NotificationLevel::second_level,
          record.tag == RecordTag::possible_superspreader, token.start_time,
          token.duration, risk_score(token.duration, token.max_signal_strength)});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.encounter_time, a.matched_hash, a.level, a.superspreader_flag) <
           std::tie(b.encounter_time, b.matched_hash, b.level, b.superspreader_flag);
  });
  return out;
}

// A store plus a feed that contains near-miss, far-miss, forged and
// unrelated records in roughly equal measure.
struct Fixture {
  TokenStore store;
  PublishedFeed feed;
};

Fixture random_fixture(SeededRng& rng, int tokens, int records) {
  Fixture f;
  std::vector<TokenSecret> secrets;
  for (int i = 0; i < tokens; ++i) {
    auto t = make_token(rng, 1'600'000'000 + static_cast<UnixSeconds>(rng.uniform(86400)),
                        static_cast<Seconds>(rng.uniform(1800)),
                        -40 - static_cast<Dbm>(rng.uniform(60)));
    f.store.insert(t);
    secrets.push_back(t.secret);
  }
  std::vector<const EncounterToken*> all;
  for (const auto& [k, t] : f.store) all.push_back(&t);
  for (int i = 0; i < records; ++i) {
    const auto kind = rng.uniform(5);
    const auto tag = static_cast<RecordTag>(rng.uniform(3));
    if (kind == 4 || all.empty()) {
      f.feed.records.push_back(record_of(rng.bytes<32>(), 0, tag));
      continue;
    }
    const EncounterToken& t = *all[rng.uniform(all.size())];
    if (kind == 3) {
      TokenUploadRecord forged = record_of(rng.bytes<32>(), t.start_time, tag);
      forged.hash = token_hash(t.secret);
      f.feed.records.push_back(forged);
      continue;
    }
    const auto delta = static_cast<Seconds>(rng.uniform(241)) - 120;
    f.feed.records.push_back(record_of(t.secret, t.start_time + delta, tag));
  }
  return f;
}

TEST(MatchFeed, EmptyFeed) {
  SeededRng rng(1);
  TokenStore store;
  store.insert(make_token(rng, 1000));
  EXPECT_TRUE(match_feed(store, PublishedFeed{}, 30).empty());
}

TEST(MatchFeed, HonestEncounterGivesOneDirectNotification) {
  SeededRng rng(2);
  TokenStore store;
  const auto t = make_token(rng, 50'000, 900, -55);
  store.insert(t);
  PublishedFeed feed;
  feed.records = {record_of(rng.bytes<32>(), 50'000), record_of(t.secret, 50'000)};
  const auto got = match_feed(store, feed, 30);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].level, NotificationLevel::direct);
  EXPECT_FALSE(got[0].superspreader_flag);
  EXPECT_EQ(got[0].matched_hash, token_hash(t.secret));
  EXPECT_EQ(got[0].encounter_time, 50'000);
  EXPECT_DOUBLE_EQ(got[0].risk_score, 15.0);
}

TEST(MatchFeed, RelayedTimestampOutsideWindow) {
  SeededRng rng(3);
  TokenStore store;
  const auto t = make_token(rng, 80'000);
  store.insert(t);
  PublishedFeed feed;
  feed.records = {record_of(t.secret, 80'000 + 600)};
  EXPECT_TRUE(match_feed(store, feed, 30).empty());
  feed.records = {record_of(t.secret, 80'000 - 30)};
  EXPECT_EQ(match_feed(store, feed, 30).size(), 1u);
  feed.records = {record_of(t.secret, 80'000 + 31)};
  EXPECT_TRUE(match_feed(store, feed, 30).empty());
}

TEST(MatchFeed, HashMatchWithWrongCiphertextIsSkipped) {
  SeededRng rng(4);
  TokenStore store;
  const auto t = make_token(rng, 1000);
  store.insert(t);
  PublishedFeed feed;
  TokenUploadRecord r = record_of(rng.bytes<32>(), 1000);
  r.hash = token_hash(t.secret);
  feed.records = {r};
  EXPECT_TRUE(match_feed(store, feed, 30).empty());
}

TEST(MatchFeed, LevelMirrorsRecordTag) {
  SeededRng rng(5);
  TokenStore store;
  const auto a = make_token(rng, 1000);
  const auto b = make_token(rng, 2000);
  const auto c = make_token(rng, 3000);
  store.insert(a);
  store.insert(b);
  store.insert(c);
  PublishedFeed feed;
  feed.records = {record_of(c.secret, 3000, RecordTag::possible_superspreader),
                  record_of(b.secret, 2000, RecordTag::second_level),
                  record_of(a.secret, 1000, RecordTag::direct)};
  const auto got = match_feed(store, feed, 30);
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0].level, NotificationLevel::direct);
  EXPECT_EQ(got[1].level, NotificationLevel::second_level);
  EXPECT_FALSE(got[1].superspreader_flag);
  EXPECT_EQ(got[2].level, NotificationLevel::second_level);
  EXPECT_TRUE(got[2].superspreader_flag);
  EXPECT_EQ(to_string(got[1].level), "second_level");
}

TEST(MatchFeed, EquivalentToBruteForce) {
  SeededRng rng(6);
  for (int round = 0; round < 20; ++round) {
    const int tokens = static_cast<int>(rng.uniform(120));
    const int records = static_cast<int>(rng.uniform(120));
    const auto f = random_fixture(rng, tokens, records);
    const Seconds eps = 1 + static_cast<Seconds>(rng.uniform(120));
    EXPECT_EQ(match_feed(f.store, f.feed, eps), brute_force(f.store, f.feed, eps));
  }
  const auto big = random_fixture(rng, 1000, 1000);
  const auto got = match_feed(big.store, big.feed, 30);
  EXPECT_EQ(got, brute_force(big.store, big.feed, 30));
  EXPECT_FALSE(got.empty());
}

TEST(MatchFeed, EpsilonMonotone) {
  SeededRng rng(7);
  const auto f = random_fixture(rng, 200, 400);
  std::vector<ExposureNotification> previous;
  for (Seconds eps : {0, 1, 10, 30, 60, 119, 120, 500}) {
    const auto now = match_feed(f.store, f.feed, eps);
    for (const auto& n : previous) {
      EXPECT_NE(std::find(now.begin(), now.end(), n), now.end());
    }
    EXPECT_GE(now.size(), previous.size());
    previous = now;
  }
}

TEST(MatchFeed, NoSpuriousMatchesBetweenStrangers) {
  SeededRng rng(8);
  TokenStore store;
  for (int i = 0; i < 1000; ++i) store.insert(make_token(rng, i * 60));
  PublishedFeed feed;
  for (int i = 0; i < 100'000; ++i) {
    feed.records.push_back(TokenUploadRecord{rng.bytes<16>(), Bytes(36), RecordTag::direct});
  }
  EXPECT_TRUE(match_feed(store, feed, 30).empty());
}

TEST(RiskScore, Table) {
  EXPECT_DOUBLE_EQ(risk_score(0, -40), 0.0);
  EXPECT_DOUBLE_EQ(risk_score(0, -100), 0.0);
  EXPECT_DOUBLE_EQ(risk_score(900, -55), 15.0);
  EXPECT_DOUBLE_EQ(risk_score(900, -80), 3.75);
  EXPECT_DOUBLE_EQ(risk_score(900, -60), 15.0);
  EXPECT_DOUBLE_EQ(risk_score(900, -75), 7.5);
  EXPECT_THROW(risk_score(-1, -50), std::invalid_argument);
}

TEST(RiskScore, MonotoneInDurationAndRssi) {
  for (Seconds d = 0; d < 3600; d += 37) {
    for (Dbm r = -100; r < -30; ++r) {
      EXPECT_LE(risk_score(d, r), risk_score(d + 37, r));
      EXPECT_LE(risk_score(d, r), risk_score(d, r + 1));
    }
  }
}

class Superspreader : public ::testing::Test {
 protected:
  SeededRng rng{9};
  TokenStore store;
  std::vector<EncounterToken> tokens;

  void SetUp() override {
    for (int i = 0; i < 4; ++i) {
      tokens.push_back(make_token(rng, 10'000 + i * 1000));
      store.insert(tokens.back());
    }
  }

  std::vector<ExposureNotification> matched(std::initializer_list<int> which) {
    PublishedFeed feed;
    for (int i : which) feed.records.push_back(record_of(tokens[i].secret, tokens[i].start_time));
    return match_feed(store, feed, 30);
  }
};

TEST_F(Superspreader, BelowThreshold) {
  EXPECT_FALSE(detect_superspreader_candidate(store, matched({0, 1}), 3));
}

TEST_F(Superspreader, ThreeDistinctMatches) {
  const auto bundle = detect_superspreader_candidate(store, matched({0, 1, 2}), 3);
  ASSERT_TRUE(bundle);
  ASSERT_EQ(bundle->size(), 3u);
  for (int i : {0, 1, 2}) {
    EXPECT_NE(std::find(bundle->begin(), bundle->end(), tokens[i].secret), bundle->end());
  }
}

TEST_F(Superspreader, DuplicateRecordsCountOnce) {
  EXPECT_FALSE(detect_superspreader_candidate(store, matched({0, 0, 1}), 3));
}

TEST_F(Superspreader, SameUploadBatchStillCounts) {
  // Tokens 1 and 2 belong to the same infected person; the client cannot
  // tell, so they count as separate records.
  EXPECT_TRUE(detect_superspreader_candidate(store, matched({0, 1, 2}), 3));
}

TEST_F(Superspreader, SecondLevelMatchesIgnored) {
  PublishedFeed feed;
  for (int i : {0, 1, 2}) {
    feed.records.push_back(
        record_of(tokens[i].secret, tokens[i].start_time, RecordTag::second_level));
  }
  EXPECT_FALSE(detect_superspreader_candidate(store, match_feed(store, feed, 30), 3));
}

TEST(Redact, IdentityAndDurationFilter) {
  SeededRng rng(10);
  TokenStore store;
  store.insert(make_token(rng, 100, 300));
  store.insert(make_token(rng, 200, 900));
  store.insert(make_token(rng, 300, 599));
  const auto same = redact_tokens(store, [](const EncounterToken&) { return false; });
  EXPECT_TRUE(std::equal(same.begin(), same.end(), store.begin(), store.end()));

  const auto longer =
      redact_tokens(store, [](const EncounterToken& t) { return t.duration < 600; });
  ASSERT_EQ(longer.size(), 1u);
  EXPECT_EQ(longer.begin()->second.duration, 900);
  EXPECT_EQ(store.size(), 3u);
}

TEST(BuildUpload, OneDirectRecordPerToken) {
  SeededRng rng(11);
  TokenStore store;
  for (int i = 0; i < 20; ++i) store.insert(make_token(rng, i * 900));
  const auto records = build_upload(store);
  ASSERT_EQ(records.size(), 20u);
  for (const auto& r : records) {
    EXPECT_EQ(r.tag, RecordTag::direct);
    EXPECT_EQ(r.ciphertext.size(), kMetadataCiphertextSize);
  }
  PublishedFeed feed{records, 0};
  EXPECT_EQ(match_feed(store, feed, 0).size(), 20u);
}

}  // namespace
}  // namespace tc
