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

#include "tracecorona/tracing_server.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "tracecorona/exposure.hpp"

namespace tc {
namespace {

TokenUploadRecord record_for(const TokenSecret& s, UnixSeconds t,
                             const TokenHashFn& hash = token_hash) {
  return TokenUploadRecord{hash(s), encrypt_metadata(s, t), RecordTag::direct};
}

std::vector<TokenSecret> random_secrets(SeededRng& rng, int n) {
  std::vector<TokenSecret> out;
  for (int i = 0; i < n; ++i) out.push_back(rng.bytes<32>());
  return out;
}

std::vector<TokenUploadRecord> records_for(const std::vector<TokenSecret>& secrets) {
  std::vector<TokenUploadRecord> out;
  for (std::size_t i = 0; i < secrets.size(); ++i) {
    out.push_back(record_for(secrets[i], 1000 + static_cast<UnixSeconds>(i)));
  }
  return out;
}

// Critical value of chi-square with 19 degrees of freedom at alpha = 0.01.
constexpr double kChiSquare19At01 = 36.191;

class TracingServerTest : public ::testing::Test {
 protected:
  HealthAuthority ha;
  SeededRng rng{99};
};

TEST_F(TracingServerTest, InfectedUploadOfFourteenDays) {
  TracingServer sp(ha);
  const auto secrets = random_secrets(rng, 14 * 20);
  const Tan tan = ha.issue_tan("p", 0);
  EXPECT_TRUE(sp.upload_infected(tan.value, records_for(secrets)).accepted());
  sp.advance_epoch();
  SeededRng shuffle(1);
  EXPECT_EQ(sp.fetch_feed(0, shuffle).records.size(), 280u);
  const ServerStats stats = sp.stats_snapshot();
  EXPECT_EQ(stats.infected_uploads, 1u);
  EXPECT_EQ(stats.records_published, 280u);
}

TEST_F(TracingServerTest, ReusedTanRejectedAndFeedUnchanged) {
  TracingServer sp(ha);
  const Tan tan = ha.issue_tan("p", 0);
  const auto recs = records_for(random_secrets(rng, 3));
  ASSERT_TRUE(sp.upload_infected(tan.value, recs).accepted());
  EXPECT_EQ(sp.upload_infected(tan.value, recs).status, UploadStatus::invalid_tan);
  EXPECT_EQ(sp.stored_records().size(), 3u);
}

TEST_F(TracingServerTest, EmptyOrMalformedListRejectedWithoutBurningTan) {
  TracingServer sp(ha);
  const Tan tan = ha.issue_tan("p", 0);
  EXPECT_EQ(sp.upload_infected(tan.value, {}).status, UploadStatus::malformed_record);
  auto bad = records_for(random_secrets(rng, 1));
  bad[0].ciphertext.pop_back();
  EXPECT_EQ(sp.upload_infected(tan.value, bad).status, UploadStatus::malformed_record);
  EXPECT_TRUE(sp.upload_infected(tan.value, records_for(random_secrets(rng, 1)))
                  .accepted());
}

TEST_F(TracingServerTest, SecondLevelNeedsGenuinePossession) {
  TracingServer sp(ha);
  const auto infected = random_secrets(rng, 5);
  ASSERT_TRUE(sp.upload_infected(ha.issue_tan("p", 0).value, records_for(infected))
                  .accepted());
  const auto contacts = records_for(random_secrets(rng, 4));
  EXPECT_TRUE(sp.upload_second_level(infected[2], contacts).accepted());
  const auto stored = sp.stored_records();
  EXPECT_EQ(std::count_if(stored.begin(), stored.end(), [](auto& s) {
              return s.record.tag == RecordTag::second_level;
            }),
            4);
  EXPECT_EQ(sp.stats_snapshot().second_level_uploads, 1u);
}

TEST_F(TracingServerTest, ForgedProofsNeverAccepted) {
  TracingServer sp(ha);
  ASSERT_TRUE(sp.upload_infected(ha.issue_tan("p", 0).value,
                                 records_for(random_secrets(rng, 50)))
                  .accepted());
  const auto payload = records_for(random_secrets(rng, 1));
  int accepted = 0;
  for (int i = 0; i < 10000; ++i) {
    if (sp.upload_second_level(rng.bytes<32>(), payload).accepted()) ++accepted;
  }
  EXPECT_EQ(accepted, 0);
}

TEST_F(TracingServerTest, TruncationCollisionCaughtByAead) {
  // Deliberately weak 8-bit hash so that collisions are easy to find.
  const TokenHashFn weak = [](const TokenSecret& s) {
    TokenHash h{};
    h[0] = token_hash(s)[0];
    return h;
  };
  TracingServer sp(ha, {.hash = weak});
  const TokenSecret genuine = rng.bytes<32>();
  ASSERT_TRUE(sp.upload_infected(ha.issue_tan("p", 0).value,
                                 {record_for(genuine, 5000, weak)})
                  .accepted());
  TokenSecret collider;
  do {
    collider = rng.bytes<32>();
  } while (weak(collider) != weak(genuine) || collider == genuine);

  const auto payload = records_for(random_secrets(rng, 1));
  EXPECT_EQ(sp.upload_second_level(collider, payload).status,
            UploadStatus::no_matching_infected_token);
  EXPECT_TRUE(sp.upload_second_level(genuine, payload).accepted());
}

TEST_F(TracingServerTest, SuperspreaderProofs) {
  TracingServer sp(ha);
  std::vector<TokenSecret> proofs;
  for (int i = 0; i < 3; ++i) {
    const auto s = random_secrets(rng, 4);
    proofs.push_back(s[1]);
    ASSERT_TRUE(
        sp.upload_infected(ha.issue_tan("p", i).value, records_for(s)).accepted());
  }
  const auto payload = records_for(random_secrets(rng, 2));
  EXPECT_TRUE(sp.upload_superspreader_proof(proofs, payload).accepted());
  EXPECT_EQ(sp.stats_snapshot().superspreader_flags, 1u);

  EXPECT_EQ(sp.upload_superspreader_proof({proofs[0], proofs[0], proofs[0]}, payload)
                .status,
            UploadStatus::insufficient_valid_proofs);
  EXPECT_EQ(sp.upload_superspreader_proof({proofs[0], proofs[1]}, payload).status,
            UploadStatus::insufficient_valid_proofs);
}

TEST_F(TracingServerTest, SuperspreaderMixedWithForgeryRejected) {
  TracingServer sp(ha);
  std::vector<TokenSecret> valid;
  for (int i = 0; i < 3; ++i) {
    const auto s = random_secrets(rng, 2);
    valid.push_back(s[0]);
    ASSERT_TRUE(
        sp.upload_infected(ha.issue_tan("p", i).value, records_for(s)).accepted());
  }
  const auto payload = records_for(random_secrets(rng, 1));
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TokenSecret> mix = {valid[trial % 3], valid[(trial + 1) % 3],
                                    rng.bytes<32>()};
    rng.shuffle(mix);
    EXPECT_FALSE(sp.upload_superspreader_proof(mix, payload).accepted());
  }
  EXPECT_EQ(sp.stats_snapshot().superspreader_flags, 0u);
}

TEST_F(TracingServerTest, EmptyStoreGivesEmptyFeed) {
  TracingServer sp(ha);
  SeededRng shuffle(1);
  EXPECT_TRUE(sp.fetch_feed(0, shuffle).records.empty());
  EXPECT_EQ(sp.stats_snapshot(), ServerStats{});
}

TEST_F(TracingServerTest, FeedShuffleIsDeterministicAndLooksUniform) {
  TracingServer sp(ha);
  const auto recs = records_for(random_secrets(rng, 280));
  ASSERT_TRUE(sp.upload_infected(ha.issue_tan("p", 0).value, recs).accepted());
  sp.advance_epoch();
  std::map<TokenHash, std::size_t> original;
  for (std::size_t i = 0; i < recs.size(); ++i) original[recs[i].hash] = i;

  SeededRng a(7), b(7);
  EXPECT_EQ(sp.fetch_feed(0, a), sp.fetch_feed(0, b));

  // Originally adjacent records stay adjacent about 2(n-1)/n times per
  // uniform permutation.
  double adjacent_total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SeededRng r(seed);
    const auto feed = sp.fetch_feed(0, r);
    ASSERT_EQ(feed.records.size(), 280u);
    for (std::size_t i = 0; i + 1 < feed.records.size(); ++i) {
      const auto x = original[feed.records[i].hash];
      const auto y = original[feed.records[i + 1].hash];
      if (x + 1 == y || y + 1 == x) ++adjacent_total;
    }
  }
  const double mean = adjacent_total / 100;
  EXPECT_NEAR(mean, 2.0 * 279 / 280, 0.6);
}

TEST_F(TracingServerTest, BatchPositionsUniformAcrossTwenty) {
  TracingServer sp(ha);
  const auto batch1 = records_for(random_secrets(rng, 10));
  const auto batch2 = records_for(random_secrets(rng, 10));
  ASSERT_TRUE(sp.upload_infected(ha.issue_tan("a", 0).value, batch1).accepted());
  ASSERT_TRUE(sp.upload_infected(ha.issue_tan("b", 0).value, batch2).accepted());
  sp.advance_epoch();
  std::set<TokenHash> first;
  for (const auto& r : batch1) first.insert(r.hash);

  std::array<int, 20> counts{};
  constexpr int kDraws = 200;
  for (int d = 0; d < kDraws; ++d) {
    SeededRng r(1000 + d);
    const auto feed = sp.fetch_feed(0, r);
    for (std::size_t pos = 0; pos < feed.records.size(); ++pos) {
      if (first.contains(feed.records[pos].hash)) ++counts[pos];
    }
  }
  const double expected = kDraws * 10.0 / 20.0;
  double chi2 = 0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, kChiSquare19At01);
}

TEST_F(TracingServerTest, EveryRecordAppearsInExactlyOneFetch) {
  TracingServer sp(ha);
  std::map<TokenHash, int> seen;
  std::set<TokenHash> uploaded;
  std::int64_t cursor = 0;
  for (int step = 0; step < 60; ++step) {
    const auto action = rng.uniform(3);
    if (action == 0) {
      const auto recs = records_for(random_secrets(rng, 1 + rng.uniform(5)));
      for (const auto& r : recs) uploaded.insert(r.hash);
      ASSERT_TRUE(sp.upload_infected(ha.issue_tan("p", step).value, recs).accepted());
    } else if (action == 1) {
      sp.advance_epoch();
    } else {
      SeededRng r(step);
      const auto feed = sp.fetch_feed(cursor, r);
      for (const auto& rec : feed.records) ++seen[rec.hash];
      cursor = feed.feed_epoch;
    }
  }
  sp.advance_epoch();
  SeededRng r(1);
  for (const auto& rec : sp.fetch_feed(cursor, r).records) ++seen[rec.hash];
  EXPECT_EQ(seen.size(), uploaded.size());
  for (const auto& [hash, n] : seen) EXPECT_EQ(n, 1);
}

TEST_F(TracingServerTest, StatsCountActiveUsersAndNotifications) {
  TracingServer sp(ha);
  sp.report_active_user(Bytes{1});
  sp.report_active_user(Bytes{2});
  sp.report_active_user(Bytes{1});
  sp.report_notification();
  const auto s = sp.stats_snapshot();
  EXPECT_EQ(s.active_users, 2u);
  EXPECT_EQ(s.notifications_reported, 1u);
}

TEST_F(TracingServerTest, LogIsOneRecordPerLineAndReplays) {
  const auto path =
      std::filesystem::temp_directory_path() / "tclab_server_log_test.log";
  std::filesystem::remove(path);
  std::vector<StoredRecord> before;
  {
    TracingServer sp(ha, {.log_path = path});
    ASSERT_TRUE(sp.upload_infected(ha.issue_tan("a", 0).value,
                                   records_for(random_secrets(rng, 3)))
                    .accepted());
    sp.advance_epoch();
    ASSERT_TRUE(sp.upload_infected(ha.issue_tan("b", 0).value,
                                   records_for(random_secrets(rng, 2)))
                    .accepted());
    before = sp.stored_records();
  }
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    EXPECT_NO_THROW(decode_log_line(line));
    ++lines;
  }
  EXPECT_EQ(lines, 5);

  TracingServer replayed(ha, {.log_path = path});
  const auto after = replayed.stored_records();
  ASSERT_EQ(after.size(), before.size());
  for (std::size_t i = 0; i < after.size(); ++i) {
    EXPECT_EQ(after[i].record, before[i].record);
    EXPECT_EQ(after[i].epoch, before[i].epoch);
  }
  EXPECT_EQ(replayed.current_epoch(), 1);
  std::filesystem::remove(path);
}

TEST_F(TracingServerTest, HealthAuthorityNeverSeesTokenMaterial) {
  TracingServer sp(ha);
  const auto secrets = random_secrets(rng, 20);
  const auto recs = records_for(secrets);
  ASSERT_TRUE(sp.upload_infected(ha.issue_tan("p", 0).value, recs).accepted());
  const std::string state = ha.dump_state();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(state.find(to_hex(recs[i].hash)), std::string::npos);
    EXPECT_EQ(state.find(to_hex(secrets[i])), std::string::npos);
    EXPECT_EQ(state.find(to_base64(recs[i].hash)), std::string::npos);
  }
}

TEST_F(TracingServerTest, ConcurrentUploadsAndFetches) {
  TracingServer sp(ha);
  std::vector<std::string> tans;
  for (int i = 0; i < 8; ++i) tans.push_back(ha.issue_tan("p", i).value);
  std::vector<std::vector<TokenUploadRecord>> batches;
  for (int i = 0; i < 8; ++i) batches.push_back(records_for(random_secrets(rng, 10)));
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      EXPECT_TRUE(sp.upload_infected(tans[i], batches[i]).accepted());
      SeededRng r(i);
      sp.fetch_feed(0, r);
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(sp.stored_records().size(), 80u);
}

TEST(Payload, FourteenDaysOfTwentyHashes) {
  const PayloadEstimate e = estimate_payload();
  EXPECT_EQ(e.records_per_upload, 280u);
  EXPECT_EQ(e.hash_bits_per_upload, 35840u);
  EXPECT_EQ(e.hash_bytes_per_upload, 4480u);
  EXPECT_EQ(e.daily_feed_hash_bytes, 44'800'000u);
  EXPECT_DOUBLE_EQ(e.daily_feed_hash_megabytes, 44.8);
  EXPECT_EQ(e.wire_bytes_per_upload, 280u * (16 + 4 + 36 + 1));
}

}  // namespace
}  // namespace tc
