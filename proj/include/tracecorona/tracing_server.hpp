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

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tracecorona/health_authority.hpp"
#include "tracecorona/wire.hpp"

namespace tc {

using TokenHashFn = std::function<TokenHash(const TokenSecret&)>;

struct TracingServerOptions {
  std::size_t superspreader_threshold = 3;
  // Hash used to check possession proofs. Tests swap in a deliberately
  // weak hash to manufacture truncation collisions.
  TokenHashFn hash = token_hash;
  // Append-only record log; replayed on construction when it exists.
  std::optional<std::filesystem::path> log_path;
};

// Anonymous aggregates only.
struct ServerStats {
  std::uint64_t active_users = 0;
  std::uint64_t infected_uploads = 0;
  std::uint64_t records_published = 0;
  std::uint64_t second_level_uploads = 0;
  std::uint64_t superspreader_flags = 0;
  std::uint64_t notifications_reported = 0;

  bool operator==(const ServerStats&) const = default;
};

// One ingested record. Records are kept individually; nothing links the
// records of one upload after ingestion.
struct StoredRecord {
  TokenUploadRecord record;
  std::int64_t epoch = 0;
};

// Log line: base64(epoch(8) || record wire encoding).
std::string encode_log_line(const StoredRecord& stored);
StoredRecord decode_log_line(std::string_view line);

// Service provider that authenticates uploads, stores records, and
// publishes the shuffled feed. Uploads are serialized; feed reads may run
// concurrently with each other.
class TracingServer {
 public:
  explicit TracingServer(HealthAuthority& ha, TracingServerOptions options = {});

  UploadResult upload_infected(std::string_view tan,
                               const std::vector<TokenUploadRecord>& records,
                               std::optional<UnixSeconds> now = std::nullopt);
  UploadResult upload_second_level(const TokenSecret& proof,
                                   const std::vector<TokenUploadRecord>& records);
  UploadResult upload_superspreader_proof(
      const std::vector<TokenSecret>& proofs,
      const std::vector<TokenUploadRecord>& records);

  // Records of closed epochs [since_epoch, current_epoch), shuffled with
  // rng. feed_epoch is the cursor for the next call.
  PublishedFeed fetch_feed(std::int64_t since_epoch, SeededRng& rng) const;

  // Closes the current epoch; returns the new current epoch.
  std::int64_t advance_epoch();
  std::int64_t current_epoch() const;

  void report_active_user(ByteView anonymous_id);
  void report_notification();
  ServerStats stats_snapshot() const;

  std::vector<StoredRecord> stored_records() const;
  const TracingServerOptions& options() const { return options_; }

 private:
  bool well_formed(const std::vector<TokenUploadRecord>& records) const;
  // Index of a direct record that the proof opens, excluding `used`.
  std::optional<std::size_t> match_proof(const TokenSecret& proof,
                                         const std::set<std::size_t>& used) const;
  void ingest(const std::vector<TokenUploadRecord>& records, RecordTag tag);
  void replay_log();

  HealthAuthority& ha_;
  TracingServerOptions options_;
  mutable std::shared_mutex mu_;
  std::vector<StoredRecord> records_;
  std::unordered_map<TokenHash, std::vector<std::size_t>, ByteArrayHash> direct_index_;
  std::int64_t epoch_ = 0;
  ServerStats stats_;
  std::set<Bytes> active_ids_;
};

// Upload/download volume for the nominal parameters: `days` of
// `tokens_per_day` 128-bit hashes per infected user, and a daily feed for
// `infected_per_day` uploads.
struct PayloadEstimate {
  std::uint64_t records_per_upload = 0;
  std::uint64_t hash_bits_per_upload = 0;
  std::uint64_t hash_bytes_per_upload = 0;
  std::uint64_t wire_bytes_per_upload = 0;
  std::uint64_t daily_feed_hash_bytes = 0;
  std::uint64_t daily_feed_wire_bytes = 0;
  double daily_feed_hash_megabytes = 0;
  // Commonly quoted figure, from rounding 4,480 B down to "4.3 kB"
  // (4.375 KiB) and multiplying by 10,000.
  double reference_daily_megabytes = 43.0;
  std::string note;

  bool operator==(const PayloadEstimate&) const = default;
};

PayloadEstimate estimate_payload(int days = 14, int tokens_per_day = 20,
                                 int infected_per_day = 10000);

}  // namespace tc
