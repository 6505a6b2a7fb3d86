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

#include <fstream>
#include <mutex>
#include <sstream>

namespace tc {

std::string encode_log_line(const StoredRecord& stored) {
  Bytes raw;
  put_be(raw, static_cast<std::uint64_t>(stored.epoch), 8);
  encode_record(raw, stored.record);
  return to_base64(raw);
}

StoredRecord decode_log_line(std::string_view line) {
  Bytes raw;
  try {
    raw = from_base64(line);
  } catch (const std::invalid_argument& e) {
    throw WireError(e.what());
  }
  try {
    ByteReader in(raw);
    StoredRecord s;
    s.epoch = static_cast<std::int64_t>(in.read_be(8));
    s.record = decode_record(in);
    if (!in.done()) throw WireError("trailing bytes in log line");
    return s;
  } catch (const std::out_of_range& e) {
    throw WireError(e.what());
  }
}

TracingServer::TracingServer(HealthAuthority& ha, TracingServerOptions options)
    : ha_(ha), options_(std::move(options)) {
  if (!options_.hash) options_.hash = token_hash;
  if (options_.log_path && std::filesystem::exists(*options_.log_path)) {
    replay_log();
  }
}

void TracingServer::replay_log() {
  std::ifstream in(*options_.log_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    StoredRecord s = decode_log_line(line);
    if (s.record.tag == RecordTag::direct) {
      direct_index_[s.record.hash].push_back(records_.size());
    }
    epoch_ = std::max(epoch_, s.epoch);
    records_.push_back(std::move(s));
    ++stats_.records_published;
  }
}

bool TracingServer::well_formed(
    const std::vector<TokenUploadRecord>& records) const {
  if (records.empty()) return false;
  for (const auto& r : records) {
    if (r.ciphertext.size() != kMetadataCiphertextSize) return false;
  }
  return true;
}

void TracingServer::ingest(const std::vector<TokenUploadRecord>& records,
                           RecordTag tag) {
  std::ofstream log;
  if (options_.log_path) {
    log.open(*options_.log_path, std::ios::app);
    if (!log) throw std::runtime_error("cannot open server log");
  }
  for (const auto& r : records) {
    StoredRecord s{r, epoch_};
    s.record.tag = tag;
    if (tag == RecordTag::direct) {
      direct_index_[s.record.hash].push_back(records_.size());
    }
    if (log.is_open()) log << encode_log_line(s) << '\n';
    records_.push_back(std::move(s));
    ++stats_.records_published;
  }
}

UploadResult TracingServer::upload_infected(
    std::string_view tan, const std::vector<TokenUploadRecord>& records,
    std::optional<UnixSeconds> now) {
  std::unique_lock lock(mu_);
  // Validate before touching the TAN so a malformed upload does not burn it.
  if (!well_formed(records)) return {UploadStatus::malformed_record};
  if (ha_.verify_tan(tan, now) != TanVerdict::accepted) {
    return {UploadStatus::invalid_tan};
  }
  ingest(records, RecordTag::direct);
  ++stats_.infected_uploads;
  return {UploadStatus::accepted};
}

std::optional<std::size_t> TracingServer::match_proof(
    const TokenSecret& proof, const std::set<std::size_t>& used) const {
  auto it = direct_index_.find(options_.hash(proof));
  if (it == direct_index_.end()) return std::nullopt;
  for (std::size_t idx : it->second) {
    if (used.contains(idx)) continue;
    // A hash hit alone may be a truncation collision; the AEAD check
    // confirms the proof is the actual token.
    if (try_decrypt_metadata(proof, records_[idx].record.ciphertext)) return idx;
  }
  return std::nullopt;
}

UploadResult TracingServer::upload_second_level(
    const TokenSecret& proof, const std::vector<TokenUploadRecord>& records) {
  std::unique_lock lock(mu_);
  if (!well_formed(records)) return {UploadStatus::malformed_record};
  if (!match_proof(proof, {})) return {UploadStatus::no_matching_infected_token};
  ingest(records, RecordTag::second_level);
  ++stats_.second_level_uploads;
  return {UploadStatus::accepted};
}

UploadResult TracingServer::upload_superspreader_proof(
    const std::vector<TokenSecret>& proofs,
    const std::vector<TokenUploadRecord>& records) {
  std::unique_lock lock(mu_);
  if (!well_formed(records)) return {UploadStatus::malformed_record};
  if (proofs.size() < options_.superspreader_threshold) {
    return {UploadStatus::insufficient_valid_proofs};
  }
  std::set<std::size_t> used;
  for (const auto& proof : proofs) {
    auto idx = match_proof(proof, used);
    if (!idx) return {UploadStatus::insufficient_valid_proofs};
    used.insert(*idx);
  }
  ingest(records, RecordTag::possible_superspreader);
  ++stats_.superspreader_flags;
  return {UploadStatus::accepted};
}

PublishedFeed TracingServer::fetch_feed(std::int64_t since_epoch,
                                        SeededRng& rng) const {
  std::shared_lock lock(mu_);
  PublishedFeed feed;
  feed.feed_epoch = epoch_;
  for (const auto& s : records_) {
    if (s.epoch >= since_epoch && s.epoch < epoch_) {
      feed.records.push_back(s.record);
    }
  }
  rng.shuffle(feed.records);
  return feed;
}

std::int64_t TracingServer::advance_epoch() {
  std::unique_lock lock(mu_);
  return ++epoch_;
}

std::int64_t TracingServer::current_epoch() const {
  std::shared_lock lock(mu_);
  return epoch_;
}

void TracingServer::report_active_user(ByteView anonymous_id) {
  std::unique_lock lock(mu_);
  active_ids_.emplace(anonymous_id.begin(), anonymous_id.end());
  stats_.active_users = active_ids_.size();
}

void TracingServer::report_notification() {
  std::unique_lock lock(mu_);
  ++stats_.notifications_reported;
}

ServerStats TracingServer::stats_snapshot() const {
  std::shared_lock lock(mu_);
  return stats_;
}

std::vector<StoredRecord> TracingServer::stored_records() const {
  std::shared_lock lock(mu_);
  return records_;
}

PayloadEstimate estimate_payload(int days, int tokens_per_day,
                                 int infected_per_day) {
  PayloadEstimate e;
  e.records_per_upload = static_cast<std::uint64_t>(days) * tokens_per_day;
  e.hash_bits_per_upload = e.records_per_upload * kTokenHashSize * 8;
  e.hash_bytes_per_upload = e.hash_bits_per_upload / 8;
  TokenUploadRecord sample;
  sample.ciphertext.resize(kMetadataCiphertextSize);
  e.wire_bytes_per_upload = e.records_per_upload * encoded_size(sample);
  e.daily_feed_hash_bytes =
      e.hash_bytes_per_upload * static_cast<std::uint64_t>(infected_per_day);
  e.daily_feed_wire_bytes =
      e.wire_bytes_per_upload * static_cast<std::uint64_t>(infected_per_day);
  e.daily_feed_hash_megabytes = static_cast<double>(e.daily_feed_hash_bytes) / 1e6;
  std::ostringstream note;
  note << e.hash_bits_per_upload << " bits = " << e.hash_bytes_per_upload
       << " B of hashes per upload; " << infected_per_day << " uploads/day -> "
       << e.daily_feed_hash_megabytes
       << " MB nominal. The quoted 43 MB/day multiplies a rounded 4.3 kB "
          "(4,480 B is 4.375 KiB) by 10,000; the exact decimal figure is 44.8 MB.";
  e.note = note.str();
  return e;
}

}  // namespace tc
