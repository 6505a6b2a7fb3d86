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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tracecorona/crypto.hpp"
#include "tracecorona/rng.hpp"

namespace tc {

using UserId = ByteArray<16>;

// Server-issued identifiers rotate every 15 minutes: 96 per day.
constexpr Seconds kCentralizedSlotSeconds = 900;
constexpr int kCentralizedSlotsPerDay = 96;

std::uint32_t centralized_slot(UnixSeconds t);

struct TempIdSighting {
  TempId tempid{};
  UnixSeconds time = 0;

  bool operator==(const TempIdSighting&) const = default;
};

struct CentralizedOptions {
  std::uint64_t seed = 0;
  // Registration by phone number with a master-key TempID derivation,
  // instead of the anonymous default.
  bool bluetrace = false;
};

struct Registration {
  std::string contact;  // phone number; empty when anonymous
  ByteArray<16> iv{};
  Bytes auth_tag;
};

class CentralizedServer {
 public:
  explicit CentralizedServer(CentralizedOptions options = {});

  UserId register_user(std::string_view contact = {});
  bool registered(const UserId& user) const { return registry_.contains(user); }

  // What the app of `user` beacons at time t.
  TempId tempid_for(const UserId& user, UnixSeconds t) const;
  std::vector<TempId> tempids_for_day(const UserId& user, std::int64_t day) const;

  // Users whose identifier for the slot of each sighting equals the
  // sighted TempID. Result is sorted and unique.
  std::vector<UserId> match(const std::vector<TempIdSighting>& upload) const;

  // Records an infected user's upload and returns the matched contacts.
  std::vector<UserId> ingest_upload(const UserId& uploader,
                                    const std::vector<TempIdSighting>& upload);

  // Every (uploader, contact) edge the server has learned.
  const std::set<std::pair<UserId, UserId>>& contact_graph() const { return edges_; }
  const std::vector<TempIdSighting>& received() const { return received_; }
  const std::map<UserId, Registration>& registry() const { return registry_; }

 private:
  const std::unordered_map<TempId, UserId, ByteArrayHash>& slot_index(
      std::uint32_t slot) const;

  CentralizedOptions options_;
  SeededRng rng_;
  ByteArray<32> master_key_{};
  std::map<UserId, Registration> registry_;
  std::vector<TempIdSighting> received_;
  std::set<std::pair<UserId, UserId>> edges_;
  mutable std::map<std::uint32_t, std::unordered_map<TempId, UserId, ByteArrayHash>>
      index_;
  mutable std::size_t indexed_users_ = 0;
};

struct DecentralizedDailyKey {
  Tek tek{};
  std::int64_t day = 0;

  bool operator==(const DecentralizedDailyKey&) const = default;
};

DecentralizedDailyKey make_daily_key(SeededRng& rng, std::int64_t day);

// Start of the 10-minute validity interval of a rolling identifier.
UnixSeconds decentralized_slot_start(std::int64_t day, int slot);
TempId decentralized_tempid_at(const DecentralizedDailyKey& key, UnixSeconds t);

struct DecentralizedMatchOptions {
  Seconds replay_window = 7200;
  // Accept any identifier observed on the same day as its key, whatever
  // its slot.
  bool kiss_bug = false;
};

struct DecentralizedMatch {
  TempId tempid{};
  UnixSeconds observed_at = 0;
  std::int64_t day = 0;
  int slot = 0;

  bool operator==(const DecentralizedMatch&) const = default;
};

// Client-side matching of published keys against locally observed
// identifiers. One result per matching observation, in observation order.
std::vector<DecentralizedMatch> decentralized_publish_and_match(
    const std::vector<DecentralizedDailyKey>& published,
    const std::vector<TempIdSighting>& observations,
    const DecentralizedMatchOptions& options = {});

}  // namespace tc
