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

#include "tracecorona/baselines.hpp"

#include <algorithm>

namespace tc {

std::uint32_t centralized_slot(UnixSeconds t) {
  if (t < 0) throw std::invalid_argument("negative time");
  return static_cast<std::uint32_t>(t / kCentralizedSlotSeconds);
}

CentralizedServer::CentralizedServer(CentralizedOptions options)
    : options_(options), rng_(SeededRng(options.seed).substream("centralized")) {
  master_key_ = rng_.bytes<32>();
}

UserId CentralizedServer::register_user(std::string_view contact) {
  UserId id;
  do {
    id = rng_.bytes<16>();
  } while (registry_.contains(id));
  Registration reg;
  if (options_.bluetrace) {
    reg.contact = std::string(contact);
    reg.iv = rng_.bytes<16>();
    const auto tag = rng_.bytes<16>();
    reg.auth_tag.assign(tag.begin(), tag.end());
  }
  registry_.emplace(id, std::move(reg));
  return id;
}

TempId CentralizedServer::tempid_for(const UserId& user, UnixSeconds t) const {
  const std::uint32_t slot = centralized_slot(t);
  if (!options_.bluetrace) return derive_tempid_centralized(user, slot);
  const Registration& reg = registry_.at(user);
  return derive_tempid_bluetrace(user, slot, reg.iv, reg.auth_tag, master_key_);
}

std::vector<TempId> CentralizedServer::tempids_for_day(const UserId& user,
                                                       std::int64_t day) const {
  std::vector<TempId> out;
  for (int k = 0; k < kCentralizedSlotsPerDay; ++k) {
    out.push_back(tempid_for(user, day * kSecondsPerDay + k * kCentralizedSlotSeconds));
  }
  return out;
}

const std::unordered_map<TempId, UserId, ByteArrayHash>& CentralizedServer::slot_index(
    std::uint32_t slot) const {
  if (indexed_users_ != registry_.size()) {
    index_.clear();
    indexed_users_ = registry_.size();
  }
  auto [it, fresh] = index_.try_emplace(slot);
  if (fresh) {
    const UnixSeconds t = static_cast<UnixSeconds>(slot) * kCentralizedSlotSeconds;
    for (const auto& [user, reg] : registry_) it->second.emplace(tempid_for(user, t), user);
  }
  return it->second;
}

std::vector<UserId> CentralizedServer::match(
    const std::vector<TempIdSighting>& upload) const {
  std::set<UserId> found;
  for (const auto& s : upload) {
    if (s.time < 0) continue;
    const auto& index = slot_index(centralized_slot(s.time));
    if (auto it = index.find(s.tempid); it != index.end()) found.insert(it->second);
  }
  return {found.begin(), found.end()};
}

std::vector<UserId> CentralizedServer::ingest_upload(
    const UserId& uploader, const std::vector<TempIdSighting>& upload) {
  received_.insert(received_.end(), upload.begin(), upload.end());
  auto contacts = match(upload);
  for (const auto& c : contacts) {
    if (c != uploader) edges_.emplace(uploader, c);
  }
  return contacts;
}

DecentralizedDailyKey make_daily_key(SeededRng& rng, std::int64_t day) {
  return DecentralizedDailyKey{rng.bytes<16>(), day};
}

UnixSeconds decentralized_slot_start(std::int64_t day, int slot) {
  return day * kSecondsPerDay + slot * kDecentralizedSlotSeconds;
}

TempId decentralized_tempid_at(const DecentralizedDailyKey& key, UnixSeconds t) {
  const std::int64_t day = t >= 0 ? t / kSecondsPerDay : -1;
  if (day != key.day) throw std::invalid_argument("time outside the key's day");
  const int slot = static_cast<int>((t - day * kSecondsPerDay) / kDecentralizedSlotSeconds);
  return derive_tempid_decentralized(key.tek, key.day, slot);
}

std::vector<DecentralizedMatch> decentralized_publish_and_match(
    const std::vector<DecentralizedDailyKey>& published,
    const std::vector<TempIdSighting>& observations,
    const DecentralizedMatchOptions& options) {
  struct Origin {
    std::int64_t day;
    int slot;
  };
  std::unordered_multimap<TempId, Origin, ByteArrayHash> derived;
  for (const auto& key : published) {
    const auto ids = derive_tempids_decentralized(key.tek, key.day);
    for (int slot = 0; slot < kDecentralizedSlotsPerDay; ++slot) {
      derived.emplace(ids[slot], Origin{key.day, slot});
    }
  }
  std::vector<DecentralizedMatch> out;
  for (const auto& obs : observations) {
    auto [lo, hi] = derived.equal_range(obs.tempid);
    for (auto it = lo; it != hi; ++it) {
      const auto [day, slot] = it->second;
      const UnixSeconds start = decentralized_slot_start(day, slot);
      const bool in_window = obs.time >= start - options.replay_window &&
                             obs.time < start + kDecentralizedSlotSeconds + options.replay_window;
      const bool same_day =
          options.kiss_bug && obs.time >= day * kSecondsPerDay &&
          obs.time < (day + 1) * kSecondsPerDay;
      if (in_window || same_day) {
        out.push_back(DecentralizedMatch{obs.tempid, obs.time, day, slot});
        break;
      }
    }
  }
  return out;
}

}  // namespace tc
