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

#include "tracecorona/client.hpp"

#include <algorithm>

namespace tc {

namespace {

Seconds positive_mod(Seconds a, Seconds m) {
  const Seconds r = a % m;
  return r < 0 ? r + m : r;
}

// Window starts s = phase + k * period with from <= s < to.
void collect_windows(std::vector<ProtocolAction>& out, ActionKind kind,
                     Seconds phase, Seconds period, Seconds on,
                     UnixSeconds from, UnixSeconds to) {
  if (to <= from) return;
  UnixSeconds s = from + positive_mod(phase - from, period);
  for (; s < to; s += period) {
    out.push_back(ProtocolAction{kind, s, s + on, 0});
  }
}

}  // namespace

Bytes BeaconMessage::encode() const {
  Bytes out(uuid.begin(), uuid.end());
  append(out, ephemeral_id);
  return out;
}

BeaconMessage BeaconMessage::decode(ByteView wire) {
  ByteReader r(wire);
  BeaconMessage m;
  m.uuid = r.read_array<16>();
  m.ephemeral_id = r.read_array<16>();
  if (!r.done()) throw std::invalid_argument("beacon has trailing bytes");
  return m;
}

bool TokenStore::insert(const EncounterToken& token) {
  return tokens_
      .emplace(Key{token.frame_index, token.peer_ephemeral_id}, token)
      .second;
}

EncounterToken* TokenStore::find(FrameIndex frame, const EphemeralId& peer) {
  auto it = tokens_.find(Key{frame, peer});
  return it == tokens_.end() ? nullptr : &it->second;
}

const EncounterToken* TokenStore::find(FrameIndex frame,
                                       const EphemeralId& peer) const {
  auto it = tokens_.find(Key{frame, peer});
  return it == tokens_.end() ? nullptr : &it->second;
}

std::size_t TokenStore::purge_expired(UnixSeconds now) {
  const Seconds horizon = static_cast<Seconds>(retention_days_) * kSecondsPerDay;
  return std::erase_if(tokens_, [&](const auto& kv) {
    return now - kv.second.start_time > horizon;
  });
}

bool ChannelPool::try_open(std::uint64_t peer, UnixSeconds until,
                           UnixSeconds now) {
  release_expired(now);
  auto it = open_.find(peer);
  if (it != open_.end()) {
    it->second = std::max(it->second, until);
    return true;
  }
  if (open_.size() >= capacity_) return false;
  open_.emplace(peer, until);
  peak_ = std::max(peak_, open_.size());
  return true;
}

std::size_t ChannelPool::open_count(UnixSeconds now) {
  release_expired(now);
  return open_.size();
}

void ChannelPool::release_expired(UnixSeconds now) {
  std::erase_if(open_, [&](const auto& kv) { return kv.second <= now; });
}

Device::Device(DeviceConfig config, SeededRng rng, UnixSeconds local_start)
    : config_(config),
      rng_(std::move(rng)),
      clock_(local_start),
      window_cursor_(local_start),
      store_(config.retention_days),
      channels_(config.max_channels) {
  config_.policy.validate();
  rotate(config_.policy.frame_of(local_start));
}

void Device::rotate(FrameIndex frame) {
  if (config_.deferred_derivation) {
    const FrameIndex old = keypair_.frame_index;
    const bool referenced = std::any_of(
        pending_.begin(), pending_.end(),
        [&](const auto& kv) { return kv.second.token.frame_index == old; });
    if (referenced) retained_keys_[old] = keypair_.private_key;
  }
  keypair_ = generate_frame_keypair(frame, rng_);
  ephemeral_id_ = rng_.bytes<16>();
}

void Device::sync(UnixSeconds now) {
  if (now < clock_) {
    throw std::invalid_argument("device clock must not go backwards");
  }
  clock_ = now;
  const FrameIndex frame = config_.policy.frame_of(now);
  if (frame != keypair_.frame_index) rotate(frame);
  // Observations from before the gap can no longer continue.
  std::erase_if(observations_, [&](const auto& kv) {
    return now - kv.second.last_seen >
           std::max(config_.continuity_gap, config_.policy.frame_period);
  });
}

std::vector<ProtocolAction> Device::advance_clock(UnixSeconds now) {
  const FrameIndex before = keypair_.frame_index;
  sync(now);
  std::vector<ProtocolAction> actions;
  collect_windows(actions, ActionKind::advertise_window, config_.advertise_phase,
                  config_.advertise_period, config_.advertise_on,
                  window_cursor_, now);
  collect_windows(actions, ActionKind::scan_window, config_.scan_phase,
                  config_.scan_period, config_.scan_on, window_cursor_, now);
  if (keypair_.frame_index != before) {
    actions.push_back(ProtocolAction{
        ActionKind::frame_rotated, config_.policy.frame_start(keypair_.frame_index),
        config_.policy.frame_end(keypair_.frame_index), keypair_.frame_index});
  }
  std::stable_sort(actions.begin(), actions.end(),
                   [](const ProtocolAction& a, const ProtocolAction& b) {
                     return a.start < b.start;
                   });
  window_cursor_ = now;
  return actions;
}

bool Device::advertising(UnixSeconds now) const {
  return positive_mod(now - config_.advertise_phase, config_.advertise_period) <
         config_.advertise_on;
}

bool Device::scanning(UnixSeconds now) const {
  return positive_mod(now - config_.scan_phase, config_.scan_period) <
         config_.scan_on;
}

BeaconMessage Device::beacon() const {
  BeaconMessage m;
  m.ephemeral_id = ephemeral_id_;
  return m;
}

EncounterToken* Device::live_token(FrameIndex frame, const EphemeralId& peer) {
  if (EncounterToken* t = store_.find(frame, peer)) return t;
  auto it = pending_.find(TokenStore::Key{frame, peer});
  return it == pending_.end() ? nullptr : &it->second.token;
}

void Device::extend(EncounterToken& token, const NeighborObservation& obs) const {
  if (obs.first_seen > token.first_seen) return;  // continuity was broken
  const UnixSeconds until =
      std::min(obs.last_seen, config_.policy.frame_end(token.frame_index));
  token.duration = std::max(token.duration, until - token.first_seen);
  if (!obs.rssi_samples.empty()) {
    token.max_signal_strength =
        std::max(token.max_signal_strength, obs.rssi_samples.back().rssi);
  }
}

std::optional<HandshakeRequest> Device::on_beacon(const BeaconMessage& beacon,
                                                  Dbm rssi, UnixSeconds now) {
  sync(now);
  if (beacon.uuid != kAppUuid) return std::nullopt;

  auto [it, fresh] = observations_.try_emplace(beacon.ephemeral_id);
  NeighborObservation& obs = it->second;
  if (fresh || now - obs.last_seen > config_.continuity_gap) {
    obs.ephemeral_id = beacon.ephemeral_id;
    obs.first_seen = now;
    obs.rssi_samples.clear();
  }
  obs.last_seen = now;
  obs.rssi_samples.push_back(RssiSample{now, rssi});

  const FrameIndex frame = keypair_.frame_index;
  if (EncounterToken* token = live_token(frame, beacon.ephemeral_id)) {
    extend(*token, obs);
    return std::nullopt;
  }
  if (now - obs.first_seen < config_.policy.min_encounter_duration) {
    return std::nullopt;
  }
  return HandshakeRequest{beacon.ephemeral_id, frame,
                          ephemeral_id_ < beacon.ephemeral_id};
}

std::optional<EncounterToken> Device::complete_handshake(
    const EphemeralId& peer, const PublicKey& peer_public, FrameIndex peer_frame,
    UnixSeconds now, std::uint64_t peer_hint) {
  sync(now);
  const FrameIndex frame = keypair_.frame_index;
  if (peer_frame != frame) {
    throw FrameMismatch("peer frame differs from own frame");
  }
  if (const EncounterToken* existing = store_.find(frame, peer)) {
    return *existing;
  }
  if (pending_.contains(TokenStore::Key{frame, peer})) return std::nullopt;

  auto [it, fresh] = observations_.try_emplace(peer);
  NeighborObservation& obs = it->second;
  if (fresh) {
    obs.ephemeral_id = peer;
    obs.first_seen = now;
    obs.last_seen = now;
  }

  EncounterToken token;
  token.start_time = now;
  token.first_seen = obs.first_seen;
  token.duration = now - obs.first_seen;
  token.frame_index = frame;
  token.peer_ephemeral_id = peer;
  token.peer_hint = peer_hint;
  for (const RssiSample& s : obs.rssi_samples) {
    token.max_signal_strength = std::max(token.max_signal_strength, s.rssi);
  }

  if (config_.deferred_derivation) {
    validate_public_key(peer_public);
    pending_.emplace(TokenStore::Key{frame, peer}, Pending{token, peer_public});
    return std::nullopt;
  }
  token.secret = derive_token(keypair_.private_key, peer_public);
  store_.insert(token);
  return token;
}

std::size_t Device::charge() {
  std::size_t produced = 0;
  for (auto& [key, pending] : pending_) {
    const FrameIndex frame = pending.token.frame_index;
    const PrivateKey& d = frame == keypair_.frame_index
                              ? keypair_.private_key
                              : retained_keys_.at(frame);
    pending.token.secret = derive_token(d, pending.peer_public);
    if (store_.insert(pending.token)) ++produced;
  }
  pending_.clear();
  retained_keys_.clear();
  return produced;
}

std::size_t Device::purge_expired(UnixSeconds now) {
  const Seconds horizon =
      static_cast<Seconds>(config_.retention_days) * kSecondsPerDay;
  std::erase_if(pending_, [&](const auto& kv) {
    return now - kv.second.token.start_time > horizon;
  });
  return store_.purge_expired(now);
}

void Device::enqueue_handshake(const HandshakeRequest& request) {
  const bool queued = std::any_of(queue_.begin(), queue_.end(), [&](const auto& q) {
    return q.peer == request.peer && q.frame == request.frame;
  });
  if (!queued) queue_.push_back(request);
}

std::vector<HandshakeRequest> Device::ready_handshakes(UnixSeconds now) {
  sync(now);
  std::vector<HandshakeRequest> ready;
  while (!queue_.empty()) {
    const HandshakeRequest req = queue_.front();
    if (req.frame != keypair_.frame_index || live_token(req.frame, req.peer)) {
      queue_.pop_front();
      continue;
    }
    if (!channels_.try_open(channel_key(req.peer), now + config_.handshake_hold,
                            now)) {
      break;
    }
    queue_.pop_front();
    ready.push_back(req);
  }
  return ready;
}

bool Device::accept_channel(std::uint64_t peer, UnixSeconds now) {
  return channels_.try_open(peer, now + config_.handshake_hold, now);
}

}  // namespace tc
