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

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tracecorona/crypto.hpp"

// Client device state machine: duty-cycled advertising and scanning,
// neighbour dwell tracking, encounter-token establishment, and the local
// token store.
namespace tc {

using EphemeralId = ByteArray<16>;
using AppUuid = ByteArray<16>;

// Fixed identifier of the app in every advertising message.
inline constexpr AppUuid kAppUuid = {0x7c, 0x0a, 0x1d, 0x3e, 0x52, 0x9b, 0x4f, 0x21,
                                     0x8e, 0x6d, 0xc4, 0x05, 0xb7, 0x33, 0x90, 0xfa};

class FrameMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Advertising message: UUID || EI, 256 bits on the air. The pubkey-offer
// flag is device-local and not part of the advertised bytes.
struct BeaconMessage {
  static constexpr std::size_t kWireSize = 32;

  AppUuid uuid = kAppUuid;
  EphemeralId ephemeral_id{};
  bool carries_pubkey_offer = true;

  Bytes encode() const;
  static BeaconMessage decode(ByteView wire);
  bool operator==(const BeaconMessage&) const = default;
};

struct RssiSample {
  UnixSeconds time = 0;
  Dbm rssi = 0;
};

struct NeighborObservation {
  EphemeralId ephemeral_id{};
  UnixSeconds first_seen = 0;
  UnixSeconds last_seen = 0;
  std::vector<RssiSample> rssi_samples;
};

struct EncounterToken {
  TokenSecret secret{};
  // Local clock when public keys were exchanged; this is the value that
  // is encrypted on upload and compared within epsilon.
  UnixSeconds start_time = 0;
  Seconds duration = 0;
  Dbm max_signal_strength = -127;
  FrameIndex frame_index = 0;
  UnixSeconds first_seen = 0;
  EphemeralId peer_ephemeral_id{};
  // Opaque handle assigned by whoever drives the radio. Never uploaded.
  std::uint64_t peer_hint = 0;

  bool operator==(const EncounterToken&) const = default;
};

// Tokens keyed by (frame, peer EI); at most one per key.
class TokenStore {
 public:
  using Key = std::pair<FrameIndex, EphemeralId>;
  using Map = std::map<Key, EncounterToken>;

  explicit TokenStore(int retention_days = 14) : retention_days_(retention_days) {}

  // Returns false, leaving the store unchanged, if the key is taken.
  bool insert(const EncounterToken& token);
  EncounterToken* find(FrameIndex frame, const EphemeralId& peer);
  const EncounterToken* find(FrameIndex frame, const EphemeralId& peer) const;
  bool contains(FrameIndex frame, const EphemeralId& peer) const {
    return find(frame, peer) != nullptr;
  }

  // Removes tokens with now - start_time > retention.
  std::size_t purge_expired(UnixSeconds now);

  int retention_days() const { return retention_days_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  Map::const_iterator begin() const { return tokens_.begin(); }
  Map::const_iterator end() const { return tokens_.end(); }

 private:
  int retention_days_;
  Map tokens_;
};

// Bounded set of concurrently open BLE connections.
class ChannelPool {
 public:
  explicit ChannelPool(std::size_t capacity) : capacity_(capacity) {}

  // Opens (or extends) a channel to `peer` until `until`. Fails when all
  // slots are busy with other peers.
  bool try_open(std::uint64_t peer, UnixSeconds until, UnixSeconds now);
  std::size_t open_count(UnixSeconds now);
  std::size_t capacity() const { return capacity_; }
  std::size_t peak() const { return peak_; }

 private:
  void release_expired(UnixSeconds now);

  std::size_t capacity_;
  std::map<std::uint64_t, UnixSeconds> open_;
  std::size_t peak_ = 0;
};

struct DeviceConfig {
  TimeFramePolicy policy;
  int retention_days = 14;
  // Observation continuity breaks after this long without a beacon.
  Seconds continuity_gap = 120;
  std::size_t max_channels = 8;
  Seconds handshake_hold = 2;

  Seconds advertise_period = 60;
  Seconds advertise_on = 40;
  Seconds scan_period = 50;
  Seconds scan_on = 30;
  Seconds advertise_phase = 0;
  Seconds scan_phase = 0;

  // Defer ECDH to charge() instead of deriving at handshake time.
  bool deferred_derivation = false;
};

enum class ActionKind { advertise_window, scan_window, frame_rotated };

struct ProtocolAction {
  ActionKind kind;
  UnixSeconds start = 0;
  UnixSeconds end = 0;
  FrameIndex frame = 0;
};

struct HandshakeRequest {
  EphemeralId peer{};
  FrameIndex frame = 0;
  // Lexicographically smaller EI initiates the connection.
  bool initiator = false;
};

inline std::uint64_t channel_key(const EphemeralId& ei) {
  return get_be(ei, 8);
}

class Device {
 public:
  Device(DeviceConfig config, SeededRng rng, UnixSeconds local_start);

  // Rotates EI and keypair at frame boundaries and reports every window
  // that opened in [previous call, now).
  std::vector<ProtocolAction> advance_clock(UnixSeconds now);

  bool advertising(UnixSeconds now) const;
  bool scanning(UnixSeconds now) const;

  // All accessors refer to the frame at the last clock update.
  BeaconMessage beacon() const;
  const EphemeralId& ephemeral_id() const { return ephemeral_id_; }
  FrameIndex frame() const { return keypair_.frame_index; }
  const PublicKey& public_key() const { return keypair_.public_key; }

  // Records a sighting; asks for a handshake once the peer has been seen
  // continuously for the minimum encounter duration and no token exists
  // for (peer, frame).
  std::optional<HandshakeRequest> on_beacon(const BeaconMessage& beacon,
                                            Dbm rssi, UnixSeconds now);

  // Establishes (or returns the existing) token with the peer. In deferred
  // mode the derivation waits for charge() and nullopt is returned.
  std::optional<EncounterToken> complete_handshake(const EphemeralId& peer,
                                                   const PublicKey& peer_public,
                                                   FrameIndex peer_frame,
                                                   UnixSeconds now,
                                                   std::uint64_t peer_hint = 0);

  // Runs deferred derivations; returns how many tokens were produced.
  std::size_t charge();
  std::size_t pending_derivations() const { return pending_.size(); }

  std::size_t purge_expired(UnixSeconds now);

  // Handshake queue with the fan-out cap applied. Channels are keyed by
  // channel_key(peer EI).
  void enqueue_handshake(const HandshakeRequest& request);
  std::vector<HandshakeRequest> ready_handshakes(UnixSeconds now);
  bool accept_channel(std::uint64_t peer, UnixSeconds now);
  std::size_t queued_handshakes() const { return queue_.size(); }

  const TokenStore& store() const { return store_; }
  TokenStore& store() { return store_; }
  const std::map<EphemeralId, NeighborObservation>& observations() const {
    return observations_;
  }
  ChannelPool& channels() { return channels_; }
  const DeviceConfig& config() const { return config_; }

 private:
  struct Pending {
    EncounterToken token;
    PublicKey peer_public{};
  };

  void sync(UnixSeconds now);
  void rotate(FrameIndex frame);
  EncounterToken* live_token(FrameIndex frame, const EphemeralId& peer);
  void extend(EncounterToken& token, const NeighborObservation& obs) const;

  DeviceConfig config_;
  SeededRng rng_;
  FrameKeyPair keypair_;
  EphemeralId ephemeral_id_{};
  UnixSeconds clock_ = 0;
  UnixSeconds window_cursor_ = 0;
  std::map<EphemeralId, NeighborObservation> observations_;
  TokenStore store_;
  std::map<TokenStore::Key, Pending> pending_;
  std::map<FrameIndex, PrivateKey> retained_keys_;
  std::deque<HandshakeRequest> queue_;
  ChannelPool channels_;
};

}  // namespace tc
