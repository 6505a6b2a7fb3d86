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

#include "tracecorona/simnet.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>

#include "tracecorona/exposure.hpp"
#include "tracecorona/health_authority.hpp"
#include "tracecorona/tracing_server.hpp"

namespace tc {
namespace {

constexpr std::size_t kHonest = std::numeric_limits<std::size_t>::max();
constexpr UnixSeconds kNever = std::numeric_limits<UnixSeconds>::max();
// Feed rounds run ten minutes before each cadence boundary (23:50 daily).
constexpr Seconds kRoundLead = 600;
constexpr int kUploadDays = 14;

TracingServerOptions server_options(const ScenarioConfig& config) {
  TracingServerOptions o;
  o.superspreader_threshold = config.superspreader_threshold;
  return o;
}

bool in_window(UnixSeconds t, Seconds phase, Seconds period, Seconds on) {
  Seconds r = (t - phase) % period;
  if (r < 0) r += period;
  return r < on;
}

struct Interval {
  UnixSeconds start = 0;
  UnixSeconds end = 0;
};

struct Node {
  std::string id;
  Seconds offset = 0;
  Seconds advertise_phase = 0;
  Seconds scan_phase = 0;
  std::unique_ptr<Device> device;
  UserId user{};

  // Baseline radio state: identifier -> first local sighting.
  std::map<TempId, UnixSeconds> sightings;
  std::int64_t cached_slot = std::numeric_limits<std::int64_t>::min();
  TempId cached_id{};

  std::set<TokenHash> own_uploads;
  std::set<std::tuple<TokenHash, NotificationLevel, bool>> seen;
  std::set<std::size_t> notified_keys;
  std::set<std::size_t> notified_origins;
  std::vector<ExposureNotification> direct_matches;

  std::optional<int> infected_day;
  bool uploaded = false;
  bool second_level_sent = false;
  bool superspreader_sent = false;
  bool reported_active = false;

  UnixSeconds local(UnixSeconds t) const { return t + offset; }
};

enum class EventKind { feed_round, result_upload, colocation_end, relay_delivery, tunnel };

struct Event {
  UnixSeconds time = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::feed_round;
  std::size_t index = 0;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    return std::tie(a.time, a.seq) > std::tie(b.time, b.seq);
  }
};

struct Delivery {
  std::size_t receiver = 0;
  ByteArray<16> identifier{};
  Dbm rssi = 0;
  std::size_t adversary = 0;
};

// Far side of a tunnelled handshake, completing after the relay latency.
struct TunnelCompletion {
  std::size_t device = 0;
  EphemeralId peer{};
  PublicKey peer_public{};
  FrameIndex peer_frame = 0;
  std::size_t adversary = 0;
};

struct AdversaryState {
  AdversarySpec spec;
  std::string name;
  std::set<std::size_t> capture;
  std::set<std::size_t> inject;
  std::set<std::size_t> reached;
  std::set<std::size_t> fooled;
  std::uint64_t claim_attempts = 0;
  std::uint64_t claim_successes = 0;
  std::uint64_t tokens = 0;
  std::map<std::pair<std::size_t, FrameIndex>, std::set<std::size_t>> victims;
  bool claimed = false;

  bool relay() const {
    return spec.kind == AdversaryKind::relay_oneway || spec.kind == AdversaryKind::relay_twoway;
  }
};

struct PublishedKey {
  DecentralizedDailyKey key;
  std::size_t owner = 0;
};

struct PendingCentral {
  std::size_t device = 0;
  std::size_t origin = 0;
  std::size_t adversary = kHonest;
};

class Simulation {
 public:
  Simulation(const ScenarioConfig& config, SimulationTrace& trace);
  ScenarioReport run();

 private:
  Seconds rel(UnixSeconds t) const { return t - origin_; }
  int day_of(UnixSeconds t) const { return static_cast<int>(rel(t) / kSecondsPerDay); }
  bool tracecorona() const { return config_.scheme == Scheme::tracecorona; }

  void push(UnixSeconds time, EventKind kind, std::size_t index);
  void handle(const Event& e);
  void tick(UnixSeconds t);

  bool advertising(std::size_t i, UnixSeconds t) const;
  bool scanning(std::size_t i, UnixSeconds t) const;
  ByteArray<16> identifier(std::size_t i, UnixSeconds t);
  DecentralizedDailyKey tek_for(std::size_t i, std::int64_t unix_day) const;
  void deliver(std::size_t receiver, const ByteArray<16>& id, Dbm rssi, std::size_t adversary,
               UnixSeconds t);
  bool linked(std::size_t a, std::size_t b) const;
  void process_handshakes(std::size_t i, UnixSeconds t);
  void establish(std::size_t self, const EphemeralId& peer, const PublicKey& peer_public,
                 FrameIndex peer_frame, UnixSeconds t, std::size_t adversary);

  void infect(std::size_t i, int day);
  void result_upload(std::size_t i, UnixSeconds t);
  void feed_round(UnixSeconds t);
  std::vector<std::size_t> tracecorona_matching(UnixSeconds t);
  bool hybrid_uploads(const std::vector<std::size_t>& warned, UnixSeconds t);
  void decentralized_round(UnixSeconds t);
  void centralized_round(UnixSeconds t);
  void fake_claims(UnixSeconds t);
  void notify(std::size_t device, UnixSeconds t, const ExposureNotification& n,
              std::size_t origin, std::size_t adversary);

  void log_wire(const std::string& kind, bool uplink, std::size_t bytes);
  ScenarioReport build_report();

  const ScenarioConfig& config_;
  SimulationTrace& trace_;
  UnixSeconds origin_;
  UnixSeconds end_;

  SeededRng root_;
  SeededRng channel_rng_;
  SeededRng shuffle_rng_;
  SeededRng adversary_rng_;
  SeededRng disease_rng_;

  HealthAuthority ha_;
  TracingServer server_;
  CentralizedServer central_;

  std::vector<Node> nodes_;
  std::vector<AdversaryState> adversaries_;
  std::vector<Interval> active_;

  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::uint64_t seq_ = 0;
  std::vector<Delivery> deliveries_;
  std::vector<TunnelCompletion> tunnels_;

  // Radio state of the current tick.
  std::vector<std::tuple<std::size_t, std::size_t, Dbm>> links_;

  // Ground truth. Scheme code never sees any of this.
  std::map<EphemeralId, std::size_t> ei_owner_;
  std::map<std::tuple<std::size_t, FrameIndex, EphemeralId>, std::size_t> token_truth_;
  std::map<std::pair<std::size_t, TempId>, std::size_t> sighting_truth_;
  // Keyed by (hash, tag): the same hash can be published at several levels.
  std::map<std::pair<TokenHash, RecordTag>, std::size_t> record_origin_;

  std::int64_t feed_cursor_ = 0;
  int round_ = 0;
  std::vector<PublishedKey> published_;
  std::size_t published_cursor_ = 0;
  std::vector<PendingCentral> pending_central_;
  ServerStats baseline_stats_;

  std::vector<NotificationRecord> notifications_;
  std::uint64_t tokens_established_ = 0;
};

Simulation::Simulation(const ScenarioConfig& config, SimulationTrace& trace)
    : config_(config),
      trace_(trace),
      origin_(config.origin()),
      end_(config.origin() + config.duration_seconds()),
      root_(config.seed),
      channel_rng_(root_.substream("channel")),
      shuffle_rng_(root_.substream("shuffle")),
      adversary_rng_(root_.substream("adversary")),
      disease_rng_(root_.substream("disease")),
      ha_(HealthAuthorityOptions{.seed = root_.substream("ha")(), .tan_expiry = std::nullopt}),
      server_(ha_, server_options(config)),
      central_(CentralizedOptions{.seed = root_.substream("central")(),
                                  .bluetrace = config.bluetrace}) {
  DeviceConfig base;
  base.policy = TimeFramePolicy{config.frame_period, config.min_encounter_duration,
                                config.epsilon};
  base.continuity_gap = config.continuity_gap;
  base.deferred_derivation = config.deferred_derivation;

  for (const auto& spec : config.devices) {
    Node n;
    n.id = spec.id;
    n.offset = spec.clock_offset_s;
    SeededRng phase = root_.substream("phase/" + spec.id);
    n.advertise_phase = static_cast<Seconds>(phase.uniform(base.advertise_period));
    n.scan_phase = static_cast<Seconds>(phase.uniform(base.scan_period));
    if (tracecorona()) {
      DeviceConfig dc = base;
      dc.advertise_phase = n.advertise_phase;
      dc.scan_phase = n.scan_phase;
      n.device = std::make_unique<Device>(dc, root_.substream("device/" + spec.id),
                                          n.local(origin_));
    } else if (config.scheme == Scheme::centralized) {
      n.user = central_.register_user(spec.id);
    }
    nodes_.push_back(std::move(n));
  }

  for (std::size_t k = 0; k < config.adversaries.size(); ++k) {
    AdversaryState a;
    a.spec = config.adversaries[k];
    a.name = a.spec.name.empty()
                 ? std::string(to_string(a.spec.kind)) + "-" + std::to_string(k)
                 : a.spec.name;
    for (const auto& id : a.spec.capture) a.capture.insert(*config.device_index(id));
    for (const auto& id : a.spec.inject) a.inject.insert(*config.device_index(id));
    adversaries_.push_back(std::move(a));
  }

  std::vector<Interval> spans;
  for (const auto& c : config.colocations) {
    spans.push_back({origin_ + c.start, origin_ + c.end});
  }
  for (const auto& a : adversaries_) {
    const auto& s = a.spec;
    if (a.relay()) {
      spans.push_back({origin_ + s.start, origin_ + s.end});
      spans.push_back({origin_ + s.start + s.latency_s, origin_ + s.end + s.latency_s + 1});
    } else if (s.kind == AdversaryKind::tek_replay) {
      spans.push_back({origin_ + s.start, origin_ + s.end});
    }
    for (const auto& sensor : s.sensors) {
      spans.push_back({origin_ + sensor.start, origin_ + sensor.end});
    }
  }
  std::sort(spans.begin(), spans.end(),
            [](const Interval& a, const Interval& b) { return a.start < b.start; });
  for (const auto& s : spans) {
    if (!active_.empty() && s.start <= active_.back().end) {
      active_.back().end = std::max(active_.back().end, s.end);
    } else {
      active_.push_back(s);
    }
  }

  for (UnixSeconds t = origin_ + config.feed_cadence - kRoundLead; t < end_;
       t += config.feed_cadence) {
    push(t, EventKind::feed_round, 0);
  }
  if (config.disease.transmission) {
    for (std::size_t k = 0; k < config.colocations.size(); ++k) {
      push(origin_ + config.colocations[k].end, EventKind::colocation_end, k);
    }
  }
  for (const auto& inf : config.infections) infect(*config.device_index(inf.device), inf.day);
}

void Simulation::push(UnixSeconds time, EventKind kind, std::size_t index) {
  events_.push(Event{time, seq_++, kind, index});
}

ScenarioReport Simulation::run() {
  std::size_t iv = 0;
  UnixSeconds cursor = origin_;
  while (true) {
    while (iv < active_.size() && active_[iv].end <= cursor) ++iv;
    const UnixSeconds next_tick =
        iv < active_.size() ? std::max(cursor, active_[iv].start) : kNever;
    const UnixSeconds next_event = events_.empty() ? kNever : events_.top().time;
    if (std::min(next_tick, next_event) >= end_) break;
    if (next_tick <= next_event) {
      tick(next_tick);
      cursor = next_tick + 1;
    } else {
      const Event e = events_.top();
      events_.pop();
      handle(e);
    }
  }
  return build_report();
}

void Simulation::handle(const Event& e) {
  switch (e.kind) {
    case EventKind::feed_round:
      feed_round(e.time);
      break;
    case EventKind::result_upload:
      result_upload(e.index, e.time);
      break;
    case EventKind::colocation_end: {
      const auto& c = config_.colocations[e.index];
      const int day = day_of(origin_ + c.start);
      const std::size_t a = *config_.device_index(c.device_a);
      const std::size_t b = *config_.device_index(c.device_b);
      const auto contagious = [&](std::size_t i) {
        return nodes_[i].infected_day &&
               *nodes_[i].infected_day + config_.disease.incubation_to_contagious_days <= day;
      };
      for (auto [src, dst] : {std::pair{a, b}, std::pair{b, a}}) {
        if (!contagious(src) || nodes_[dst].infected_day) continue;
        if (disease_rng_.bernoulli(config_.disease.transmission_probability)) infect(dst, day);
      }
      break;
    }
    case EventKind::relay_delivery: {
      const Delivery& d = deliveries_[e.index];
      deliver(d.receiver, d.identifier, d.rssi, d.adversary, e.time);
      break;
    }
    case EventKind::tunnel: {
      const TunnelCompletion& c = tunnels_[e.index];
      establish(c.device, c.peer, c.peer_public, c.peer_frame, e.time, c.adversary);
      break;
    }
  }
}

bool Simulation::advertising(std::size_t i, UnixSeconds t) const {
  const Node& n = nodes_[i];
  if (n.device) return n.device->advertising(n.local(t));
  return in_window(n.local(t), n.advertise_phase, 60, 40);
}

bool Simulation::scanning(std::size_t i, UnixSeconds t) const {
  const Node& n = nodes_[i];
  if (n.device) return n.device->scanning(n.local(t));
  return in_window(n.local(t), n.scan_phase, 50, 30);
}

DecentralizedDailyKey Simulation::tek_for(std::size_t i, std::int64_t unix_day) const {
  SeededRng rng = root_.substream("tek/" + nodes_[i].id + "/" + std::to_string(unix_day));
  return make_daily_key(rng, unix_day);
}

ByteArray<16> Simulation::identifier(std::size_t i, UnixSeconds t) {
  Node& n = nodes_[i];
  const UnixSeconds local = n.local(t);
  if (n.device) return n.device->ephemeral_id();
  if (config_.scheme == Scheme::decentralized) {
    const std::int64_t slot = local / kDecentralizedSlotSeconds;
    if (slot != n.cached_slot) {
      n.cached_slot = slot;
      n.cached_id = decentralized_tempid_at(tek_for(i, local / kSecondsPerDay), local);
    }
  } else {
    const std::int64_t slot = local / kCentralizedSlotSeconds;
    if (slot != n.cached_slot) {
      n.cached_slot = slot;
      n.cached_id = central_.tempid_for(n.user, local);
    }
  }
  return n.cached_id;
}

void Simulation::deliver(std::size_t r, const ByteArray<16>& id, Dbm rssi,
                         std::size_t adversary, UnixSeconds t) {
  if (!scanning(r, t)) return;
  if (channel_rng_.bernoulli(config_.channel_loss)) return;
  if (adversary != kHonest && adversaries_[adversary].inject.contains(r)) {
    adversaries_[adversary].reached.insert(r);
  }
  Node& n = nodes_[r];
  const UnixSeconds local = n.local(t);
  if (n.device) {
    BeaconMessage beacon;
    beacon.ephemeral_id = id;
    if (auto req = n.device->on_beacon(beacon, rssi, local); req && req->initiator) {
      n.device->enqueue_handshake(*req);
    }
    return;
  }
  n.sightings.try_emplace(id, local);
  auto [it, fresh] = sighting_truth_.try_emplace({r, id}, adversary);
  if (!fresh && adversary == kHonest) it->second = kHonest;
}

bool Simulation::linked(std::size_t a, std::size_t b) const {
  return std::any_of(links_.begin(), links_.end(), [&](const auto& l) {
    const auto [x, y, rssi] = l;
    return (x == a && y == b) || (x == b && y == a);
  });
}

void Simulation::tick(UnixSeconds t) {
  const Seconds now = rel(t);
  links_.clear();
  std::set<std::size_t> present;
  for (const auto& c : config_.colocations) {
    if (c.start <= now && now < c.end) {
      const std::size_t a = *config_.device_index(c.device_a);
      const std::size_t b = *config_.device_index(c.device_b);
      links_.emplace_back(a, b, c.rssi_at(now - c.start));
      present.insert(a);
      present.insert(b);
    }
  }
  for (const auto& a : adversaries_) {
    const auto& s = a.spec;
    if ((a.relay() || s.kind == AdversaryKind::tek_replay) && s.start <= now &&
        now < s.end + s.latency_s + 1) {
      present.insert(a.capture.begin(), a.capture.end());
      present.insert(a.inject.begin(), a.inject.end());
    }
    for (const auto& sensor : s.sensors) {
      if (sensor.start <= now && now < sensor.end) {
        present.insert(*config_.device_index(sensor.device));
      }
    }
  }

  if (tracecorona()) {
    for (std::size_t i : present) {
      nodes_[i].device->advance_clock(nodes_[i].local(t));
      ei_owner_[nodes_[i].device->ephemeral_id()] = i;
    }
  }

  for (std::size_t s : present) {
    if (!advertising(s, t)) continue;
    const ByteArray<16> id = identifier(s, t);
    for (const auto& [a, b, rssi] : links_) {
      if (a == s) deliver(b, id, rssi, kHonest, t);
      if (b == s) deliver(a, id, rssi, kHonest, t);
    }
    for (std::size_t k = 0; k < adversaries_.size(); ++k) {
      AdversaryState& adv = adversaries_[k];
      const auto& spec = adv.spec;
      for (const auto& sensor : spec.sensors) {
        if (sensor.start <= now && now < sensor.end &&
            *config_.device_index(sensor.device) == s &&
            !channel_rng_.bernoulli(config_.channel_loss)) {
          trace_.sensor_log.push_back(SensorObservation{t, id, s});
        }
      }
      if (!adv.relay() || now < spec.start || now >= spec.end) continue;
      const auto relay_to = [&](const std::set<std::size_t>& targets) {
        for (std::size_t r : targets) {
          deliveries_.push_back(Delivery{r, id, spec.rssi, k});
          push(t + spec.latency_s, EventKind::relay_delivery, deliveries_.size() - 1);
        }
      };
      if (adv.capture.contains(s)) relay_to(adv.inject);
      if (spec.kind == AdversaryKind::relay_twoway && adv.inject.contains(s)) {
        relay_to(adv.capture);
      }
    }
  }

  if (config_.scheme == Scheme::decentralized) {
    for (std::size_t k = 0; k < adversaries_.size(); ++k) {
      const auto& spec = adversaries_[k].spec;
      if (spec.kind != AdversaryKind::tek_replay || now < spec.start || now >= spec.end) {
        continue;
      }
      // Replays an identifier of a key published for today, whatever its slot.
      const std::int64_t today = t / kSecondsPerDay;
      for (const auto& p : published_) {
        if (p.key.day != today) continue;
        const TempId id = decentralized_tempid_at(
            p.key, today * kSecondsPerDay + spec.replay_time_of_day);
        for (std::size_t r : adversaries_[k].inject) deliver(r, id, spec.rssi, k, t);
        break;
      }
    }
  }

  if (tracecorona()) {
    for (std::size_t i : present) process_handshakes(i, t);
  }
}

void Simulation::process_handshakes(std::size_t i, UnixSeconds t) {
  Device& d = *nodes_[i].device;
  for (const HandshakeRequest& req : d.ready_handshakes(nodes_[i].local(t))) {
    const auto owner = ei_owner_.find(req.peer);
    if (owner == ei_owner_.end()) continue;
    const std::size_t j = owner->second;
    Device& pd = *nodes_[j].device;
    pd.advance_clock(nodes_[j].local(t));
    if (pd.ephemeral_id() != req.peer) continue;

    std::size_t via = kHonest;
    if (!linked(i, j)) {
      const Seconds now = rel(t);
      for (std::size_t k = 0; k < adversaries_.size() && via == kHonest; ++k) {
        const auto& adv = adversaries_[k];
        if (adv.spec.kind != AdversaryKind::relay_twoway || now < adv.spec.start ||
            now >= adv.spec.end) {
          continue;
        }
        if ((adv.capture.contains(i) && adv.inject.contains(j)) ||
            (adv.inject.contains(i) && adv.capture.contains(j))) {
          via = k;
        }
      }
      // Nobody carries the connection: the attempt times out.
      if (via == kHonest) continue;
    }
    if (pd.frame() != d.frame()) continue;
    if (!pd.accept_channel(channel_key(d.ephemeral_id()), nodes_[j].local(t))) {
      d.enqueue_handshake(req);
      continue;
    }
    if (via == kHonest) {
      establish(i, pd.ephemeral_id(), pd.public_key(), pd.frame(), t, kHonest);
      establish(j, d.ephemeral_id(), d.public_key(), d.frame(), t, kHonest);
      continue;
    }
    AdversaryState& adv = adversaries_[via];
    const std::size_t victim = adv.capture.contains(i) ? i : j;
    const std::size_t remote = victim == i ? j : i;
    auto& slots = adv.victims[{victim, nodes_[victim].device->frame()}];
    if (!slots.contains(remote) && slots.size() >= adv.spec.fanout_limit) continue;
    slots.insert(remote);
    establish(i, pd.ephemeral_id(), pd.public_key(), pd.frame(), t, via);
    tunnels_.push_back(
        TunnelCompletion{j, d.ephemeral_id(), d.public_key(), d.frame(), via});
    push(t + adv.spec.latency_s, EventKind::tunnel, tunnels_.size() - 1);
  }
}

void Simulation::establish(std::size_t self, const EphemeralId& peer,
                           const PublicKey& peer_public, FrameIndex peer_frame,
                           UnixSeconds t, std::size_t adversary) {
  Device& d = *nodes_[self].device;
  try {
    d.complete_handshake(peer, peer_public, peer_frame, nodes_[self].local(t));
  } catch (const FrameMismatch&) {
    return;
  }
  if (token_truth_.try_emplace({self, d.frame(), peer}, adversary).second) {
    ++tokens_established_;
    if (adversary != kHonest) ++adversaries_[adversary].tokens;
  }
}

void Simulation::infect(std::size_t i, int day) {
  Node& n = nodes_[i];
  if (n.infected_day) return;
  n.infected_day = day;
  const auto& d = config_.disease;
  const int result = day + d.incubation_to_contagious_days + d.contagious_to_symptoms_days +
                     d.symptoms_to_test_days + d.test_to_result_days;
  const UnixSeconds at = origin_ + result * kSecondsPerDay + d.upload_time_of_day;
  if (at < end_) push(at, EventKind::result_upload, i);
}

void Simulation::log_wire(const std::string& kind, bool uplink, std::size_t bytes) {
  trace_.wire.push_back(WireMessage{kind, uplink, bytes + kFrameHeaderBytes});
}

void Simulation::result_upload(std::size_t i, UnixSeconds t) {
  Node& n = nodes_[i];
  const UnixSeconds local = n.local(t);
  const Tan tan = ha_.issue_tan(n.id, t);

  if (tracecorona()) {
    Device& d = *n.device;
    d.purge_expired(local);
    d.charge();
    InfectedUploadRequest req{tan.value, build_upload(d.store())};
    if (req.records.empty()) return;
    const Bytes wire = encode(req);
    log_wire("upload_infected", true, wire.size());
    const InfectedUploadRequest got = decode_infected(wire);
    const UploadResult result = server_.upload_infected(got.tan, got.records);
    log_wire("upload_result", false, encode(result).size());
    if (!result.accepted()) return;
    n.uploaded = true;
    for (const auto& r : req.records) {
      n.own_uploads.insert(r.hash);
      record_origin_.try_emplace({r.hash, r.tag}, i);
    }
    return;
  }

  if (config_.scheme == Scheme::decentralized) {
    const std::int64_t today = local / kSecondsPerDay;
    std::vector<DecentralizedDailyKey> keys;
    for (std::int64_t day = today - (kUploadDays - 1); day <= today; ++day) {
      if (day < config_.start_day) continue;
      if (day == today && !config_.publish_current_day_key) continue;
      keys.push_back(tek_for(i, day));
    }
    // TAN, then a counted list of (key, day).
    log_wire("upload_keys", true, 2 + tan.value.size() + 4 + keys.size() * (16 + 8));
    const bool ok = ha_.verify_tan(tan.value, t) == TanVerdict::accepted;
    log_wire("upload_result", false, 1);
    if (!ok || keys.empty()) return;
    n.uploaded = true;
    ++baseline_stats_.infected_uploads;
    for (const auto& k : keys) {
      published_.push_back(PublishedKey{k, i});
      trace_.published_keys.push_back(k);
      trace_.published_key_owner.push_back(i);
      ++baseline_stats_.records_published;
    }
    return;
  }

  std::vector<TempIdSighting> upload;
  for (const auto& [id, seen] : n.sightings) {
    if (local - seen <= kUploadDays * kSecondsPerDay) upload.push_back({id, seen});
  }
  log_wire("upload_sightings", true, 2 + tan.value.size() + 4 + upload.size() * (16 + 8));
  const bool ok = ha_.verify_tan(tan.value, t) == TanVerdict::accepted;
  log_wire("upload_result", false, 1);
  if (!ok) return;
  n.uploaded = true;
  ++baseline_stats_.infected_uploads;
  baseline_stats_.records_published += upload.size();
  central_.ingest_upload(n.user, upload);
  // Ground truth per matched user: false only if every matching sighting
  // was injected.
  std::map<std::size_t, std::size_t> verdict;
  for (const auto& s : upload) {
    for (const UserId& u : central_.match({s})) {
      std::size_t device = 0;
      while (nodes_[device].user != u) ++device;
      if (device == i) continue;
      const std::size_t truth = sighting_truth_.at({i, s.tempid});
      auto [it, fresh] = verdict.try_emplace(device, truth);
      if (!fresh && truth == kHonest) it->second = kHonest;
    }
  }
  for (const auto& [device, truth] : verdict) {
    pending_central_.push_back(PendingCentral{device, i, truth});
  }
}

void Simulation::notify(std::size_t device, UnixSeconds t, const ExposureNotification& n,
                        std::size_t origin, std::size_t adversary) {
  NotificationRecord r;
  r.device = nodes_[device].id;
  r.day = day_of(t);
  r.time = t;
  r.level = std::string(to_string(n.level));
  r.superspreader_flag = n.superspreader_flag;
  if (origin != kHonest) {
    r.origin = nodes_[origin].id;
    if (nodes_[origin].infected_day) {
      r.latency_days =
          r.day - (*nodes_[origin].infected_day + config_.disease.incubation_to_contagious_days);
    }
  }
  r.false_positive = adversary != kHonest;
  r.risk_score = n.risk_score;
  if (r.false_positive) adversaries_[adversary].fooled.insert(device);
  notifications_.push_back(std::move(r));
}

void Simulation::feed_round(UnixSeconds t) {
  ++round_;
  for (Node& n : nodes_) {
    const UnixSeconds local = n.local(t);
    if (n.device) {
      n.device->purge_expired(local);
      n.device->charge();
    }
    std::erase_if(n.sightings, [&](const auto& kv) {
      return local - kv.second > kUploadDays * kSecondsPerDay;
    });
  }
  if (tracecorona()) {
    server_.advance_epoch();
    while (true) {
      const auto warned = tracecorona_matching(t);
      if (!config_.early_warning || !hybrid_uploads(warned, t)) break;
      // Second-level uploads go out in an extra round the same night.
      server_.advance_epoch();
      ++round_;
    }
  } else if (config_.scheme == Scheme::decentralized) {
    decentralized_round(t);
  } else {
    centralized_round(t);
  }
  fake_claims(t);
}

std::vector<std::size_t> Simulation::tracecorona_matching(UnixSeconds t) {
  const std::int64_t since = feed_cursor_;
  const PublishedFeed feed = server_.fetch_feed(since, shuffle_rng_);
  feed_cursor_ = feed.feed_epoch;
  const Bytes request = encode_feed_request(since);
  const Bytes wire = encode(feed);
  const PublishedFeed got = decode_feed(wire);

  std::vector<std::size_t> warned;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    if (!n.reported_active) {
      const auto digest = sha256(ByteView(reinterpret_cast<const std::uint8_t*>(n.id.data()),
                                          n.id.size()));
      server_.report_active_user(Bytes(digest.begin(), digest.end()));
      n.reported_active = true;
    }
    log_wire("feed_request", true, request.size());
    log_wire("feed", false, wire.size());
    const TokenStore& store = n.device->store();
    bool direct = false;
    for (const ExposureNotification& note : match_feed(store, got, config_.epsilon)) {
      if (n.own_uploads.contains(note.matched_hash)) continue;
      if (!n.seen.insert({note.matched_hash, note.level, note.superspreader_flag}).second) {
        continue;
      }
      const EncounterToken* token = nullptr;
      const TokenUploadRecord* record = nullptr;
      for (const auto& [key, tok] : store) {
        if (token_hash(tok.secret) != note.matched_hash) continue;
        for (const auto& rec : got.records) {
          if (rec.hash != note.matched_hash) continue;
          const auto remote = try_decrypt_metadata(tok.secret, rec.ciphertext);
          if (remote && std::abs(*remote - tok.start_time) <= config_.epsilon &&
              (rec.tag == RecordTag::direct) == (note.level == NotificationLevel::direct)) {
            token = &tok;
            record = &rec;
            break;
          }
        }
        if (token) break;
      }
      trace_.matches.push_back(
          MatchEvent{i, round_, token->secret, token->start_time, *record, config_.epsilon});
      const auto truth = token_truth_.find({i, token->frame_index, token->peer_ephemeral_id});
      const std::size_t adversary = truth == token_truth_.end() ? kHonest : truth->second;
      const auto origin = record_origin_.find({note.matched_hash, record->tag});
      notify(i, t, note, origin == record_origin_.end() ? kHonest : origin->second, adversary);
      server_.report_notification();
      if (note.level == NotificationLevel::direct) {
        n.direct_matches.push_back(note);
        direct = true;
      }
    }
    if (direct) warned.push_back(i);
  }
  return warned;
}

bool Simulation::hybrid_uploads(const std::vector<std::size_t>& warned, UnixSeconds) {
  bool any = false;
  for (std::size_t i : warned) {
    Node& n = nodes_[i];
    if (n.uploaded) continue;
    const TokenStore& store = n.device->store();
    const auto secret_of = [&](const TokenHash& h) {
      for (const auto& [key, tok] : store) {
        if (token_hash(tok.secret) == h) return tok.secret;
      }
      return TokenSecret{};
    };
    const auto origin_of = [&](const TokenHash& h) {
      const auto it = record_origin_.find({h, RecordTag::direct});
      return it == record_origin_.end() ? kHonest : it->second;
    };
    const auto remember = [&](const std::vector<TokenUploadRecord>& records, std::size_t origin) {
      for (const auto& r : records) {
        n.own_uploads.insert(r.hash);
        if (origin != kHonest) record_origin_.try_emplace({r.hash, r.tag}, origin);
      }
    };

    if (!n.superspreader_sent) {
      if (auto bundle = detect_superspreader_candidate(store, n.direct_matches,
                                                       config_.superspreader_threshold)) {
        const std::set<TokenSecret> proofs(bundle->begin(), bundle->end());
        SuperspreaderUploadRequest req{
            *bundle, build_upload(redact_tokens(store, [&](const EncounterToken& tok) {
              return proofs.contains(tok.secret);
            }))};
        for (auto& r : req.records) r.tag = RecordTag::possible_superspreader;
        if (!req.records.empty()) {
          const Bytes wire = encode(req);
          log_wire("upload_superspreader", true, wire.size());
          const auto got = decode_superspreader(wire);
          const UploadResult result = server_.upload_superspreader_proof(got.proofs, got.records);
          log_wire("upload_result", false, encode(result).size());
          if (result.accepted()) {
            n.superspreader_sent = n.second_level_sent = true;
            remember(req.records, origin_of(token_hash(bundle->front())));
            any = true;
          }
        }
      }
    }
    if (!n.second_level_sent && !n.direct_matches.empty()) {
      const TokenHash matched = n.direct_matches.front().matched_hash;
      const TokenSecret proof = secret_of(matched);
      SecondLevelUploadRequest req{
          proof, build_upload(redact_tokens(store, [&](const EncounterToken& tok) {
            return tok.secret == proof;
          }))};
      for (auto& r : req.records) r.tag = RecordTag::second_level;
      if (req.records.empty()) continue;
      const Bytes wire = encode(req);
      log_wire("upload_second_level", true, wire.size());
      const auto got = decode_second_level(wire);
      const UploadResult result = server_.upload_second_level(got.proof, got.records);
      log_wire("upload_result", false, encode(result).size());
      if (result.accepted()) {
        n.second_level_sent = true;
        remember(req.records, origin_of(matched));
        any = true;
      }
    }
  }
  return any;
}

void Simulation::decentralized_round(UnixSeconds t) {
  const std::size_t first = published_cursor_;
  published_cursor_ = published_.size();
  const std::size_t count = published_cursor_ - first;
  const DecentralizedMatchOptions options{config_.replay_window, config_.kiss_bug};
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    log_wire("feed_request", true, 8);
    log_wire("key_feed", false, 4 + count * (16 + 8));
    std::vector<TempIdSighting> observed;
    for (const auto& [id, seen] : n.sightings) observed.push_back({id, seen});
    for (std::size_t p = first; p < published_cursor_; ++p) {
      if (published_[p].owner == i) continue;
      const auto matches = decentralized_publish_and_match({published_[p].key}, observed, options);
      if (matches.empty() || !n.notified_keys.insert(p).second) continue;
      std::size_t adversary = kHonest;
      bool honest = false;
      for (const auto& m : matches) {
        const std::size_t truth = sighting_truth_.at({i, m.tempid});
        if (truth == kHonest) honest = true;
        if (adversary == kHonest) adversary = truth;
      }
      ExposureNotification note;
      // One identifier stands for up to ten minutes of exposure.
      note.risk_score = 10.0 * static_cast<double>(matches.size());
      notify(i, t, note, published_[p].owner, honest ? kHonest : adversary);
      ++baseline_stats_.notifications_reported;
    }
  }
}

void Simulation::centralized_round(UnixSeconds t) {
  for (const auto& p : pending_central_) {
    if (!nodes_[p.device].notified_origins.insert(p.origin).second) continue;
    log_wire("notification", false, 16);
    ExposureNotification note;
    notify(p.device, t, note, p.origin, p.adversary);
    ++baseline_stats_.notifications_reported;
  }
  pending_central_.clear();
}

void Simulation::fake_claims(UnixSeconds) {
  const bool published = tracecorona() ? server_.stats_snapshot().records_published > 0
                                       : baseline_stats_.records_published > 0;
  for (AdversaryState& adv : adversaries_) {
    if (adv.spec.kind != AdversaryKind::fake_claimer || adv.claimed || !published) continue;
    adv.claimed = true;
    for (int c = 0; c < adv.spec.claims; ++c) {
      ++adv.claim_attempts;
      if (config_.scheme == Scheme::decentralized) {
        // Matching is local to the phone; nobody can check the claim.
        ++adv.claim_successes;
      } else if (tracecorona()) {
        TokenUploadRecord fake{adversary_rng_.bytes<16>(), Bytes(kMetadataCiphertextSize),
                               RecordTag::second_level};
        adversary_rng_.fill(fake.ciphertext);
        const SecondLevelUploadRequest req{adversary_rng_.bytes<32>(), {fake}};
        const Bytes wire = encode(req);
        log_wire("upload_second_level", true, wire.size());
        const auto got = decode_second_level(wire);
        const UploadResult result = server_.upload_second_level(got.proof, got.records);
        log_wire("upload_result", false, encode(result).size());
        if (result.accepted()) ++adv.claim_successes;
      }
      // Centralized: the server itself decides who is notified, so a
      // claim it did not issue is rejected.
    }
  }
}

ScenarioReport Simulation::build_report() {
  ScenarioReport r;
  r.scenario = config_.name;
  r.scheme = std::string(to_string(config_.scheme));
  r.seed = config_.seed;
  r.duration_days = config_.duration_days;
  r.notifications = notifications_;
  for (const auto& n : notifications_) r.false_notification_count += n.false_positive;

  const LinkabilityResult link =
      eavesdropper_linkability(trace_.sensor_log, trace_.published_keys);

  std::uint64_t attempts = 0, successes = 0;
  for (const AdversaryState& a : adversaries_) {
    AdversaryOutcome o;
    o.name = a.name;
    o.kind = std::string(to_string(a.spec.kind));
    o.tokens_established = a.tokens;
    for (const auto& [key, victims] : a.victims) {
      o.max_victims_per_frame = std::max<std::uint64_t>(o.max_victims_per_frame, victims.size());
    }
    switch (a.spec.kind) {
      case AdversaryKind::fake_claimer:
        o.attempts = a.claim_attempts;
        o.successes = a.claim_successes;
        break;
      case AdversaryKind::eavesdropper: {
        // Tracked for longer than one identifier lifetime.
        std::set<std::size_t> watched;
        for (const auto& s : a.spec.sensors) watched.insert(*config_.device_index(s.device));
        for (std::size_t d : watched) {
          if (!link.observations.contains(d)) continue;
          ++o.attempts;
          if (link.max_window.at(d) > config_.frame_period) ++o.successes;
        }
        break;
      }
      default:
        o.attempts = a.reached.size();
        o.successes = a.fooled.size();
    }
    attempts += o.attempts;
    successes += o.successes;
    r.adversaries.push_back(o);
  }
  r.attack_success_rate =
      attempts == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(attempts);

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    LinkabilityRecord l;
    l.device = nodes_[i].id;
    if (auto it = link.observations.find(i); it != link.observations.end()) {
      l.observations = it->second;
      l.max_linkability_window_s = link.max_window.at(i);
    }
    r.linkability.push_back(l);
  }

  for (std::size_t p = 0; p < published_.size(); ++p) {
    const auto& [key, owner] = published_[p];
    std::set<TempId> observed;
    for (const auto& obs : trace_.sensor_log) {
      if (obs.device == owner && nodes_[owner].local(obs.time) / kSecondsPerDay == key.day) {
        observed.insert(obs.identifier);
      }
    }
    if (observed.empty()) continue;
    const auto ids = derive_tempids_decentralized(key.tek, key.day);
    const std::set<TempId> derived(ids.begin(), ids.end());
    std::set<TempId> linked_ids;
    std::set_intersection(observed.begin(), observed.end(), derived.begin(), derived.end(),
                          std::inserter(linked_ids, linked_ids.end()));
    r.tek_linkage.push_back(TekLinkage{nodes_[owner].id, key.day, observed.size(),
                                       linked_ids.size(), derived.size(),
                                       linked_ids == derived});
  }

  const auto& d = config_.disease;
  for (const Node& n : nodes_) {
    if (!n.infected_day) continue;
    const int contagious = *n.infected_day + d.incubation_to_contagious_days;
    r.infections.push_back(InfectionRecord{
        n.id, *n.infected_day, contagious,
        contagious + d.contagious_to_symptoms_days + d.symptoms_to_test_days +
            d.test_to_result_days,
        n.uploaded});
  }

  r.tokens_established = tokens_established_;
  for (const auto& c : config_.colocations) {
    r.true_contacts += c.end - c.start >= config_.min_encounter_duration;
  }
  for (const auto& m : trace_.wire) {
    (m.uplink ? r.payload.bytes_uploaded : r.payload.bytes_downloaded) += m.framed_bytes;
    ++r.payload.messages;
  }
  r.payload_reference = estimate_payload();
  if (tracecorona()) {
    r.server_stats = server_.stats_snapshot();
  } else {
    r.server_stats = baseline_stats_;
    r.server_stats.active_users = nodes_.size();
  }
  return r;
}

}  // namespace

ScenarioReport run_scenario(const ScenarioConfig& config) {
  SimulationTrace trace;
  return run_scenario(config, trace);
}

ScenarioReport run_scenario(const ScenarioConfig& config, SimulationTrace& trace) {
  config.validate();
  trace = SimulationTrace{};
  Simulation sim(config, trace);
  return sim.run();
}

LinkabilityResult eavesdropper_linkability(const std::vector<SensorObservation>& log,
                                           const std::vector<DecentralizedDailyKey>& published) {
  std::map<ByteArray<16>, std::size_t> node_of;
  for (const auto& obs : log) node_of.try_emplace(obs.identifier, node_of.size());
  std::vector<std::size_t> parent(node_of.size());
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& key : published) {
    std::optional<std::size_t> first;
    for (const TempId& id : derive_tempids_decentralized(key.tek, key.day)) {
      const auto it = node_of.find(id);
      if (it == node_of.end()) continue;
      if (!first) {
        first = it->second;
      } else {
        parent[find(it->second)] = find(*first);
      }
    }
  }

  struct Span {
    UnixSeconds first = kNever;
    UnixSeconds last = std::numeric_limits<UnixSeconds>::min();
  };
  std::map<std::pair<std::size_t, std::size_t>, Span> spans;
  LinkabilityResult out;
  for (const auto& obs : log) {
    Span& s = spans[{obs.device, find(node_of.at(obs.identifier))}];
    s.first = std::min(s.first, obs.time);
    s.last = std::max(s.last, obs.time);
    ++out.observations[obs.device];
  }
  for (const auto& [key, s] : spans) {
    Seconds& w = out.max_window[key.first];
    w = std::max(w, s.last - s.first);
  }
  return out;
}

}  // namespace tc
