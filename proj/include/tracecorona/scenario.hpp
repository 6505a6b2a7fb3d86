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

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tracecorona/bytes.hpp"
#include "tracecorona/tracing_server.hpp"

namespace tc {

constexpr int kScenarioFormatVersion = 1;

enum class Scheme { centralized, decentralized, tracecorona };

std::string_view to_string(Scheme scheme);
std::optional<Scheme> scheme_from_string(std::string_view text);

enum class AdversaryKind { relay_oneway, relay_twoway, eavesdropper, fake_claimer, tek_replay };

std::string_view to_string(AdversaryKind kind);

// Invalid scenario input. path() names the offending field, e.g.
// "colocations[2].end".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct DeviceSpec {
  std::string id;
  Seconds clock_offset_s = 0;
};

// Piecewise-constant signal strength: `dbm` applies from `offset` seconds
// into the interval until the next step.
struct RssiStep {
  Seconds offset = 0;
  Dbm dbm = -60;
};

// Times are seconds since the start of the scenario (true time).
struct Colocation {
  std::string device_a;
  std::string device_b;
  Seconds start = 0;
  Seconds end = 0;
  std::vector<RssiStep> rssi_profile{RssiStep{}};

  Dbm rssi_at(Seconds since_start) const;
};

struct Infection {
  std::string device;
  int day = 0;
};

struct DiseaseTimeline {
  int incubation_to_contagious_days = 3;
  int contagious_to_symptoms_days = 2;
  int symptoms_to_test_days = 2;
  int test_to_result_days = 1;
  // Infected users upload at this time of day on the day of their result.
  Seconds upload_time_of_day = 12 * 3600;
  // Co-location with a contagious device infects the other party.
  bool transmission = false;
  double transmission_probability = 1.0;
};

// Someone standing next to a sensor of an eavesdropper.
struct SensorSpec {
  std::string device;
  Seconds start = 0;
  Seconds end = 0;
};

struct AdversarySpec {
  std::string name;
  AdversaryKind kind = AdversaryKind::relay_oneway;
  // Relays: devices near the capturing antenna and near the emitter.
  std::vector<std::string> capture;
  std::vector<std::string> inject;
  Seconds start = 0;
  Seconds end = 0;
  Seconds latency_s = 0;
  std::size_t fanout_limit = 8;
  Dbm rssi = -60;
  std::vector<SensorSpec> sensors;
  // fake_claimer: claims made at the first feed round that has published data.
  int claims = 0;
  // tek_replay: time of day whose identifier is replayed.
  Seconds replay_time_of_day = 0;
};

struct ScenarioConfig {
  int version = kScenarioFormatVersion;
  std::string name;
  Scheme scheme = Scheme::tracecorona;
  std::uint64_t seed = 0;
  int duration_days = 1;
  // Unix day of scenario time zero.
  std::int64_t start_day = 18500;

  Seconds epsilon = 30;
  Seconds frame_period = 900;
  Seconds min_encounter_duration = 300;
  Seconds feed_cadence = kSecondsPerDay;
  Seconds continuity_gap = 120;
  double channel_loss = 0.1;
  bool deferred_derivation = false;

  bool early_warning = false;
  std::size_t superspreader_threshold = 3;

  Seconds replay_window = 7200;
  bool kiss_bug = false;
  // Decentralized uploads include the key of the upload day itself.
  bool publish_current_day_key = false;
  bool bluetrace = false;

  std::vector<DeviceSpec> devices;
  std::vector<Colocation> colocations;
  std::vector<Infection> infections;
  DiseaseTimeline disease;
  std::vector<AdversarySpec> adversaries;

  UnixSeconds origin() const { return start_day * kSecondsPerDay; }
  Seconds duration_seconds() const { return duration_days * kSecondsPerDay; }
  std::optional<std::size_t> device_index(std::string_view id) const;

  // Throws ConfigError.
  void validate() const;
};

// Throws ConfigError for syntax errors, unknown or mistyped fields and
// failed validation.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::string& path);
std::string render_config(const ScenarioConfig& config);

struct NotificationRecord {
  std::string device;
  int day = 0;
  UnixSeconds time = 0;
  std::string level;
  bool superspreader_flag = false;
  // Days since the origin case became contagious; -1 when unknown.
  int latency_days = -1;
  std::string origin;
  bool false_positive = false;
  double risk_score = 0;

  bool operator==(const NotificationRecord&) const = default;
};

struct AdversaryOutcome {
  std::string name;
  std::string kind;
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
  std::uint64_t tokens_established = 0;
  std::uint64_t max_victims_per_frame = 0;

  bool operator==(const AdversaryOutcome&) const = default;
};

struct LinkabilityRecord {
  std::string device;
  std::uint64_t observations = 0;
  Seconds max_linkability_window_s = 0;

  bool operator==(const LinkabilityRecord&) const = default;
};

// Identifiers an eavesdropper links through one published daily key.
struct TekLinkage {
  std::string device;
  std::int64_t day = 0;
  std::uint64_t observed_identifiers = 0;
  std::uint64_t linked_identifiers = 0;
  std::uint64_t derived_identifiers = 0;
  bool exact = false;

  bool operator==(const TekLinkage&) const = default;
};

struct InfectionRecord {
  std::string device;
  int infected_day = 0;
  int contagious_day = 0;
  int result_day = 0;
  bool uploaded = false;

  bool operator==(const InfectionRecord&) const = default;
};

struct PayloadTotals {
  std::uint64_t bytes_uploaded = 0;
  std::uint64_t bytes_downloaded = 0;
  std::uint64_t messages = 0;

  bool operator==(const PayloadTotals&) const = default;
};

struct ScenarioReport {
  int version = kScenarioFormatVersion;
  std::string scenario;
  std::string scheme;
  std::uint64_t seed = 0;
  int duration_days = 0;

  std::vector<NotificationRecord> notifications;
  std::uint64_t false_notification_count = 0;
  double attack_success_rate = 0;
  std::vector<AdversaryOutcome> adversaries;
  std::vector<LinkabilityRecord> linkability;
  std::vector<TekLinkage> tek_linkage;
  std::vector<InfectionRecord> infections;

  std::uint64_t tokens_established = 0;
  std::uint64_t true_contacts = 0;
  PayloadTotals payload;
  // Reference figures for a 14-day, 20-tokens-per-day, 10,000-uploads
  // deployment, independent of this run.
  PayloadEstimate payload_reference;
  ServerStats server_stats;

  bool operator==(const ScenarioReport&) const = default;
};

std::string render_report(const ScenarioReport& report);
ScenarioReport parse_report(std::string_view text);
// key=value lines for scripts.
std::string render_summary(const ScenarioReport& report);

}  // namespace tc
