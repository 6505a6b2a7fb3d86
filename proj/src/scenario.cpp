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

#include "tracecorona/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tc {
namespace {

using json = nlohmann::ordered_json;

constexpr std::pair<Scheme, std::string_view> kSchemes[] = {
    {Scheme::centralized, "centralized"},
    {Scheme::decentralized, "decentralized"},
    {Scheme::tracecorona, "tracecorona"},
};

constexpr std::pair<AdversaryKind, std::string_view> kKinds[] = {
    {AdversaryKind::relay_oneway, "relay_oneway"},
    {AdversaryKind::relay_twoway, "relay_twoway"},
    {AdversaryKind::eavesdropper, "eavesdropper"},
    {AdversaryKind::fake_claimer, "fake_claimer"},
    {AdversaryKind::tek_replay, "tek_replay"},
};

std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void read_value(const json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) throw ConfigError(path, "expected a boolean");
  out = j.get<bool>();
}

void read_value(const json& j, const std::string& path, std::string& out) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  out = j.get<std::string>();
}

void read_value(const json& j, const std::string& path, double& out) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  out = j.get<double>();
}

template <typename T>
  requires std::is_integral_v<T>
void read_value(const json& j, const std::string& path, T& out) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  if constexpr (std::is_unsigned_v<T>) {
    if (j.is_number_unsigned()) {
      out = static_cast<T>(j.get<std::uint64_t>());
      return;
    }
    if (j.get<std::int64_t>() < 0) throw ConfigError(path, "must not be negative");
  }
  out = static_cast<T>(j.get<std::int64_t>());
}

void read_value(const json& j, const std::string& path, Scheme& out) {
  std::string s;
  read_value(j, path, s);
  const auto scheme = scheme_from_string(s);
  if (!scheme) throw ConfigError(path, "unknown scheme '" + s + "'");
  out = *scheme;
}

void read_value(const json& j, const std::string& path, AdversaryKind& out) {
  std::string s;
  read_value(j, path, s);
  for (const auto& [kind, name] : kKinds) {
    if (name == s) {
      out = kind;
      return;
    }
  }
  throw ConfigError(path, "unknown adversary kind '" + s + "'");
}

void read_value(const json& j, const std::string& path, RssiStep& out);
void read_value(const json& j, const std::string& path, DeviceSpec& out);
void read_value(const json& j, const std::string& path, Colocation& out);
void read_value(const json& j, const std::string& path, Infection& out);
void read_value(const json& j, const std::string& path, DiseaseTimeline& out);
void read_value(const json& j, const std::string& path, SensorSpec& out);
void read_value(const json& j, const std::string& path, AdversarySpec& out);

template <typename T>
void read_value(const json& j, const std::string& path, std::vector<T>& out) {
  if (!j.is_array()) throw ConfigError(path, "expected a list");
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    T item;
    read_value(j[i], index_path(path, i), item);
    out.push_back(std::move(item));
  }
}

// Field-by-field reader for one JSON object that rejects unknown keys.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj.is_object()) throw ConfigError(path_.empty() ? "$" : path_, "expected an object");
  }

  template <typename T>
  void optional(const char* key, T& out) {
    seen_.insert(key);
    if (auto it = obj_.find(key); it != obj_.end()) read_value(*it, at(key), out);
  }

  template <typename T>
  void required(const char* key, T& out) {
    if (!obj_.contains(key)) throw ConfigError(at(key), "missing required field");
    optional(key, out);
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw ConfigError(at(key), "unknown field");
    }
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_value(const json& j, const std::string& path, RssiStep& out) {
  if (j.is_number_integer()) {
    out = RssiStep{0, j.get<Dbm>()};
    return;
  }
  Fields f(j, path);
  f.optional("offset", out.offset);
  f.required("dbm", out.dbm);
  f.finish();
}

void read_value(const json& j, const std::string& path, DeviceSpec& out) {
  Fields f(j, path);
  f.required("id", out.id);
  f.optional("clock_offset_s", out.clock_offset_s);
  f.finish();
}

void read_value(const json& j, const std::string& path, Colocation& out) {
  Fields f(j, path);
  f.required("device_a", out.device_a);
  f.required("device_b", out.device_b);
  f.required("start", out.start);
  f.required("end", out.end);
  f.optional("rssi_profile", out.rssi_profile);
  f.finish();
}

void read_value(const json& j, const std::string& path, Infection& out) {
  Fields f(j, path);
  f.required("device", out.device);
  f.required("day", out.day);
  f.finish();
}

void read_value(const json& j, const std::string& path, DiseaseTimeline& out) {
  Fields f(j, path);
  f.optional("incubation_to_contagious_days", out.incubation_to_contagious_days);
  f.optional("contagious_to_symptoms_days", out.contagious_to_symptoms_days);
  f.optional("symptoms_to_test_days", out.symptoms_to_test_days);
  f.optional("test_to_result_days", out.test_to_result_days);
  f.optional("upload_time_of_day", out.upload_time_of_day);
  f.optional("transmission", out.transmission);
  f.optional("transmission_probability", out.transmission_probability);
  f.finish();
}

void read_value(const json& j, const std::string& path, SensorSpec& out) {
  Fields f(j, path);
  f.required("device", out.device);
  f.required("start", out.start);
  f.required("end", out.end);
  f.finish();
}

void read_value(const json& j, const std::string& path, AdversarySpec& out) {
  Fields f(j, path);
  f.optional("name", out.name);
  f.required("kind", out.kind);
  f.optional("capture", out.capture);
  f.optional("inject", out.inject);
  f.optional("start", out.start);
  f.optional("end", out.end);
  f.optional("latency_s", out.latency_s);
  f.optional("fanout_limit", out.fanout_limit);
  f.optional("rssi", out.rssi);
  f.optional("sensors", out.sensors);
  f.optional("claims", out.claims);
  f.optional("replay_time_of_day", out.replay_time_of_day);
  f.finish();
}

json to_json(const DeviceSpec& d) {
  return json{{"id", d.id}, {"clock_offset_s", d.clock_offset_s}};
}

json to_json(const Colocation& c) {
  json profile = json::array();
  for (const auto& s : c.rssi_profile) profile.push_back({{"offset", s.offset}, {"dbm", s.dbm}});
  return json{{"device_a", c.device_a}, {"device_b", c.device_b}, {"start", c.start},
              {"end", c.end},           {"rssi_profile", profile}};
}

json to_json(const AdversarySpec& a) {
  json sensors = json::array();
  for (const auto& s : a.sensors) {
    sensors.push_back({{"device", s.device}, {"start", s.start}, {"end", s.end}});
  }
  return json{{"name", a.name},
              {"kind", to_string(a.kind)},
              {"capture", a.capture},
              {"inject", a.inject},
              {"start", a.start},
              {"end", a.end},
              {"latency_s", a.latency_s},
              {"fanout_limit", a.fanout_limit},
              {"rssi", a.rssi},
              {"sensors", sensors},
              {"claims", a.claims},
              {"replay_time_of_day", a.replay_time_of_day}};
}

void check(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ConfigError(path, message);
}

}  // namespace

std::string_view to_string(Scheme scheme) {
  for (const auto& [s, name] : kSchemes) {
    if (s == scheme) return name;
  }
  return "?";
}

std::optional<Scheme> scheme_from_string(std::string_view text) {
  for (const auto& [s, name] : kSchemes) {
    if (name == text) return s;
  }
  return std::nullopt;
}

std::string_view to_string(AdversaryKind kind) {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return "?";
}

Dbm Colocation::rssi_at(Seconds since_start) const {
  Dbm value = rssi_profile.empty() ? -60 : rssi_profile.front().dbm;
  for (const auto& step : rssi_profile) {
    if (step.offset <= since_start) value = step.dbm;
  }
  return value;
}

std::optional<std::size_t> ScenarioConfig::device_index(std::string_view id) const {
  for (std::size_t i = 0; i < devices.size(); ++i) {
    if (devices[i].id == id) return i;
  }
  return std::nullopt;
}

void ScenarioConfig::validate() const {
  check(version == kScenarioFormatVersion, "version",
        "unsupported version " + std::to_string(version));
  check(duration_days >= 1 && duration_days <= 120, "duration_days", "must be in 1..120");
  check(start_day >= 0, "start_day", "must not be negative");
  check(frame_period > 0, "frame_period", "must be positive");
  check(epsilon > 0 && epsilon < frame_period, "epsilon", "must satisfy 0 < epsilon < frame_period");
  check(min_encounter_duration >= 0 && min_encounter_duration <= frame_period,
        "min_encounter_duration", "must be in 0..frame_period");
  check(feed_cadence > 0 && kSecondsPerDay % feed_cadence == 0 && feed_cadence > 600,
        "feed_cadence", "must divide one day and exceed 600 s");
  check(continuity_gap > 0, "continuity_gap", "must be positive");
  check(channel_loss >= 0 && channel_loss < 1, "channel_loss", "must be in [0, 1)");
  check(superspreader_threshold >= 1, "superspreader_threshold", "must be at least 1");
  check(replay_window >= 0, "replay_window", "must not be negative");
  check(!devices.empty(), "devices", "at least one device is required");

  const Seconds span = duration_seconds();
  auto device_exists = [&](const std::string& id, const std::string& path) {
    check(device_index(id).has_value(), path, "unknown device '" + id + "'");
  };

  std::set<std::string> ids;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const std::string p = index_path("devices", i);
    check(!devices[i].id.empty(), p + ".id", "must not be empty");
    check(ids.insert(devices[i].id).second, p + ".id", "duplicate device id");
    check(std::abs(devices[i].clock_offset_s) <= kSecondsPerDay, p + ".clock_offset_s",
          "must be within one day");
  }
  for (std::size_t i = 0; i < colocations.size(); ++i) {
    const auto& c = colocations[i];
    const std::string p = index_path("colocations", i);
    device_exists(c.device_a, p + ".device_a");
    device_exists(c.device_b, p + ".device_b");
    check(c.device_a != c.device_b, p + ".device_b", "a device cannot meet itself");
    check(c.start >= 0, p + ".start", "must not be negative");
    check(c.end > c.start, p + ".end", "must be after start");
    check(c.end <= span, p + ".end", "beyond the scenario duration");
    check(!c.rssi_profile.empty(), p + ".rssi_profile", "must not be empty");
    for (std::size_t k = 0; k < c.rssi_profile.size(); ++k) {
      const std::string q = index_path(p + ".rssi_profile", k);
      check(k > 0 || c.rssi_profile[k].offset == 0, q + ".offset", "first step must start at 0");
      check(k == 0 || c.rssi_profile[k].offset > c.rssi_profile[k - 1].offset, q + ".offset",
            "offsets must increase");
      check(c.rssi_profile[k].dbm >= -127 && c.rssi_profile[k].dbm <= 20, q + ".dbm",
            "must be in -127..20");
    }
  }
  std::set<std::string> infected;
  for (std::size_t i = 0; i < infections.size(); ++i) {
    const std::string p = index_path("infections", i);
    device_exists(infections[i].device, p + ".device");
    check(infected.insert(infections[i].device).second, p + ".device",
          "device infected twice");
    check(infections[i].day >= 0 && infections[i].day < duration_days, p + ".day",
          "outside the scenario");
  }
  check(disease.incubation_to_contagious_days >= 0, "disease.incubation_to_contagious_days",
        "must not be negative");
  check(disease.contagious_to_symptoms_days >= 1 && disease.contagious_to_symptoms_days <= 2,
        "disease.contagious_to_symptoms_days", "must be 1 or 2");
  check(disease.symptoms_to_test_days >= 0, "disease.symptoms_to_test_days",
        "must not be negative");
  check(disease.test_to_result_days >= 0, "disease.test_to_result_days",
        "must not be negative");
  check(disease.upload_time_of_day >= 0 && disease.upload_time_of_day < kSecondsPerDay,
        "disease.upload_time_of_day", "must be within a day");
  check(disease.transmission_probability >= 0 && disease.transmission_probability <= 1,
        "disease.transmission_probability", "must be in [0, 1]");

  std::set<std::string> names;
  for (std::size_t i = 0; i < adversaries.size(); ++i) {
    const auto& a = adversaries[i];
    const std::string p = index_path("adversaries", i);
    check(a.name.empty() || names.insert(a.name).second, p + ".name", "duplicate name");
    for (std::size_t k = 0; k < a.capture.size(); ++k) {
      device_exists(a.capture[k], index_path(p + ".capture", k));
    }
    for (std::size_t k = 0; k < a.inject.size(); ++k) {
      device_exists(a.inject[k], index_path(p + ".inject", k));
    }
    check(a.latency_s >= 0, p + ".latency_s", "must not be negative");
    switch (a.kind) {
      case AdversaryKind::relay_oneway:
      case AdversaryKind::relay_twoway:
        check(!a.capture.empty(), p + ".capture", "a relay needs capture devices");
        check(!a.inject.empty(), p + ".inject", "a relay needs inject devices");
        [[fallthrough]];
      case AdversaryKind::tek_replay:
        check(a.start >= 0, p + ".start", "must not be negative");
        check(a.end > a.start, p + ".end", "must be after start");
        check(a.end <= span, p + ".end", "beyond the scenario duration");
        break;
      case AdversaryKind::eavesdropper:
        check(!a.sensors.empty(), p + ".sensors", "an eavesdropper needs sensors");
        for (std::size_t k = 0; k < a.sensors.size(); ++k) {
          const std::string q = index_path(p + ".sensors", k);
          device_exists(a.sensors[k].device, q + ".device");
          check(a.sensors[k].start >= 0, q + ".start", "must not be negative");
          check(a.sensors[k].end > a.sensors[k].start, q + ".end", "must be after start");
          check(a.sensors[k].end <= span, q + ".end", "beyond the scenario duration");
        }
        break;
      case AdversaryKind::fake_claimer:
        check(a.claims >= 1, p + ".claims", "must be at least 1");
        break;
    }
    if (a.kind == AdversaryKind::relay_twoway) {
      check(a.fanout_limit >= 1 && a.fanout_limit <= 8, p + ".fanout_limit",
            "must be in 1..8");
    }
    if (a.kind == AdversaryKind::tek_replay) {
      check(!a.inject.empty(), p + ".inject", "a replay needs inject devices");
      check(a.replay_time_of_day >= 0 && a.replay_time_of_day < kSecondsPerDay,
            p + ".replay_time_of_day", "must be within a day");
    }
  }
}

ScenarioConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("not valid JSON: ") + e.what());
  }
  ScenarioConfig c;
  Fields f(j, "");
  f.required("version", c.version);
  f.optional("name", c.name);
  f.optional("scheme", c.scheme);
  f.optional("seed", c.seed);
  f.optional("duration_days", c.duration_days);
  f.optional("start_day", c.start_day);
  f.optional("epsilon", c.epsilon);
  f.optional("frame_period", c.frame_period);
  f.optional("min_encounter_duration", c.min_encounter_duration);
  f.optional("feed_cadence", c.feed_cadence);
  f.optional("continuity_gap", c.continuity_gap);
  f.optional("channel_loss", c.channel_loss);
  f.optional("deferred_derivation", c.deferred_derivation);
  f.optional("early_warning", c.early_warning);
  f.optional("superspreader_threshold", c.superspreader_threshold);
  f.optional("replay_window", c.replay_window);
  f.optional("kiss_bug", c.kiss_bug);
  f.optional("publish_current_day_key", c.publish_current_day_key);
  f.optional("bluetrace", c.bluetrace);
  f.required("devices", c.devices);
  f.optional("colocations", c.colocations);
  f.optional("infections", c.infections);
  f.optional("disease", c.disease);
  f.optional("adversaries", c.adversaries);
  f.finish();
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string render_config(const ScenarioConfig& c) {
  json devices = json::array(), colocations = json::array(), infections = json::array(),
       adversaries = json::array();
  for (const auto& d : c.devices) devices.push_back(to_json(d));
  for (const auto& x : c.colocations) colocations.push_back(to_json(x));
  for (const auto& i : c.infections) infections.push_back({{"device", i.device}, {"day", i.day}});
  for (const auto& a : c.adversaries) adversaries.push_back(to_json(a));
  const auto& d = c.disease;
  json j{{"version", c.version},
         {"name", c.name},
         {"scheme", to_string(c.scheme)},
         {"seed", c.seed},
         {"duration_days", c.duration_days},
         {"start_day", c.start_day},
         {"epsilon", c.epsilon},
         {"frame_period", c.frame_period},
         {"min_encounter_duration", c.min_encounter_duration},
         {"feed_cadence", c.feed_cadence},
         {"continuity_gap", c.continuity_gap},
         {"channel_loss", c.channel_loss},
         {"deferred_derivation", c.deferred_derivation},
         {"early_warning", c.early_warning},
         {"superspreader_threshold", c.superspreader_threshold},
         {"replay_window", c.replay_window},
         {"kiss_bug", c.kiss_bug},
         {"publish_current_day_key", c.publish_current_day_key},
         {"bluetrace", c.bluetrace},
         {"devices", devices},
         {"colocations", colocations},
         {"infections", infections},
         {"disease",
          {{"incubation_to_contagious_days", d.incubation_to_contagious_days},
           {"contagious_to_symptoms_days", d.contagious_to_symptoms_days},
           {"symptoms_to_test_days", d.symptoms_to_test_days},
           {"test_to_result_days", d.test_to_result_days},
           {"upload_time_of_day", d.upload_time_of_day},
           {"transmission", d.transmission},
           {"transmission_probability", d.transmission_probability}}},
         {"adversaries", adversaries}};
  return j.dump(2) + "\n";
}

std::string render_report(const ScenarioReport& r) {
  json notifications = json::array();
  for (const auto& n : r.notifications) {
    notifications.push_back({{"device", n.device},
                             {"day", n.day},
                             {"time", n.time},
                             {"level", n.level},
                             {"superspreader_flag", n.superspreader_flag},
                             {"latency_days", n.latency_days},
                             {"origin", n.origin},
                             {"false_positive", n.false_positive},
                             {"risk_score", n.risk_score}});
  }
  json adversaries = json::array();
  for (const auto& a : r.adversaries) {
    adversaries.push_back({{"name", a.name},
                           {"kind", a.kind},
                           {"attempts", a.attempts},
                           {"successes", a.successes},
                           {"tokens_established", a.tokens_established},
                           {"max_victims_per_frame", a.max_victims_per_frame}});
  }
  json linkability = json::array();
  for (const auto& l : r.linkability) {
    linkability.push_back({{"device", l.device},
                           {"observations", l.observations},
                           {"max_linkability_window_s", l.max_linkability_window_s}});
  }
  json tek = json::array();
  for (const auto& t : r.tek_linkage) {
    tek.push_back({{"device", t.device},
                   {"day", t.day},
                   {"observed_identifiers", t.observed_identifiers},
                   {"linked_identifiers", t.linked_identifiers},
                   {"derived_identifiers", t.derived_identifiers},
                   {"exact", t.exact}});
  }
  json infections = json::array();
  for (const auto& i : r.infections) {
    infections.push_back({{"device", i.device},
                          {"infected_day", i.infected_day},
                          {"contagious_day", i.contagious_day},
                          {"result_day", i.result_day},
                          {"uploaded", i.uploaded}});
  }
  const auto& p = r.payload_reference;
  const auto& s = r.server_stats;
  json j{{"version", r.version},
         {"scenario", r.scenario},
         {"scheme", r.scheme},
         {"seed", r.seed},
         {"duration_days", r.duration_days},
         {"notifications", notifications},
         {"false_notification_count", r.false_notification_count},
         {"attack_success_rate", r.attack_success_rate},
         {"adversaries", adversaries},
         {"linkability", linkability},
         {"tek_linkage", tek},
         {"infections", infections},
         {"tokens_established", r.tokens_established},
         {"true_contacts", r.true_contacts},
         {"payload",
          {{"bytes_uploaded", r.payload.bytes_uploaded},
           {"bytes_downloaded", r.payload.bytes_downloaded},
           {"messages", r.payload.messages}}},
         {"payload_reference",
          {{"records_per_upload", p.records_per_upload},
           {"hash_bits_per_upload", p.hash_bits_per_upload},
           {"hash_bytes_per_upload", p.hash_bytes_per_upload},
           {"wire_bytes_per_upload", p.wire_bytes_per_upload},
           {"daily_feed_hash_bytes", p.daily_feed_hash_bytes},
           {"daily_feed_wire_bytes", p.daily_feed_wire_bytes},
           {"daily_feed_hash_megabytes", p.daily_feed_hash_megabytes},
           {"reference_daily_megabytes", p.reference_daily_megabytes},
           {"note", p.note}}},
         {"server_stats",
          {{"active_users", s.active_users},
           {"infected_uploads", s.infected_uploads},
           {"records_published", s.records_published},
           {"second_level_uploads", s.second_level_uploads},
           {"superspreader_flags", s.superspreader_flags},
           {"notifications_reported", s.notifications_reported}}}};
  return j.dump(2) + "\n";
}

ScenarioReport parse_report(std::string_view text) {
  const json j = json::parse(text);
  ScenarioReport r;
  r.version = j.at("version");
  if (r.version != kScenarioFormatVersion) {
    throw std::runtime_error("unsupported report version");
  }
  r.scenario = j.at("scenario");
  r.scheme = j.at("scheme");
  r.seed = j.at("seed");
  r.duration_days = j.at("duration_days");
  for (const auto& n : j.at("notifications")) {
    r.notifications.push_back(NotificationRecord{
        n.at("device"), n.at("day"), n.at("time"), n.at("level"),
        n.at("superspreader_flag"), n.at("latency_days"), n.at("origin"),
        n.at("false_positive"), n.at("risk_score")});
  }
  r.false_notification_count = j.at("false_notification_count");
  r.attack_success_rate = j.at("attack_success_rate");
  for (const auto& a : j.at("adversaries")) {
    r.adversaries.push_back(AdversaryOutcome{a.at("name"), a.at("kind"), a.at("attempts"),
                                             a.at("successes"), a.at("tokens_established"),
                                             a.at("max_victims_per_frame")});
  }
  for (const auto& l : j.at("linkability")) {
    r.linkability.push_back(LinkabilityRecord{l.at("device"), l.at("observations"),
                                              l.at("max_linkability_window_s")});
  }
  for (const auto& t : j.at("tek_linkage")) {
    r.tek_linkage.push_back(TekLinkage{t.at("device"), t.at("day"),
                                       t.at("observed_identifiers"),
                                       t.at("linked_identifiers"),
                                       t.at("derived_identifiers"), t.at("exact")});
  }
  for (const auto& i : j.at("infections")) {
    r.infections.push_back(InfectionRecord{i.at("device"), i.at("infected_day"),
                                           i.at("contagious_day"), i.at("result_day"),
                                           i.at("uploaded")});
  }
  r.tokens_established = j.at("tokens_established");
  r.true_contacts = j.at("true_contacts");
  const auto& p = j.at("payload");
  r.payload = PayloadTotals{p.at("bytes_uploaded"), p.at("bytes_downloaded"), p.at("messages")};
  const auto& e = j.at("payload_reference");
  auto& pr = r.payload_reference;
  pr.records_per_upload = e.at("records_per_upload");
  pr.hash_bits_per_upload = e.at("hash_bits_per_upload");
  pr.hash_bytes_per_upload = e.at("hash_bytes_per_upload");
  pr.wire_bytes_per_upload = e.at("wire_bytes_per_upload");
  pr.daily_feed_hash_bytes = e.at("daily_feed_hash_bytes");
  pr.daily_feed_wire_bytes = e.at("daily_feed_wire_bytes");
  pr.daily_feed_hash_megabytes = e.at("daily_feed_hash_megabytes");
  pr.reference_daily_megabytes = e.at("reference_daily_megabytes");
  pr.note = e.at("note");
  const auto& s = j.at("server_stats");
  r.server_stats = ServerStats{s.at("active_users"),         s.at("infected_uploads"),
                               s.at("records_published"),    s.at("second_level_uploads"),
                               s.at("superspreader_flags"), s.at("notifications_reported")};
  return r;
}

std::string render_summary(const ScenarioReport& r) {
  Seconds max_window = 0;
  for (const auto& l : r.linkability) {
    max_window = std::max(max_window, l.max_linkability_window_s);
  }
  std::ostringstream out;
  out << "scenario=" << r.scenario << "\n"
      << "scheme=" << r.scheme << "\n"
      << "seed=" << r.seed << "\n"
      << "notifications=" << r.notifications.size() << "\n"
      << "false_notifications=" << r.false_notification_count << "\n"
      << "attack_success_rate=" << r.attack_success_rate << "\n"
      << "tokens_established=" << r.tokens_established << "\n"
      << "max_linkability_window_s=" << max_window << "\n"
      << "bytes_uploaded=" << r.payload.bytes_uploaded << "\n"
      << "bytes_downloaded=" << r.payload.bytes_downloaded << "\n";
  for (const auto& a : r.adversaries) {
    out << "adversary." << a.name << ".attempts=" << a.attempts << "\n"
        << "adversary." << a.name << ".successes=" << a.successes << "\n"
        << "adversary." << a.name << ".max_victims_per_frame=" << a.max_victims_per_frame
        << "\n";
  }
  return out.str();
}

}  // namespace tc
