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
#include <string>
#include <vector>

#include "tracecorona/baselines.hpp"
#include "tracecorona/scenario.hpp"
#include "tracecorona/wire.hpp"

namespace tc {

// Every simulated network message carries a 4-byte length prefix.
constexpr std::uint64_t kFrameHeaderBytes = 4;

struct WireMessage {
  std::string kind;
  bool uplink = true;
  std::uint64_t framed_bytes = 0;
};

// One (store token, feed record) match that produced a notification.
struct MatchEvent {
  std::size_t device = 0;
  int round = 0;
  TokenSecret secret{};
  UnixSeconds local_time = 0;
  TokenUploadRecord record;
  Seconds epsilon = 0;
};

struct SensorObservation {
  UnixSeconds time = 0;
  ByteArray<16> identifier{};
  // Ground truth, used only to score the attack.
  std::size_t device = 0;
};

// Everything the simulator saw besides the report; for tests and audits.
struct SimulationTrace {
  std::vector<WireMessage> wire;
  std::vector<MatchEvent> matches;
  std::vector<SensorObservation> sensor_log;
  std::vector<DecentralizedDailyKey> published_keys;
  // Owner index of each published key (ground truth).
  std::vector<std::size_t> published_key_owner;
};

ScenarioReport run_scenario(const ScenarioConfig& config);
ScenarioReport run_scenario(const ScenarioConfig& config, SimulationTrace& trace);

struct LinkabilityResult {
  // Per device: longest time span covered by one linked chain of
  // observations, and the number of observations.
  std::map<std::size_t, Seconds> max_window;
  std::map<std::size_t, std::uint64_t> observations;
};

// Observations are linked when they carry the same identifier or when
// both identifiers derive from one published daily key.
LinkabilityResult eavesdropper_linkability(const std::vector<SensorObservation>& log,
                                           const std::vector<DecentralizedDailyKey>& published);

}  // namespace tc
