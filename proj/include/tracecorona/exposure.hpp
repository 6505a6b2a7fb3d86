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

#include <functional>
#include <optional>
#include <vector>

#include "tracecorona/client.hpp"
#include "tracecorona/tracing_server.hpp"
#include "tracecorona/wire.hpp"

namespace tc {

enum class NotificationLevel { direct, second_level };

std::string_view to_string(NotificationLevel level);

struct ExposureNotification {
  TokenHash matched_hash{};
  NotificationLevel level = NotificationLevel::direct;
  bool superspreader_flag = false;
  UnixSeconds encounter_time = 0;
  Seconds duration = 0;
  double risk_score = 0;

  bool operator==(const ExposureNotification&) const = default;
};

// Signal-strength weights for risk scoring. Not a distance model; just a
// coarse bucketing of the strongest observed RSSI.
struct RiskConfig {
  Dbm near_dbm = -60;
  Dbm far_dbm = -75;
  double near_weight = 1.0;
  double mid_weight = 0.5;
  double far_weight = 0.25;
};

// (duration / 60) * weight(max_rssi).
double risk_score(Seconds duration, Dbm max_rssi, const RiskConfig& config = {});

// Emits one notification per (local token, feed record) pair whose hash
// matches, whose ciphertext opens under the local secret, and whose
// timestamps differ by at most epsilon. Sorted by encounter time, hash
// bytes, level, flag.
std::vector<ExposureNotification> match_feed(const TokenStore& store,
                                             const PublishedFeed& feed,
                                             Seconds epsilon,
                                             const RiskConfig& risk = {},
                                             const TokenHashFn& hash = token_hash);

// Secrets of distinct direct matches once there are at least `threshold`.
std::optional<std::vector<TokenSecret>> detect_superspreader_candidate(
    const TokenStore& store, const std::vector<ExposureNotification>& matched,
    std::size_t threshold);

// Upload view without the tokens for which `exclude` returns true.
TokenStore redact_tokens(const TokenStore& store,
                         const std::function<bool(const EncounterToken&)>& exclude);

// (hash, encrypted start time) for every token in the store.
std::vector<TokenUploadRecord> build_upload(const TokenStore& store);

}  // namespace tc
