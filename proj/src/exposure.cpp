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

#include "tracecorona/exposure.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace tc {

std::string_view to_string(NotificationLevel level) {
  return level == NotificationLevel::direct ? "direct" : "second_level";
}

double risk_score(Seconds duration, Dbm max_rssi, const RiskConfig& config) {
  if (duration < 0) throw std::invalid_argument("duration must be >= 0");
  double weight = config.far_weight;
  if (max_rssi >= config.near_dbm) {
    weight = config.near_weight;
  } else if (max_rssi >= config.far_dbm) {
    weight = config.mid_weight;
  }
  return static_cast<double>(duration) / 60.0 * weight;
}

std::vector<ExposureNotification> match_feed(const TokenStore& store,
                                             const PublishedFeed& feed,
                                             Seconds epsilon,
                                             const RiskConfig& risk,
                                             const TokenHashFn& hash) {
  std::unordered_map<TokenHash, std::vector<const EncounterToken*>, ByteArrayHash>
      index;
  for (const auto& [key, token] : store) {
    index[hash(token.secret)].push_back(&token);
  }

  std::vector<ExposureNotification> out;
  for (const auto& record : feed.records) {
    auto it = index.find(record.hash);
    if (it == index.end()) continue;
    for (const EncounterToken* token : it->second) {
      const auto remote = try_decrypt_metadata(token->secret, record.ciphertext);
      if (!remote) continue;
      if (std::abs(*remote - token->start_time) > epsilon) continue;
      ExposureNotification n;
      n.matched_hash = record.hash;
      n.level = record.tag == RecordTag::direct ? NotificationLevel::direct
                                                : NotificationLevel::second_level;
      n.superspreader_flag = record.tag == RecordTag::possible_superspreader;
      n.encounter_time = token->start_time;
      n.duration = token->duration;
      n.risk_score = risk_score(token->duration, token->max_signal_strength, risk);
      out.push_back(n);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.encounter_time, a.matched_hash, a.level, a.superspreader_flag) <
           std::tie(b.encounter_time, b.matched_hash, b.level, b.superspreader_flag);
  });
  return out;
}

std::optional<std::vector<TokenSecret>> detect_superspreader_candidate(
    const TokenStore& store, const std::vector<ExposureNotification>& matched,
    std::size_t threshold) {
  std::set<TokenHash> distinct;
  for (const auto& n : matched) {
    if (n.level == NotificationLevel::direct) distinct.insert(n.matched_hash);
  }
  if (distinct.size() < threshold || distinct.empty()) return std::nullopt;
  std::vector<TokenSecret> bundle;
  std::set<TokenSecret> seen;
  for (const auto& [key, token] : store) {
    if (distinct.contains(token_hash(token.secret)) &&
        seen.insert(token.secret).second) {
      bundle.push_back(token.secret);
    }
  }
  return bundle;
}

TokenStore redact_tokens(const TokenStore& store,
                         const std::function<bool(const EncounterToken&)>& exclude) {
  TokenStore view(store.retention_days());
  for (const auto& [key, token] : store) {
    if (!exclude(token)) view.insert(token);
  }
  return view;
}

std::vector<TokenUploadRecord> build_upload(const TokenStore& store) {
  std::vector<TokenUploadRecord> out;
  out.reserve(store.size());
  for (const auto& [key, token] : store) {
    out.push_back(TokenUploadRecord{token_hash(token.secret),
                                    encrypt_metadata(token.secret, token.start_time),
                                    RecordTag::direct});
  }
  return out;
}

}  // namespace tc
