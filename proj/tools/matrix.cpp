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

#include "matrix.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

namespace tc::cli {
namespace {

struct Tally {
  std::optional<bool> relay_success;
  std::optional<std::uint64_t> relay_twoway_fanout;
  std::optional<bool> fake_success;
  std::optional<Seconds> max_track;
  bool tek_exact = false;
  std::optional<int> first_level;
  std::optional<int> second_level;
};

void merge(std::optional<bool>& slot, bool value) { slot = slot.value_or(false) || value; }

template <typename T>
void keep_max(std::optional<T>& slot, T value) {
  slot = slot ? std::max(*slot, value) : value;
}

template <typename T>
void keep_min(std::optional<T>& slot, T value) {
  slot = slot ? std::min(*slot, value) : value;
}

}  // namespace

std::vector<MatrixRow> comparison_matrix(const std::vector<ScenarioReport>& reports) {
  std::map<std::string, Tally> by_scheme;
  for (const auto& r : reports) {
    Tally& t = by_scheme[r.scheme];
    for (const auto& a : r.adversaries) {
      if (a.kind == "relay_oneway") merge(t.relay_success, a.successes > 0);
      if (a.kind == "relay_twoway") keep_max(t.relay_twoway_fanout, a.max_victims_per_frame);
      if (a.kind == "fake_claimer") merge(t.fake_success, a.successes > 0);
      if (a.kind == "eavesdropper") {
        for (const auto& l : r.linkability) {
          if (l.observations > 0) keep_max(t.max_track, l.max_linkability_window_s);
        }
        for (const auto& k : r.tek_linkage) t.tek_exact = t.tek_exact || k.exact;
      }
    }
    for (const auto& n : r.notifications) {
      if (n.false_positive || n.latency_days < 0) continue;
      if (n.level == "direct") keep_min(t.first_level, n.latency_days);
      if (n.level == "second_level") keep_min(t.second_level, n.latency_days);
    }
  }

  std::vector<MatrixRow> rows;
  for (const auto& [scheme, t] : by_scheme) {
    MatrixRow row;
    row.scheme = scheme;
    const auto verdict = [](const std::optional<bool>& success) -> std::string {
      if (!success) return "n/a";
      return *success ? "vulnerable" : "resist";
    };
    row.relay = verdict(t.relay_success);
    row.fake_claim = verdict(t.fake_success);
    row.relay_twoway = t.relay_twoway_fanout
                           ? "fanout<=" + std::to_string(*t.relay_twoway_fanout)
                           : "n/a";
    if (t.tek_exact) {
      row.linkability = "vulnerable(full day)";
    } else if (t.max_track) {
      row.linkability = (*t.max_track <= 900 ? "resist(" : "vulnerable(") +
                        std::to_string(*t.max_track) + "s)";
    } else {
      row.linkability = "n/a";
    }
    std::ostringstream lat;
    lat << "first=" << (t.first_level ? std::to_string(*t.first_level) + "d" : "n/a")
        << " second=" << (t.second_level ? std::to_string(*t.second_level) + "d" : "n/a");
    row.latency = lat.str();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_matrix(const std::vector<MatrixRow>& rows) {
  std::ostringstream out;
  const auto line = [&](const std::string& a, const std::string& b, const std::string& c,
                        const std::string& d, const std::string& e, const std::string& f) {
    out << std::left << std::setw(15) << a << std::setw(12) << b << std::setw(14) << c
        << std::setw(12) << d << std::setw(22) << e << f << "\n";
  };
  line("scheme", "relay", "relay_twoway", "fake_claim", "linkability", "latency");
  for (const auto& r : rows) {
    line(r.scheme, r.relay, r.relay_twoway, r.fake_claim, r.linkability, r.latency);
  }
  return out.str();
}

std::string render_payload_table(const std::vector<ScenarioReport>& reports) {
  std::ostringstream out;
  if (reports.empty()) return "";
  const PayloadEstimate& p = reports.front().payload_reference;
  out << "records per upload       " << p.records_per_upload << "\n"
      << "hash bits per upload     " << p.hash_bits_per_upload << "\n"
      << "hash bytes per upload    " << p.hash_bytes_per_upload << "\n"
      << "wire bytes per upload    " << p.wire_bytes_per_upload << "\n"
      << "daily feed hash bytes    " << p.daily_feed_hash_bytes << "\n"
      << "daily feed wire bytes    " << p.daily_feed_wire_bytes << "\n"
      << std::fixed << std::setprecision(1)
      << "daily feed (MB, nominal) " << p.daily_feed_hash_megabytes << "\n"
      << "daily feed (MB, quoted)  " << p.reference_daily_megabytes << "\n"
      << "note: " << p.note << "\n\n";

  std::vector<const ScenarioReport*> sorted;
  for (const auto& r : reports) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return std::tie(a->scheme, a->scenario) < std::tie(b->scheme, b->scenario);
  });
  out << std::left << std::setw(15) << "scheme" << std::setw(26) << "scenario" << std::setw(12)
      << "uploaded" << std::setw(12) << "downloaded" << "messages\n";
  for (const auto* r : sorted) {
    out << std::setw(15) << r->scheme << std::setw(26) << r->scenario << std::setw(12)
        << r->payload.bytes_uploaded << std::setw(12) << r->payload.bytes_downloaded
        << r->payload.messages << "\n";
  }
  return out.str();
}

}  // namespace tc::cli
