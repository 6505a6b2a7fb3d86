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

#include "tracecorona/health_authority.hpp"

#include <sstream>

namespace tc {

namespace {
constexpr char kBase32[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567";
}  // namespace

HealthAuthority::HealthAuthority(HealthAuthorityOptions options)
    : options_(options), rng_(SeededRng(options.seed).substream("ha/tan")) {}

Tan HealthAuthority::issue_tan(std::string_view user_context, UnixSeconds now) {
  std::lock_guard lock(mu_);
  std::string value(Tan::kLength, '\0');
  do {
    for (char& c : value) c = kBase32[rng_.uniform(32)];
  } while (issued_.contains(value));
  Tan tan{value, now, false};
  issued_.emplace(value, Entry{tan, std::string(user_context)});
  return tan;
}

TanVerdict HealthAuthority::verify_tan(std::string_view value,
                                       std::optional<UnixSeconds> now) {
  std::lock_guard lock(mu_);
  auto it = issued_.find(value);
  if (it == issued_.end() || it->second.tan.consumed) return TanVerdict::rejected;
  if (options_.tan_expiry && now &&
      *now - it->second.tan.issued_at > *options_.tan_expiry) {
    return TanVerdict::rejected;
  }
  it->second.tan.consumed = true;
  return TanVerdict::accepted;
}

std::size_t HealthAuthority::issued_count() const {
  std::lock_guard lock(mu_);
  return issued_.size();
}

std::string HealthAuthority::dump_state() const {
  std::lock_guard lock(mu_);
  std::ostringstream out;
  for (const auto& [value, entry] : issued_) {
    out << value << ' ' << entry.tan.issued_at << ' '
        << (entry.tan.consumed ? 1 : 0) << ' ' << entry.user_context << '\n';
  }
  return out.str();
}

}  // namespace tc
