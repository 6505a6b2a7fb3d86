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
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "tracecorona/rng.hpp"

namespace tc {

// Single-use transaction authentication number: 12 characters from the
// RFC 4648 base32 alphabet (60 bits), short enough to type in.
struct Tan {
  static constexpr std::size_t kLength = 12;

  std::string value;
  UnixSeconds issued_at = 0;
  bool consumed = false;
};

enum class TanVerdict { accepted, rejected };

struct HealthAuthorityOptions {
  std::uint64_t seed = 1;
  // No expiry unless set.
  std::optional<Seconds> tan_expiry;
};

// Issues TANs to users with a positive test and verifies them exactly once
// for the tracing server. Verification is an atomic check-and-consume.
class HealthAuthority {
 public:
  explicit HealthAuthority(HealthAuthorityOptions options = {});

  Tan issue_tan(std::string_view user_context, UnixSeconds now);

  // `now` only matters when an expiry is configured.
  TanVerdict verify_tan(std::string_view value,
                        std::optional<UnixSeconds> now = std::nullopt);

  std::size_t issued_count() const;
  // Textual dump of everything the authority stores.
  std::string dump_state() const;

 private:
  struct Entry {
    Tan tan;
    std::string user_context;
  };

  mutable std::mutex mu_;
  HealthAuthorityOptions options_;
  SeededRng rng_;
  std::map<std::string, Entry, std::less<>> issued_;
};

}  // namespace tc
