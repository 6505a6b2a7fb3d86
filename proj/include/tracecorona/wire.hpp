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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tracecorona/crypto.hpp"

// Binary message formats of the tracing-server API. All integers are
// big-endian.
//
//   record        = hash(16) || ct_len(4) || ciphertext(ct_len) || tag(1)
//   records       = count(4) || record*
//   infected      = tan_len(2) || tan || records
//   second-level  = proof(32) || records
//   superspreader = proof_count(4) || proof(32)* || records
//   feed request  = since_epoch(8)
//   feed          = feed_epoch(8) || records
//   upload reply  = status(1)
namespace tc {

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RecordTag : std::uint8_t {
  direct = 0,
  second_level = 1,
  possible_superspreader = 2,
};

std::string_view to_string(RecordTag tag);

struct TokenUploadRecord {
  TokenHash hash{};
  Bytes ciphertext;
  RecordTag tag = RecordTag::direct;

  bool operator==(const TokenUploadRecord&) const = default;
};

enum class UploadStatus : std::uint8_t {
  accepted = 0,
  invalid_tan = 1,
  malformed_record = 2,
  no_matching_infected_token = 3,
  insufficient_valid_proofs = 4,
};

std::string_view to_string(UploadStatus status);

struct UploadResult {
  UploadStatus status = UploadStatus::accepted;
  bool accepted() const { return status == UploadStatus::accepted; }
  bool operator==(const UploadResult&) const = default;
};

struct PublishedFeed {
  std::vector<TokenUploadRecord> records;
  std::int64_t feed_epoch = 0;

  bool operator==(const PublishedFeed&) const = default;
};

struct InfectedUploadRequest {
  std::string tan;
  std::vector<TokenUploadRecord> records;
  bool operator==(const InfectedUploadRequest&) const = default;
};

struct SecondLevelUploadRequest {
  TokenSecret proof{};
  std::vector<TokenUploadRecord> records;
  bool operator==(const SecondLevelUploadRequest&) const = default;
};

struct SuperspreaderUploadRequest {
  std::vector<TokenSecret> proofs;
  std::vector<TokenUploadRecord> records;
  bool operator==(const SuperspreaderUploadRequest&) const = default;
};

std::size_t encoded_size(const TokenUploadRecord& record);
void encode_record(Bytes& out, const TokenUploadRecord& record);
TokenUploadRecord decode_record(ByteReader& in);

void encode_records(Bytes& out, const std::vector<TokenUploadRecord>& records);
std::vector<TokenUploadRecord> decode_records(ByteReader& in);

Bytes encode(const InfectedUploadRequest& m);
Bytes encode(const SecondLevelUploadRequest& m);
Bytes encode(const SuperspreaderUploadRequest& m);
Bytes encode(const PublishedFeed& m);
Bytes encode(const UploadResult& m);
Bytes encode_feed_request(std::int64_t since_epoch);

// Decoders throw WireError on truncation, trailing bytes, or bad enums.
InfectedUploadRequest decode_infected(ByteView wire);
SecondLevelUploadRequest decode_second_level(ByteView wire);
SuperspreaderUploadRequest decode_superspreader(ByteView wire);
PublishedFeed decode_feed(ByteView wire);
UploadResult decode_upload_result(ByteView wire);
std::int64_t decode_feed_request(ByteView wire);

}  // namespace tc
