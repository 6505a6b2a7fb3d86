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

#include "tracecorona/wire.hpp"

namespace tc {

namespace {

// Upper bound on any count field; rejects absurd lengths before allocating.
constexpr std::uint64_t kMaxCount = 1u << 24;

template <typename F>
auto decode_whole(ByteView wire, F&& body) {
  try {
    ByteReader in(wire);
    auto value = body(in);
    if (!in.done()) throw WireError("trailing bytes in message");
    return value;
  } catch (const std::out_of_range& e) {
    throw WireError(e.what());
  }
}

std::uint64_t read_count(ByteReader& in, std::size_t width) {
  const std::uint64_t n = in.read_be(width);
  if (n > kMaxCount) throw WireError("count field too large");
  return n;
}

}  // namespace

std::string_view to_string(RecordTag tag) {
  switch (tag) {
    case RecordTag::direct:
      return "direct";
    case RecordTag::second_level:
      return "second_level";
    case RecordTag::possible_superspreader:
      return "possible_superspreader";
  }
  return "unknown";
}

std::string_view to_string(UploadStatus status) {
  switch (status) {
    case UploadStatus::accepted:
      return "accepted";
    case UploadStatus::invalid_tan:
      return "invalid_tan";
    case UploadStatus::malformed_record:
      return "malformed_record";
    case UploadStatus::no_matching_infected_token:
      return "no_matching_infected_token";
    case UploadStatus::insufficient_valid_proofs:
      return "insufficient_valid_proofs";
  }
  return "unknown";
}

std::size_t encoded_size(const TokenUploadRecord& record) {
  return kTokenHashSize + 4 + record.ciphertext.size() + 1;
}

void encode_record(Bytes& out, const TokenUploadRecord& record) {
  append(out, record.hash);
  put_be(out, record.ciphertext.size(), 4);
  append(out, record.ciphertext);
  out.push_back(static_cast<std::uint8_t>(record.tag));
}

TokenUploadRecord decode_record(ByteReader& in) {
  TokenUploadRecord r;
  r.hash = in.read_array<kTokenHashSize>();
  const std::uint64_t len = read_count(in, 4);
  const ByteView ct = in.read(len);
  r.ciphertext.assign(ct.begin(), ct.end());
  const std::uint8_t tag = static_cast<std::uint8_t>(in.read_be(1));
  if (tag > static_cast<std::uint8_t>(RecordTag::possible_superspreader)) {
    throw WireError("unknown record tag");
  }
  r.tag = static_cast<RecordTag>(tag);
  return r;
}

void encode_records(Bytes& out, const std::vector<TokenUploadRecord>& records) {
  put_be(out, records.size(), 4);
  for (const auto& r : records) encode_record(out, r);
}

std::vector<TokenUploadRecord> decode_records(ByteReader& in) {
  const std::uint64_t n = read_count(in, 4);
  std::vector<TokenUploadRecord> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(decode_record(in));
  return out;
}

Bytes encode(const InfectedUploadRequest& m) {
  Bytes out;
  put_be(out, m.tan.size(), 2);
  out.insert(out.end(), m.tan.begin(), m.tan.end());
  encode_records(out, m.records);
  return out;
}

Bytes encode(const SecondLevelUploadRequest& m) {
  Bytes out(m.proof.begin(), m.proof.end());
  encode_records(out, m.records);
  return out;
}

Bytes encode(const SuperspreaderUploadRequest& m) {
  Bytes out;
  put_be(out, m.proofs.size(), 4);
  for (const auto& p : m.proofs) append(out, p);
  encode_records(out, m.records);
  return out;
}

Bytes encode(const PublishedFeed& m) {
  Bytes out;
  put_be(out, static_cast<std::uint64_t>(m.feed_epoch), 8);
  encode_records(out, m.records);
  return out;
}

Bytes encode(const UploadResult& m) {
  return Bytes{static_cast<std::uint8_t>(m.status)};
}

Bytes encode_feed_request(std::int64_t since_epoch) {
  Bytes out;
  put_be(out, static_cast<std::uint64_t>(since_epoch), 8);
  return out;
}

InfectedUploadRequest decode_infected(ByteView wire) {
  return decode_whole(wire, [](ByteReader& in) {
    InfectedUploadRequest m;
    const ByteView tan = in.read(in.read_be(2));
    m.tan.assign(tan.begin(), tan.end());
    m.records = decode_records(in);
    return m;
  });
}

SecondLevelUploadRequest decode_second_level(ByteView wire) {
  return decode_whole(wire, [](ByteReader& in) {
    SecondLevelUploadRequest m;
    m.proof = in.read_array<kTokenSecretSize>();
    m.records = decode_records(in);
    return m;
  });
}

SuperspreaderUploadRequest decode_superspreader(ByteView wire) {
  return decode_whole(wire, [](ByteReader& in) {
    SuperspreaderUploadRequest m;
    const std::uint64_t n = read_count(in, 4);
    for (std::uint64_t i = 0; i < n; ++i) {
      m.proofs.push_back(in.read_array<kTokenSecretSize>());
    }
    m.records = decode_records(in);
    return m;
  });
}

PublishedFeed decode_feed(ByteView wire) {
  return decode_whole(wire, [](ByteReader& in) {
    PublishedFeed m;
    m.feed_epoch = static_cast<std::int64_t>(in.read_be(8));
    m.records = decode_records(in);
    return m;
  });
}

UploadResult decode_upload_result(ByteView wire) {
  return decode_whole(wire, [](ByteReader& in) {
    const std::uint8_t s = static_cast<std::uint8_t>(in.read_be(1));
    if (s > static_cast<std::uint8_t>(UploadStatus::insufficient_valid_proofs)) {
      throw WireError("unknown upload status");
    }
    return UploadResult{static_cast<UploadStatus>(s)};
  });
}

std::int64_t decode_feed_request(ByteView wire) {
  return decode_whole(wire, [](ByteReader& in) {
    return static_cast<std::int64_t>(in.read_be(8));
  });
}

}  // namespace tc
