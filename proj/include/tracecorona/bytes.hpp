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

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tc {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Simulated and device-local wall clock, in unix seconds.
using UnixSeconds = std::int64_t;
using Seconds = std::int64_t;
using Dbm = int;

constexpr Seconds kSecondsPerDay = 86400;

template <std::size_t N>
using ByteArray = std::array<std::uint8_t, N>;

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

template <std::size_t N>
ByteArray<N> array_from_hex(std::string_view hex) {
  const Bytes raw = from_hex(hex);
  if (raw.size() != N) {
    throw std::invalid_argument("hex string has wrong length");
  }
  ByteArray<N> out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

std::string to_base64(ByteView bytes);
Bytes from_base64(std::string_view text);

// Big-endian integer encoding used by every wire format in the project.
void put_be(Bytes& out, std::uint64_t value, std::size_t width);
std::uint64_t get_be(ByteView in, std::size_t width);

// Hasher for fixed-size byte arrays that are already uniformly random
// (hashes, identifiers): the first eight bytes are used directly.
struct ByteArrayHash {
  template <std::size_t N>
  std::size_t operator()(const ByteArray<N>& a) const {
    std::size_t h = 0;
    for (std::size_t i = 0; i < N && i < sizeof(std::size_t); ++i) {
      h = (h << 8) | a[i];
    }
    return h;
  }
};

inline void append(Bytes& out, ByteView bytes) {
  out.insert(out.end(), bytes.begin(), bytes.end());
}

// Sequential reader over a byte buffer; throws std::out_of_range on
// underflow so wire decoders can treat truncation uniformly.
class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::uint64_t read_be(std::size_t width);
  ByteView read(std::size_t n);

  template <std::size_t N>
  ByteArray<N> read_array() {
    const ByteView v = read(N);
    ByteArray<N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return remaining() == 0; }

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace tc
