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

#include "tracecorona/rng.hpp"

#include <openssl/sha.h>

#include <limits>

namespace tc {

SeededRng SeededRng::substream(std::string_view name) const {
  Bytes material;
  put_be(material, seed_, 8);
  material.insert(material.end(), name.begin(), name.end());
  std::uint8_t digest[SHA256_DIGEST_LENGTH];
  SHA256(material.data(), material.size(), digest);
  return SeededRng(get_be(ByteView(digest, 8), 8));
}

std::uint64_t SeededRng::uniform(std::uint64_t bound) {
  if (bound == 0) {
    throw std::invalid_argument("uniform: bound must be positive");
  }
  // Rejection sampling over the largest multiple of bound.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      (std::numeric_limits<std::uint64_t>::max() % bound + 1) % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x > limit);
  return x % bound;
}

double SeededRng::unit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

void SeededRng::fill(std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t x = engine_();
    for (int k = 0; k < 8 && i < out.size(); ++k, ++i) {
      out[i] = static_cast<std::uint8_t>(x);
      x >>= 8;
    }
  }
}

}  // namespace tc
