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

// Test-only second implementation of the primitives used by the crypto
// module: affine P-384 arithmetic on Boost.Multiprecision integers and
// RFC 5869 HKDF assembled from raw HMAC. Nothing here calls the library's
// EC or HKDF code paths.

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string_view>

#include "tracecorona/bytes.hpp"

namespace tc::oracle {

using boost::multiprecision::cpp_int;

struct Point {
  cpp_int x;
  cpp_int y;
  bool infinity = false;
};

struct P384 {
  cpp_int p{"0xfffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffeffffffff0000000000000000ffffffff"};
  cpp_int b{"0xb3312fa7e23ee7e4988e056be3f82d19181d9c6efe8141120314088f5013875ac656398d8a2ed19d2a85c8edd3ec2aef"};
  cpp_int n{"0xffffffffffffffffffffffffffffffffffffffffffffffffc7634d81f4372ddf581a0db248b0a77aecec196accc52973"};
  Point g{cpp_int{"0xaa87ca22be8b05378eb1c71ef320ad746e1d3b628ba79b9859f741e082542a385502f25dbf55296c3a545e3872760ab7"},
          cpp_int{"0x3617de4a96262c6f5d9e98bf9292dc29f8f41dbd289a147ce9da3113b5f0b8c00a60b1ce1d7e819d7a431d7c90ea0e5f"},
          false};

  cpp_int mod(const cpp_int& v) const {
    cpp_int r = v % p;
    return r < 0 ? r + p : r;
  }
  cpp_int inv(const cpp_int& v) const {
    return boost::multiprecision::powm(mod(v), p - 2, p);
  }

  bool on_curve(const Point& q) const {
    if (q.infinity) return true;
    return mod(q.y * q.y) == mod(q.x * q.x * q.x - 3 * q.x + b);
  }

  Point add(const Point& a, const Point& c) const {
    if (a.infinity) return c;
    if (c.infinity) return a;
    cpp_int lambda;
    if (a.x == c.x) {
      if (mod(a.y + c.y) == 0) return Point{0, 0, true};
      lambda = mod((3 * a.x * a.x - 3) * inv(2 * a.y));
    } else {
      lambda = mod((c.y - a.y) * inv(c.x - a.x));
    }
    const cpp_int x3 = mod(lambda * lambda - a.x - c.x);
    const cpp_int y3 = mod(lambda * (a.x - x3) - a.y);
    return Point{x3, y3, false};
  }

  Point mul(cpp_int k, Point q) const {
    Point acc{0, 0, true};
    while (k > 0) {
      if ((k & 1) != 0) acc = add(acc, q);
      q = add(q, q);
      k >>= 1;
    }
    return acc;
  }

  // Lift an x-coordinate to the even-y point; nullopt when x is not on
  // the curve. p = 3 mod 4, so sqrt(v) = v^((p+1)/4).
  std::optional<Point> lift(const cpp_int& x) const {
    if (x >= p) return std::nullopt;
    const cpp_int rhs = mod(x * x * x - 3 * x + b);
    cpp_int y = boost::multiprecision::powm(rhs, (p + 1) / 4, p);
    if (mod(y * y) != rhs) return std::nullopt;
    if ((y & 1) != 0) y = p - y;
    return Point{x, y, false};
  }
};

inline cpp_int to_int(ByteView bytes) {
  cpp_int v = 0;
  for (std::uint8_t b : bytes) v = (v << 8) | b;
  return v;
}

inline Bytes to_bytes(cpp_int v, std::size_t width) {
  Bytes out(width);
  for (std::size_t i = width; i-- > 0;) {
    out[i] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
  return out;
}

inline Bytes hmac_sha256(ByteView key, ByteView data) {
  std::uint8_t mac[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(),
       data.size(), mac, &len);
  return Bytes(mac, mac + len);
}

// RFC 5869 extract-then-expand.
inline Bytes hkdf(ByteView ikm, ByteView salt, ByteView info,
                  std::size_t length) {
  const Bytes zero_salt(32, 0);
  const Bytes prk = hmac_sha256(salt.empty() ? ByteView(zero_salt) : salt, ikm);
  Bytes okm;
  Bytes t;
  for (std::uint8_t i = 1; okm.size() < length; ++i) {
    Bytes block = t;
    append(block, info);
    block.push_back(i);
    t = hmac_sha256(prk, block);
    append(okm, t);
  }
  okm.resize(length);
  return okm;
}

inline Bytes label(std::string_view s) { return Bytes(s.begin(), s.end()); }

// Encounter token the long way: x(d * lift(Q)) fed through HKDF("tc-token").
inline Bytes token_oracle(ByteView private_key, ByteView peer_public) {
  P384 curve;
  const auto q = curve.lift(to_int(peer_public));
  if (!q) return {};
  const Point shared = curve.mul(to_int(private_key), *q);
  return hkdf(to_bytes(shared.x, 48), {}, label("tc-token"), 32);
}

inline Bytes public_oracle(ByteView private_key) {
  P384 curve;
  return to_bytes(curve.mul(to_int(private_key), curve.g).x, 48);
}

}  // namespace tc::oracle
