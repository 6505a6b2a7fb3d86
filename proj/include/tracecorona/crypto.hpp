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
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "tracecorona/bytes.hpp"
#include "tracecorona/rng.hpp"

// Cryptographic primitives for encounter tokens and baseline identifiers.
//
// Curve: NIST P-384. Public keys travel as the 48-byte big-endian affine
// x-coordinate; the receiver lifts x to the point with even y. ECDH only
// consumes the x-coordinate of the shared point, which is the same for
// either lift, so nothing is lost.
//
// Hash: SHA-256. KDF: HKDF-SHA256 (RFC 5869) with an empty salt.
// AEAD: AES-256-GCM with a synthetic nonce (see encrypt_metadata).
namespace tc {

constexpr std::size_t kPublicKeySize = 48;
constexpr std::size_t kPrivateKeySize = 48;
constexpr std::size_t kTokenSecretSize = 32;
constexpr std::size_t kTokenHashSize = 16;
constexpr std::size_t kTempIdSize = 16;
constexpr std::size_t kTekSize = 16;
constexpr std::size_t kMetadataNonceSize = 12;
constexpr std::size_t kMetadataTagSize = 16;
// nonce || 8-byte big-endian timestamp || GCM tag
constexpr std::size_t kMetadataCiphertextSize =
    kMetadataNonceSize + 8 + kMetadataTagSize;

using PublicKey = ByteArray<kPublicKeySize>;
using PrivateKey = ByteArray<kPrivateKeySize>;
using TokenSecret = ByteArray<kTokenSecretSize>;
using TokenHash = ByteArray<kTokenHashSize>;
using TempId = ByteArray<kTempIdSize>;
using Tek = ByteArray<kTekSize>;
using FrameIndex = std::int64_t;

// Domain-separation labels.
inline constexpr std::string_view kLabelHash = "tc-hash";
inline constexpr std::string_view kLabelMeta = "tc-meta";
inline constexpr std::string_view kLabelMetaNonce = "tc-meta-nonce";
inline constexpr std::string_view kLabelToken = "tc-token";
inline constexpr std::string_view kLabelFrame = "tc-frame";

class InvalidPoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AuthenticationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ephemeral ECDH keypair for one time frame. The private half has no
// serializer anywhere in the project.
struct FrameKeyPair {
  FrameIndex frame_index = 0;
  PrivateKey private_key{};
  PublicKey public_key{};
};

struct TimeFramePolicy {
  Seconds frame_period = 900;
  Seconds min_encounter_duration = 300;
  Seconds epsilon = 30;

  // Throws std::invalid_argument unless 0 < epsilon < frame_period and
  // min_encounter_duration <= frame_period.
  void validate() const;

  FrameIndex frame_of(UnixSeconds t) const;
  UnixSeconds frame_start(FrameIndex l) const { return l * frame_period; }
  UnixSeconds frame_end(FrameIndex l) const { return (l + 1) * frame_period; }
};

ByteArray<32> sha256(ByteView data);
Bytes hkdf_sha256(ByteView ikm, ByteView salt, ByteView info,
                  std::size_t length);

// Deterministic in (rng state, frame_index): 48 bytes are drawn from rng
// and expanded with the frame index before reduction into [1, n-1].
FrameKeyPair generate_frame_keypair(FrameIndex frame_index, SeededRng& rng);

// Throws std::invalid_argument when the scalar is zero or >= group order.
PublicKey public_key_from_private(const PrivateKey& private_key);

// Throws InvalidPoint for the all-zero (identity) encoding, x >= p, or an
// x with no point on the curve.
void validate_public_key(const PublicKey& public_key);

// HKDF("tc-token") over the x-coordinate of own_private * peer_public.
TokenSecret derive_token(const PrivateKey& own_private,
                         const PublicKey& peer_public);

// First 16 bytes of SHA-256("tc-hash" || secret).
TokenHash token_hash(const TokenSecret& secret);

ByteArray<32> derive_metadata_key(const TokenSecret& secret);

// AES-256-GCM over the 8-byte big-endian timestamp. The GCM key is
// HKDF(secret, "tc-meta"); the nonce is a synthetic IV,
// HMAC(HKDF(secret, "tc-meta-nonce"), plaintext)[0..12], so the output is
// a pure function of its inputs and distinct timestamps never share a
// nonce under one key.
Bytes encrypt_metadata(const TokenSecret& secret, UnixSeconds start_time);

// Throws AuthenticationFailure on a wrong key, tampering, or bad length.
UnixSeconds decrypt_metadata(const TokenSecret& secret, ByteView ciphertext);
std::optional<UnixSeconds> try_decrypt_metadata(const TokenSecret& secret,
                                                ByteView ciphertext);

// Centralized (PEPP-PT style) identifier: HKDF(user_id, t_k).
TempId derive_tempid_centralized(ByteView user_id, std::uint32_t t_k);

// BlueTrace-style identifier: HKDF keyed by the server master key over
// user_id || t_k || iv || auth_tag.
TempId derive_tempid_bluetrace(ByteView user_id, std::uint32_t t_k,
                               const ByteArray<16>& iv, ByteView auth_tag,
                               const ByteArray<32>& master_key);

constexpr int kDecentralizedSlotsPerDay = 144;
constexpr Seconds kDecentralizedSlotSeconds = 600;

// One rolling identifier per 10-minute slot of `day`.
TempId derive_tempid_decentralized(const Tek& tek, std::int64_t day, int slot);
std::vector<TempId> derive_tempids_decentralized(const Tek& tek,
                                                 std::int64_t day);

}  // namespace tc
