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

#include "tracecorona/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/kdf.h>
#include <openssl/obj_mac.h>
#include <openssl/sha.h>

#include <algorithm>
#include <memory>

namespace tc {

namespace {

struct BnDeleter {
  void operator()(BIGNUM* p) const { BN_clear_free(p); }
};
struct BnCtxDeleter {
  void operator()(BN_CTX* p) const { BN_CTX_free(p); }
};
struct PointDeleter {
  void operator()(EC_POINT* p) const { EC_POINT_clear_free(p); }
};
struct GroupDeleter {
  void operator()(EC_GROUP* p) const { EC_GROUP_free(p); }
};
struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
struct PkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};

using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;
using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxDeleter>;
using PointPtr = std::unique_ptr<EC_POINT, PointDeleter>;

const EC_GROUP* p384() {
  static const std::unique_ptr<EC_GROUP, GroupDeleter> group(
      EC_GROUP_new_by_curve_name(NID_secp384r1));
  return group.get();
}

void check(int ok, const char* what) {
  if (ok != 1) throw std::runtime_error(what);
}

BnPtr to_bn(ByteView bytes) {
  BnPtr bn(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
  if (!bn) throw std::bad_alloc();
  return bn;
}

template <std::size_t N>
ByteArray<N> from_bn(const BIGNUM* bn) {
  ByteArray<N> out{};
  check(BN_bn2binpad(bn, out.data(), static_cast<int>(N)) == static_cast<int>(N)
            ? 1
            : 0,
        "BN_bn2binpad");
  return out;
}

ByteArray<kPublicKeySize> x_coordinate(const EC_POINT* point, BN_CTX* ctx) {
  BnPtr x(BN_new());
  check(EC_POINT_get_affine_coordinates(p384(), point, x.get(), nullptr, ctx),
        "EC_POINT_get_affine_coordinates");
  return from_bn<kPublicKeySize>(x.get());
}

PointPtr decode_point(const PublicKey& public_key, BN_CTX* ctx) {
  if (std::all_of(public_key.begin(), public_key.end(),
                  [](std::uint8_t b) { return b == 0; })) {
    throw InvalidPoint("public key is the identity encoding");
  }
  // Compressed SEC1 encoding with even y.
  std::uint8_t sec1[1 + kPublicKeySize];
  sec1[0] = 0x02;
  std::copy(public_key.begin(), public_key.end(), sec1 + 1);
  PointPtr point(EC_POINT_new(p384()));
  if (EC_POINT_oct2point(p384(), point.get(), sec1, sizeof sec1, ctx) != 1 ||
      EC_POINT_is_at_infinity(p384(), point.get()) ||
      EC_POINT_is_on_curve(p384(), point.get(), ctx) != 1) {
    throw InvalidPoint("public key is not a point on P-384");
  }
  return point;
}

Bytes label_then(std::string_view label, ByteView data) {
  Bytes out(label.begin(), label.end());
  append(out, data);
  return out;
}

ByteView as_bytes(std::string_view s) {
  return ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

template <std::size_t N>
ByteArray<N> hkdf_array(ByteView ikm, ByteView info) {
  const Bytes okm = hkdf_sha256(ikm, {}, info, N);
  ByteArray<N> out{};
  std::copy(okm.begin(), okm.end(), out.begin());
  return out;
}

}  // namespace

void TimeFramePolicy::validate() const {
  if (frame_period <= 0) {
    throw std::invalid_argument("frame_period must be positive");
  }
  if (epsilon <= 0 || epsilon >= frame_period) {
    throw std::invalid_argument("epsilon must lie in (0, frame_period)");
  }
  if (min_encounter_duration < 0 || min_encounter_duration > frame_period) {
    throw std::invalid_argument(
        "min_encounter_duration must lie in [0, frame_period]");
  }
}

FrameIndex TimeFramePolicy::frame_of(UnixSeconds t) const {
  // floor division; local clocks may be negative near the epoch
  FrameIndex l = t / frame_period;
  if (t % frame_period != 0 && t < 0) --l;
  return l;
}

ByteArray<32> sha256(ByteView data) {
  ByteArray<32> out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

Bytes hkdf_sha256(ByteView ikm, ByteView salt, ByteView info,
                  std::size_t length) {
  std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter> ctx(
      EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
  if (!ctx) throw std::bad_alloc();
  check(EVP_PKEY_derive_init(ctx.get()), "HKDF init");
  check(EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()), "HKDF md");
  check(EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), ikm.data(),
                                   static_cast<int>(ikm.size())),
        "HKDF key");
  if (!salt.empty()) {
    check(EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), salt.data(),
                                      static_cast<int>(salt.size())),
          "HKDF salt");
  }
  if (!info.empty()) {
    check(EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), info.data(),
                                      static_cast<int>(info.size())),
          "HKDF info");
  }
  Bytes out(length);
  std::size_t len = length;
  check(EVP_PKEY_derive(ctx.get(), out.data(), &len), "HKDF derive");
  return out;
}

FrameKeyPair generate_frame_keypair(FrameIndex frame_index, SeededRng& rng) {
  if (frame_index < 0) {
    throw std::invalid_argument("frame_index must be non-negative");
  }
  const auto entropy = rng.bytes<kPrivateKeySize>();
  Bytes info(kLabelFrame.begin(), kLabelFrame.end());
  put_be(info, static_cast<std::uint64_t>(frame_index), 8);
  // 64 bytes reduced modulo n-1 keeps the bias below 2^-128.
  const Bytes wide = hkdf_sha256(entropy, {}, info, 64);

  BnCtxPtr ctx(BN_CTX_new());
  BnPtr order_minus_one(BN_dup(EC_GROUP_get0_order(p384())));
  check(BN_sub_word(order_minus_one.get(), 1), "BN_sub_word");
  BnPtr d = to_bn(wide);
  check(BN_nnmod(d.get(), d.get(), order_minus_one.get(), ctx.get()),
        "BN_nnmod");
  check(BN_add_word(d.get(), 1), "BN_add_word");

  FrameKeyPair kp;
  kp.frame_index = frame_index;
  kp.private_key = from_bn<kPrivateKeySize>(d.get());
  kp.public_key = public_key_from_private(kp.private_key);
  return kp;
}

PublicKey public_key_from_private(const PrivateKey& private_key) {
  BnCtxPtr ctx(BN_CTX_new());
  BnPtr d = to_bn(private_key);
  if (BN_is_zero(d.get()) ||
      BN_cmp(d.get(), EC_GROUP_get0_order(p384())) >= 0) {
    throw std::invalid_argument("private scalar out of range");
  }
  PointPtr q(EC_POINT_new(p384()));
  check(EC_POINT_mul(p384(), q.get(), d.get(), nullptr, nullptr, ctx.get()),
        "EC_POINT_mul");
  return x_coordinate(q.get(), ctx.get());
}

void validate_public_key(const PublicKey& public_key) {
  BnCtxPtr ctx(BN_CTX_new());
  decode_point(public_key, ctx.get());
}

TokenSecret derive_token(const PrivateKey& own_private,
                         const PublicKey& peer_public) {
  BnCtxPtr ctx(BN_CTX_new());
  PointPtr peer = decode_point(peer_public, ctx.get());
  BnPtr d = to_bn(own_private);
  PointPtr shared(EC_POINT_new(p384()));
  check(EC_POINT_mul(p384(), shared.get(), nullptr, peer.get(), d.get(),
                     ctx.get()),
        "EC_POINT_mul");
  if (EC_POINT_is_at_infinity(p384(), shared.get())) {
    throw InvalidPoint("shared point is the identity");
  }
  const auto x = x_coordinate(shared.get(), ctx.get());
  return hkdf_array<kTokenSecretSize>(x, as_bytes(kLabelToken));
}

TokenHash token_hash(const TokenSecret& secret) {
  const auto digest = sha256(label_then(kLabelHash, secret));
  TokenHash out{};
  std::copy_n(digest.begin(), kTokenHashSize, out.begin());
  return out;
}

ByteArray<32> derive_metadata_key(const TokenSecret& secret) {
  return hkdf_array<32>(secret, as_bytes(kLabelMeta));
}

Bytes encrypt_metadata(const TokenSecret& secret, UnixSeconds start_time) {
  Bytes plaintext;
  put_be(plaintext, static_cast<std::uint64_t>(start_time), 8);

  const auto key = derive_metadata_key(secret);
  const auto nonce_key = hkdf_array<32>(secret, as_bytes(kLabelMetaNonce));
  std::uint8_t mac[EVP_MAX_MD_SIZE];
  unsigned int mac_len = 0;
  HMAC(EVP_sha256(), nonce_key.data(), static_cast<int>(nonce_key.size()),
       plaintext.data(), plaintext.size(), mac, &mac_len);

  Bytes out(mac, mac + kMetadataNonceSize);
  std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
  check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr,
                           nullptr),
        "GCM init");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                            kMetadataNonceSize, nullptr),
        "GCM ivlen");
  check(EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), out.data()),
        "GCM key");
  out.resize(kMetadataNonceSize + plaintext.size() + kMetadataTagSize);
  int len = 0;
  check(EVP_EncryptUpdate(ctx.get(), out.data() + kMetadataNonceSize, &len,
                          plaintext.data(), static_cast<int>(plaintext.size())),
        "GCM update");
  int final_len = 0;
  check(EVP_EncryptFinal_ex(ctx.get(), out.data() + kMetadataNonceSize + len,
                            &final_len),
        "GCM final");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kMetadataTagSize,
                            out.data() + kMetadataNonceSize + plaintext.size()),
        "GCM tag");
  return out;
}

std::optional<UnixSeconds> try_decrypt_metadata(const TokenSecret& secret,
                                                ByteView ciphertext) {
  if (ciphertext.size() != kMetadataCiphertextSize) return std::nullopt;
  const auto key = derive_metadata_key(secret);
  const ByteView nonce = ciphertext.first(kMetadataNonceSize);
  const ByteView body = ciphertext.subspan(kMetadataNonceSize, 8);
  ByteArray<kMetadataTagSize> tag{};
  std::copy_n(ciphertext.begin() + kMetadataNonceSize + 8, kMetadataTagSize,
              tag.begin());

  std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
  check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr,
                           nullptr),
        "GCM init");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN,
                            kMetadataNonceSize, nullptr),
        "GCM ivlen");
  check(EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(),
                           nonce.data()),
        "GCM key");
  std::uint8_t plain[8 + 16];
  int len = 0;
  check(EVP_DecryptUpdate(ctx.get(), plain, &len, body.data(),
                          static_cast<int>(body.size())),
        "GCM update");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kMetadataTagSize,
                            tag.data()),
        "GCM set tag");
  int final_len = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), plain + len, &final_len) != 1) {
    return std::nullopt;
  }
  return static_cast<UnixSeconds>(get_be(ByteView(plain, 8), 8));
}

UnixSeconds decrypt_metadata(const TokenSecret& secret, ByteView ciphertext) {
  if (auto t = try_decrypt_metadata(secret, ciphertext)) return *t;
  throw AuthenticationFailure("metadata authentication failed");
}

TempId derive_tempid_centralized(ByteView user_id, std::uint32_t t_k) {
  const std::string_view label = "tc-tempid-central";
  Bytes info(label.begin(), label.end());
  put_be(info, t_k, 4);
  return hkdf_array<kTempIdSize>(user_id, info);
}

TempId derive_tempid_bluetrace(ByteView user_id, std::uint32_t t_k,
                               const ByteArray<16>& iv, ByteView auth_tag,
                               const ByteArray<32>& master_key) {
  const std::string_view label = "tc-tempid-bluetrace";
  Bytes info(label.begin(), label.end());
  append(info, user_id);
  put_be(info, t_k, 4);
  append(info, iv);
  append(info, auth_tag);
  return hkdf_array<kTempIdSize>(master_key, info);
}

TempId derive_tempid_decentralized(const Tek& tek, std::int64_t day, int slot) {
  if (slot < 0 || slot >= kDecentralizedSlotsPerDay) {
    throw std::invalid_argument("slot out of range");
  }
  const std::string_view label = "tc-rpi";
  Bytes info(label.begin(), label.end());
  // interval number since the epoch, as in GAEN's ENIntervalNumber
  put_be(info,
         static_cast<std::uint64_t>(day * kDecentralizedSlotsPerDay + slot), 4);
  return hkdf_array<kTempIdSize>(tek, info);
}

std::vector<TempId> derive_tempids_decentralized(const Tek& tek,
                                                 std::int64_t day) {
  std::vector<TempId> out;
  out.reserve(kDecentralizedSlotsPerDay);
  for (int slot = 0; slot < kDecentralizedSlotsPerDay; ++slot) {
    out.push_back(derive_tempid_decentralized(tek, day, slot));
  }
  return out;
}

}  // namespace tc
