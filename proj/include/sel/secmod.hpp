/*
 * Copyright 2026 the sellog authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <span>
#include <string_view>

#include "sel/lmu_format.hpp"
#include "sel/record.hpp"
#include "sel/rng.hpp"

namespace sel {

// Security bridge between controller and memory unit: record sealing, key
// derivation and wrapping, the block integrity chain, and the symmetric
// challenge/response used to authenticate a source verification device.
// Everything here is a stateless function over value inputs; random sources
// are always passed in explicitly.

/// Per-pack root secret, bound to one (lmu_id, svd_id) pair at provisioning.
/// Never stored in the image in plaintext.
struct MasterSecret {
    Key32 secret{};

    bool operator==(const MasterSecret&) const = default;
};

/// One session's working keys. dek is generated fresh per image; the rest
/// are derived from the master secret:
///   kek = KDF(master, "lmu-kek",  lmu_id)
///   ik  = KDF(master, "log-chain", lmu_id)
///   ak  = KDF(master, "svd-auth",  svd_id)
struct SessionKeys {
    Key32 dek{};
    Key32 kek{};
    Key32 ik{};
    Key32 ak{};
};

struct Challenge {
    std::array<uint8_t, 16> nonce{};
};

struct AuthResponse {
    Digest32 mac{};
};

/// Contents of a .svd credential file. Plaintext here stands in for a secure
/// element; the file format is fixed: "SVD1" | svd_id | lmu_id | master.
struct SvdCredential {
    Id16 svd_id{};
    Id16 lmu_id{};
    MasterSecret master;

    bool operator==(const SvdCredential&) const = default;
};

inline constexpr std::array<uint8_t, 4> kSvdMagic = {'S', 'V', 'D', '1'};
inline constexpr size_t kSvdFileSize = 4 + 16 + 16 + 32;

Bytes encode_svd(const SvdCredential& cred);
SvdCredential parse_svd(ConstBytes data);

/// HKDF-SHA-256 with empty salt and label || context as the info input.
/// Labels are 1..16 bytes.
Key32 kdf_derive(const MasterSecret& master, std::string_view label, ConstBytes context);

/// Derives kek/ik/ak for a unit; dek is taken as given.
SessionKeys derive_session_keys(const MasterSecret& master, const Id16& lmu_id,
                                const Id16& svd_id, const Key32& dek);

/// Seals one record into a block. The nonce is 4 zero bytes followed by the
/// little-endian seq — unique within an image because seq never repeats and
/// the dek is per-image. AAD is header_digest || seq, so a block cannot be
/// replayed into a different unit or slot.
EncryptedBlock encrypt_record(const SessionKeys& keys, const Digest32& hd, uint64_t seq,
                              const LogRecord& record, uint32_t record_payload_max);

/// Inverse of encrypt_record. Throws AuthError on any tag/aad/key mismatch
/// and MalformedRecord when the plaintext fails record parsing.
LogRecord decrypt_record(const Key32& dek, const Digest32& hd, const EncryptedBlock& block);

/// Chain genesis binds the header so identity fields cannot be swapped
/// without detection.
Digest32 chain_genesis(const Key32& ik, const Digest32& hd);

/// One chain step: MAC(ik, chain || seq || tag).
Digest32 chain_extend(const Key32& ik, const Digest32& chain, const EncryptedBlock& block);

/// Folds the chain over blocks [0, n) starting from genesis.
Digest32 chain_over(const Key32& ik, const Digest32& hd, std::span<const EncryptedBlock> blocks);

KeySection wrap_dek(const Key32& kek, const Key32& dek, const Digest32& hd, Rng& rng);

/// Throws AuthError when the section was never written, was tampered with,
/// or the kek (hence master) is wrong.
Key32 unwrap_dek(const Key32& kek, const KeySection& section, const Digest32& hd);

Challenge new_challenge(Rng& rng);

AuthResponse svd_respond(const SvdCredential& cred, const Challenge& ch, const Digest32& hd);

/// Constant-time check of mac == MAC(ak, challenge || svd_id || header_digest).
bool verify_response(const Key32& ak, const Challenge& ch, const AuthResponse& resp,
                     const Id16& svd_id, const Digest32& hd);

} // namespace sel
