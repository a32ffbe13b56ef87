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

#include "sel/bytes.hpp"

namespace sel::crypto {

// Fixed primitive suite: AES-256-GCM (12-byte nonce, 16-byte tag), SHA-256,
// HMAC-SHA-256, and HKDF-SHA-256. The container format carries no algorithm
// agility; its version field gates any future change of suite.

Digest32 sha256(ConstBytes data);

Digest32 hmac_sha256(ConstBytes key, ConstBytes data);

/// HKDF-SHA-256 extract step. An empty salt behaves as a zero-filled
/// hash-length salt.
Digest32 hkdf_extract(ConstBytes salt, ConstBytes ikm);

/// HKDF-SHA-256 expand step; out_len <= 255 * 32.
Bytes hkdf_expand(const Digest32& prk, ConstBytes info, size_t out_len);

struct Sealed {
    Bytes ciphertext; // same length as the plaintext
    Tag16 tag;
};

/// AES-256-GCM encrypt. The caller guarantees nonce uniqueness per key.
Sealed aead_seal(const Key32& key, const Nonce12& nonce, ConstBytes aad, ConstBytes plaintext);

/// AES-256-GCM decrypt; throws SelError(AuthError) on any mismatch without
/// indicating which input failed.
Bytes aead_open(const Key32& key, const Nonce12& nonce, ConstBytes aad, ConstBytes ciphertext,
                const Tag16& tag);

/// Non-throwing variant for bulk verification loops. Returns false on
/// authentication failure; `out` is valid only on success.
bool aead_open_into(const Key32& key, const Nonce12& nonce, ConstBytes aad, ConstBytes ciphertext,
                    const Tag16& tag, Bytes& out) noexcept;

/// Constant-time equality.
bool ct_equal(ConstBytes a, ConstBytes b) noexcept;

} // namespace sel::crypto
