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

#include "sel/crypto.hpp"

#include <memory>

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

namespace sel::crypto {

namespace {

struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

// Per-thread contexts with a cached key schedule. Blocks of one image share
// a key, so re-running the AES key expansion for every short record would
// dominate the kernel; a full re-init happens only when the key changes.
struct DirectionCtx {
    CipherCtx ctx{EVP_CIPHER_CTX_new()};
    Key32 key{};
    bool ready = false;
};

EVP_CIPHER_CTX* init_direction(DirectionCtx& d, const Key32& key, const Nonce12& nonce,
                               bool encrypt) {
    if (!d.ctx) return nullptr;
    int rc;
    if (!d.ready || d.key != key) {
        rc = encrypt ? EVP_EncryptInit_ex(d.ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(),
                                          nonce.data())
                     : EVP_DecryptInit_ex(d.ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(),
                                          nonce.data());
        d.key = key;
        d.ready = rc == 1;
    } else {
        rc = encrypt ? EVP_EncryptInit_ex(d.ctx.get(), nullptr, nullptr, nullptr, nonce.data())
                     : EVP_DecryptInit_ex(d.ctx.get(), nullptr, nullptr, nullptr, nonce.data());
        if (rc != 1) d.ready = false;
    }
    return rc == 1 ? d.ctx.get() : nullptr;
}

EVP_CIPHER_CTX* seal_ctx(const Key32& key, const Nonce12& nonce) {
    thread_local DirectionCtx enc;
    return init_direction(enc, key, nonce, true);
}

EVP_CIPHER_CTX* open_ctx(const Key32& key, const Nonce12& nonce) {
    thread_local DirectionCtx dec;
    return init_direction(dec, key, nonce, false);
}

} // namespace

Digest32 sha256(ConstBytes data) {
    Digest32 out{};
    SHA256(data.data(), data.size(), out.data());
    return out;
}

Digest32 hmac_sha256(ConstBytes key, ConstBytes data) {
    Digest32 out{};
    unsigned int len = 0;
    if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
             out.data(), &len) == nullptr ||
        len != out.size()) {
        throw SelError(Errc::IoError, "HMAC failed");
    }
    return out;
}

Digest32 hkdf_extract(ConstBytes salt, ConstBytes ikm) {
    Digest32 zero_salt{};
    ConstBytes effective = salt.empty() ? ConstBytes(zero_salt) : salt;
    return hmac_sha256(effective, ikm);
}

Bytes hkdf_expand(const Digest32& prk, ConstBytes info, size_t out_len) {
    if (out_len > 255 * 32) throw SelError(Errc::BadParams, "hkdf output too long");
    Bytes okm;
    okm.reserve(out_len);
    Bytes block;
    uint8_t counter = 1;
    while (okm.size() < out_len) {
        Bytes input;
        input.reserve(block.size() + info.size() + 1);
        input.insert(input.end(), block.begin(), block.end());
        input.insert(input.end(), info.begin(), info.end());
        input.push_back(counter++);
        Digest32 t = hmac_sha256(prk, input);
        block.assign(t.begin(), t.end());
        size_t take = std::min(block.size(), out_len - okm.size());
        okm.insert(okm.end(), block.begin(), block.begin() + static_cast<ptrdiff_t>(take));
    }
    return okm;
}

Sealed aead_seal(const Key32& key, const Nonce12& nonce, ConstBytes aad, ConstBytes plaintext) {
    EVP_CIPHER_CTX* ctx = seal_ctx(key, nonce);
    if (ctx == nullptr) throw SelError(Errc::IoError, "gcm init failed");

    int len = 0;
    if (!aad.empty() &&
        EVP_EncryptUpdate(ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
        throw SelError(Errc::IoError, "gcm aad failed");

    Sealed out;
    out.ciphertext.resize(plaintext.size());
    if (!plaintext.empty() &&
        EVP_EncryptUpdate(ctx, out.ciphertext.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1)
        throw SelError(Errc::IoError, "gcm encrypt failed");

    if (EVP_EncryptFinal_ex(ctx, out.ciphertext.data() + out.ciphertext.size(), &len) != 1)
        throw SelError(Errc::IoError, "gcm final failed");
    if (EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, static_cast<int>(out.tag.size()),
                            out.tag.data()) != 1)
        throw SelError(Errc::IoError, "gcm tag failed");
    return out;
}

bool aead_open_into(const Key32& key, const Nonce12& nonce, ConstBytes aad, ConstBytes ciphertext,
                    const Tag16& tag, Bytes& out) noexcept {
    EVP_CIPHER_CTX* ctx = open_ctx(key, nonce);
    if (ctx == nullptr) return false;

    bool ok = false;
    int len = 0;
    do {
        if (!aad.empty() &&
            EVP_DecryptUpdate(ctx, nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
            break;
        out.resize(ciphertext.size());
        if (!ciphertext.empty() &&
            EVP_DecryptUpdate(ctx, out.data(), &len, ciphertext.data(),
                              static_cast<int>(ciphertext.size())) != 1)
            break;
        Tag16 tag_copy = tag;
        if (EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, static_cast<int>(tag_copy.size()),
                                tag_copy.data()) != 1)
            break;
        ok = EVP_DecryptFinal_ex(ctx, out.data() + out.size(), &len) == 1;
    } while (false);

    if (!ok) out.clear();
    return ok;
}

Bytes aead_open(const Key32& key, const Nonce12& nonce, ConstBytes aad, ConstBytes ciphertext,
                const Tag16& tag) {
    Bytes out;
    if (!aead_open_into(key, nonce, aad, ciphertext, tag, out))
        throw SelError(Errc::AuthError, "aead authentication failed");
    return out;
}

bool ct_equal(ConstBytes a, ConstBytes b) noexcept {
    if (a.size() != b.size()) return false;
    return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

} // namespace sel::crypto
