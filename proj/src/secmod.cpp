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

#include "sel/secmod.hpp"

#include "sel/crypto.hpp"

namespace sel {

namespace {

Nonce12 block_nonce(uint64_t seq) {
    Nonce12 nonce{};
    for (int i = 0; i < 8; ++i) nonce[4 + i] = static_cast<uint8_t>(seq >> (8 * i));
    return nonce;
}

Bytes block_aad(const Digest32& hd, uint64_t seq) {
    ByteWriter w;
    w.bytes(hd);
    w.u64(seq);
    return w.take();
}

} // namespace

Bytes encode_svd(const SvdCredential& cred) {
    ByteWriter w;
    w.bytes(kSvdMagic);
    w.bytes(cred.svd_id);
    w.bytes(cred.lmu_id);
    w.bytes(cred.master.secret);
    return w.take();
}

SvdCredential parse_svd(ConstBytes data) {
    if (data.size() != kSvdFileSize) throw SelError(Errc::Truncated, "bad credential size");
    ByteReader r(data);
    std::array<uint8_t, 4> magic{};
    r.bytes(magic);
    if (magic != kSvdMagic) throw SelError(Errc::BadMagic, "not an SVD credential");
    SvdCredential cred;
    r.bytes(cred.svd_id);
    r.bytes(cred.lmu_id);
    r.bytes(cred.master.secret);
    return cred;
}

Key32 kdf_derive(const MasterSecret& master, std::string_view label, ConstBytes context) {
    if (label.empty() || label.size() > 16)
        throw SelError(Errc::BadParams, "kdf label must be 1..16 bytes");
    Digest32 prk = crypto::hkdf_extract({}, master.secret);
    ByteWriter info;
    info.bytes(ConstBytes(reinterpret_cast<const uint8_t*>(label.data()), label.size()));
    info.bytes(context);
    Bytes okm = crypto::hkdf_expand(prk, info.take(), 32);
    return to_array<32>(okm);
}

SessionKeys derive_session_keys(const MasterSecret& master, const Id16& lmu_id,
                                const Id16& svd_id, const Key32& dek) {
    SessionKeys keys;
    keys.dek = dek;
    keys.kek = kdf_derive(master, "lmu-kek", lmu_id);
    keys.ik = kdf_derive(master, "log-chain", lmu_id);
    keys.ak = kdf_derive(master, "svd-auth", svd_id);
    return keys;
}

EncryptedBlock encrypt_record(const SessionKeys& keys, const Digest32& hd, uint64_t seq,
                              const LogRecord& record, uint32_t record_payload_max) {
    Bytes plaintext = encode_record(record);
    if (plaintext.size() > record_payload_max)
        throw SelError(Errc::RecordTooLarge, "record does not fit a block slot");

    crypto::Sealed sealed = crypto::aead_seal(keys.dek, block_nonce(seq), block_aad(hd, seq),
                                              plaintext);
    EncryptedBlock block;
    block.seq = seq;
    block.payload_len = static_cast<uint32_t>(plaintext.size());
    block.ciphertext = std::move(sealed.ciphertext);
    block.tag = sealed.tag;
    return block;
}

LogRecord decrypt_record(const Key32& dek, const Digest32& hd, const EncryptedBlock& block) {
    Bytes plaintext = crypto::aead_open(dek, block_nonce(block.seq), block_aad(hd, block.seq),
                                        block.ciphertext, block.tag);
    if (plaintext.size() != block.payload_len)
        throw SelError(Errc::MalformedRecord, "payload length mismatch");
    return parse_record(plaintext);
}

Digest32 chain_genesis(const Key32& ik, const Digest32& hd) {
    return crypto::hmac_sha256(ik, hd);
}

Digest32 chain_extend(const Key32& ik, const Digest32& chain, const EncryptedBlock& block) {
    ByteWriter w;
    w.bytes(chain);
    w.u64(block.seq);
    w.bytes(block.tag);
    return crypto::hmac_sha256(ik, w.take());
}

Digest32 chain_over(const Key32& ik, const Digest32& hd, std::span<const EncryptedBlock> blocks) {
    Digest32 chain = chain_genesis(ik, hd);
    for (const EncryptedBlock& b : blocks) chain = chain_extend(ik, chain, b);
    return chain;
}

KeySection wrap_dek(const Key32& kek, const Key32& dek, const Digest32& hd, Rng& rng) {
    KeySection section;
    rng.fill(section.wrap_nonce);
    crypto::Sealed sealed = crypto::aead_seal(kek, section.wrap_nonce, hd, dek);
    std::copy(sealed.ciphertext.begin(), sealed.ciphertext.end(), section.wrapped_dek.begin());
    section.wrap_tag = sealed.tag;
    return section;
}

Key32 unwrap_dek(const Key32& kek, const KeySection& section, const Digest32& hd) {
    Bytes dek = crypto::aead_open(kek, section.wrap_nonce, hd, section.wrapped_dek,
                                  section.wrap_tag);
    return to_array<32>(dek);
}

Challenge new_challenge(Rng& rng) {
    Challenge ch;
    rng.fill(ch.nonce);
    return ch;
}

namespace {

Digest32 response_mac(const Key32& ak, const Challenge& ch, const Id16& svd_id,
                      const Digest32& hd) {
    ByteWriter w;
    w.bytes(ch.nonce);
    w.bytes(svd_id);
    w.bytes(hd);
    return crypto::hmac_sha256(ak, w.take());
}

} // namespace

AuthResponse svd_respond(const SvdCredential& cred, const Challenge& ch, const Digest32& hd) {
    Key32 ak = kdf_derive(cred.master, "svd-auth", cred.svd_id);
    return AuthResponse{response_mac(ak, ch, cred.svd_id, hd)};
}

bool verify_response(const Key32& ak, const Challenge& ch, const AuthResponse& resp,
                     const Id16& svd_id, const Digest32& hd) {
    Digest32 expected = response_mac(ak, ch, svd_id, hd);
    return crypto::ct_equal(resp.mac, expected);
}

} // namespace sel
