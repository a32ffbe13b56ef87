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

#include <vector>

#include "sel/bytes.hpp"

namespace sel {

// Byte-exact image of one logging memory unit (.lmu file). Fixed layout:
//
//   offset    0  header           96 bytes
//   offset   96  key section      64 bytes
//   offset  160  integrity section 64 bytes
//   offset  224  block slots      capacity_blocks * (28 + record_payload_max)
//
// Every slot has the same size, so block i starts at a computable offset and
// the integrity section can be rewritten in place while the session runs.
// All multi-byte integers are little-endian.

inline constexpr std::array<uint8_t, 4> kLmuMagic = {0x53, 0x45, 0x4C, 0x4D}; // "SELM"
inline constexpr uint16_t kLmuVersion = 1;
inline constexpr size_t kHeaderSize = 96;
inline constexpr size_t kKeySectionSize = 64;
inline constexpr size_t kIntegritySectionSize = 64;
inline constexpr size_t kBlockRegionOffset = kHeaderSize + kKeySectionSize + kIntegritySectionSize;
inline constexpr size_t kBlockSlotOverhead = 8 + 4 + 16; // seq + payload_len + tag
inline constexpr uint32_t kMinPayloadMax = 16;
inline constexpr uint32_t kMaxPayloadMax = 4096;

struct LmuHeader {
    uint16_t version = kLmuVersion;
    uint16_t flags = 0;
    Id16 lmu_id{};
    Id16 ec_id{};
    Id16 med_id{};
    Id16 svd_id{};
    uint64_t created_at = 0; // simulation ticks
    uint32_t capacity_blocks = 0;
    uint32_t record_payload_max = 0;

    bool operator==(const LmuHeader&) const = default;
};

/// Wrapped data-encryption key: AEAD ciphertext of the 32-byte DEK under the
/// key-encryption key, bound to the header digest. Zero-filled until a
/// controller first connects.
struct KeySection {
    Nonce12 wrap_nonce{};
    std::array<uint8_t, 32> wrapped_dek{};
    Tag16 wrap_tag{};

    bool is_zero() const {
        return sel::is_zero(wrap_nonce) && sel::is_zero(wrapped_dek) && sel::is_zero(wrap_tag);
    }

    bool operator==(const KeySection&) const = default;
};

/// Stored unencrypted and rewritten in place. chain_tag covers blocks
/// [0, block_count) through the keyed integrity chain; update_counter counts
/// rewrites of this section. Every rewrite commits at least one new block,
/// so update_counter never exceeds block_count — parsing enforces this.
struct IntegritySection {
    uint64_t block_count = 0;
    Digest32 chain_tag{};
    uint64_t update_counter = 0;

    bool operator==(const IntegritySection&) const = default;
};

struct EncryptedBlock {
    uint64_t seq = 0;
    uint32_t payload_len = 0; // plaintext record length in bytes
    Bytes ciphertext;         // exactly payload_len bytes; slot is zero-padded on disk
    Tag16 tag{};

    bool operator==(const EncryptedBlock&) const = default;
};

struct LmuImage {
    LmuHeader header;
    KeySection key_section;
    IntegritySection integrity;
    std::vector<EncryptedBlock> blocks; // length == integrity.block_count

    bool operator==(const LmuImage&) const = default;
};

struct HeaderParams {
    Id16 lmu_id{};
    Id16 ec_id{};
    Id16 med_id{};
    Id16 svd_id{};
    uint32_t capacity_blocks = 0;
    uint32_t record_payload_max = 0;
};

inline size_t block_slot_size(const LmuHeader& h) {
    return kBlockSlotOverhead + h.record_payload_max;
}

inline size_t block_offset(const LmuHeader& h, uint64_t index) {
    return kBlockRegionOffset + static_cast<size_t>(index) * block_slot_size(h);
}

inline size_t image_size(const LmuHeader& h) {
    return kBlockRegionOffset + static_cast<size_t>(h.capacity_blocks) * block_slot_size(h);
}

/// Builds an empty image: zero blocks, zeroed key and integrity sections.
/// Throws SelError(BadParams) when capacity or payload bounds are out of range.
LmuImage create_image(const HeaderParams& params, uint64_t created_at);

Bytes serialize_header(const LmuHeader& header);

/// Deterministic, bit-exact serialization of the full image including empty
/// slots (the file always spans the unit's whole capacity).
Bytes serialize_image(const LmuImage& image);

LmuHeader parse_header(ConstBytes data);

IntegritySection parse_integrity(ConstBytes data, const LmuHeader& header);

/// Total parse: returns an image whose invariants all hold or throws a typed
/// SelError (BadMagic, BadVersion, Truncated, InvariantViolation). Never
/// crashes on arbitrary input.
LmuImage parse_image(ConstBytes data);

/// Stores the block at the next slot and bumps block_count. The integrity
/// chain tag is deliberately not touched here; committing it is the security
/// module's periodic-update step.
uint64_t append_block(LmuImage& image, const EncryptedBlock& block);

/// SHA-256 over the 96 serialized header bytes. Binds blocks, wrapped keys
/// and authentication transcripts to this unit's identity.
Digest32 header_digest(const LmuHeader& header);

} // namespace sel
