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

#include "sel/lmu_format.hpp"

#include "sel/crypto.hpp"

namespace sel {

namespace {

constexpr size_t kKeySectionPadding = kKeySectionSize - (12 + 32 + 16);       // 4
constexpr size_t kIntegrityPadding = kIntegritySectionSize - (8 + 32 + 8);    // 16

void check_header_ranges(uint32_t capacity_blocks, uint32_t record_payload_max, Errc errc) {
    if (capacity_blocks < 1)
        throw SelError(errc, "capacity_blocks must be at least 1");
    if (record_payload_max < kMinPayloadMax || record_payload_max > kMaxPayloadMax)
        throw SelError(errc, "record_payload_max out of range");
}

} // namespace

LmuImage create_image(const HeaderParams& params, uint64_t created_at) {
    check_header_ranges(params.capacity_blocks, params.record_payload_max, Errc::BadParams);
    LmuImage image;
    image.header.lmu_id = params.lmu_id;
    image.header.ec_id = params.ec_id;
    image.header.med_id = params.med_id;
    image.header.svd_id = params.svd_id;
    image.header.created_at = created_at;
    image.header.capacity_blocks = params.capacity_blocks;
    image.header.record_payload_max = params.record_payload_max;
    return image;
}

Bytes serialize_header(const LmuHeader& header) {
    ByteWriter w;
    w.bytes(kLmuMagic);
    w.u16(header.version);
    w.u16(header.flags);
    w.bytes(header.lmu_id);
    w.bytes(header.ec_id);
    w.bytes(header.med_id);
    w.bytes(header.svd_id);
    w.u64(header.created_at);
    w.u32(header.capacity_blocks);
    w.u32(header.record_payload_max);
    w.zeros(8); // reserved
    Bytes out = w.take();
    if (out.size() != kHeaderSize) throw SelError(Errc::InvariantViolation, "header size drift");
    return out;
}

Bytes serialize_image(const LmuImage& image) {
    const LmuHeader& h = image.header;
    check_header_ranges(h.capacity_blocks, h.record_payload_max, Errc::InvariantViolation);
    if (image.blocks.size() != image.integrity.block_count)
        throw SelError(Errc::InvariantViolation, "block list does not match block_count");
    if (image.integrity.block_count > h.capacity_blocks)
        throw SelError(Errc::InvariantViolation, "block_count exceeds capacity");

    ByteWriter w;
    w.bytes(serialize_header(h));

    w.bytes(image.key_section.wrap_nonce);
    w.bytes(image.key_section.wrapped_dek);
    w.bytes(image.key_section.wrap_tag);
    w.zeros(kKeySectionPadding);

    w.u64(image.integrity.block_count);
    w.bytes(image.integrity.chain_tag);
    w.u64(image.integrity.update_counter);
    w.zeros(kIntegrityPadding);

    for (size_t i = 0; i < image.blocks.size(); ++i) {
        const EncryptedBlock& b = image.blocks[i];
        if (b.seq != i) throw SelError(Errc::InvariantViolation, "non-contiguous block seq");
        if (b.payload_len > h.record_payload_max || b.ciphertext.size() != b.payload_len)
            throw SelError(Errc::InvariantViolation, "block payload length invalid");
        w.u64(b.seq);
        w.u32(b.payload_len);
        w.bytes(b.ciphertext);
        w.zeros(h.record_payload_max - b.payload_len);
        w.bytes(b.tag);
    }
    // Unwritten slots stay zero-filled, like erased pages.
    w.zeros((h.capacity_blocks - image.blocks.size()) * block_slot_size(h));

    Bytes out = w.take();
    if (out.size() != image_size(h)) throw SelError(Errc::InvariantViolation, "image size drift");
    return out;
}

LmuHeader parse_header(ConstBytes data) {
    ByteReader r(data.size() >= kHeaderSize ? data.first(kHeaderSize) : data);
    std::array<uint8_t, 4> magic{};
    r.bytes(magic);
    if (magic != kLmuMagic) throw SelError(Errc::BadMagic, "not an LMU image");

    LmuHeader h;
    h.version = r.u16();
    if (h.version != kLmuVersion) throw SelError(Errc::BadVersion, "unsupported version");
    h.flags = r.u16();
    r.bytes(h.lmu_id);
    r.bytes(h.ec_id);
    r.bytes(h.med_id);
    r.bytes(h.svd_id);
    h.created_at = r.u64();
    h.capacity_blocks = r.u32();
    h.record_payload_max = r.u32();
    Bytes reserved = r.bytes(8);
    if (!all_zero(reserved)) throw SelError(Errc::InvariantViolation, "reserved bytes set");
    check_header_ranges(h.capacity_blocks, h.record_payload_max, Errc::InvariantViolation);
    return h;
}

IntegritySection parse_integrity(ConstBytes data, const LmuHeader& header) {
    if (data.size() < kBlockRegionOffset) throw SelError(Errc::Truncated, "no integrity section");
    ByteReader r(data.subspan(kHeaderSize + kKeySectionSize, kIntegritySectionSize));
    IntegritySection s;
    s.block_count = r.u64();
    r.bytes(s.chain_tag);
    s.update_counter = r.u64();
    Bytes padding = r.bytes(kIntegrityPadding);
    if (!all_zero(padding)) throw SelError(Errc::InvariantViolation, "integrity padding set");
    if (s.block_count > header.capacity_blocks)
        throw SelError(Errc::InvariantViolation, "block_count exceeds capacity");
    if (s.update_counter > s.block_count)
        throw SelError(Errc::InvariantViolation, "update_counter exceeds block_count");
    return s;
}

LmuImage parse_image(ConstBytes data) {
    LmuImage image;
    image.header = parse_header(data);

    size_t expected = image_size(image.header);
    if (data.size() < expected) throw SelError(Errc::Truncated, "image shorter than header implies");
    if (data.size() > expected)
        throw SelError(Errc::InvariantViolation, "trailing bytes after image");

    ByteReader key(data.subspan(kHeaderSize, kKeySectionSize));
    key.bytes(image.key_section.wrap_nonce);
    key.bytes(image.key_section.wrapped_dek);
    key.bytes(image.key_section.wrap_tag);
    Bytes key_padding = key.bytes(kKeySectionPadding);
    if (!all_zero(key_padding)) throw SelError(Errc::InvariantViolation, "key section padding set");

    image.integrity = parse_integrity(data, image.header);

    const size_t slot = block_slot_size(image.header);
    const uint32_t payload_max = image.header.record_payload_max;
    image.blocks.reserve(image.integrity.block_count);
    for (uint64_t i = 0; i < image.integrity.block_count; ++i) {
        ByteReader r(data.subspan(block_offset(image.header, i), slot));
        EncryptedBlock b;
        b.seq = r.u64();
        if (b.seq != i) throw SelError(Errc::InvariantViolation, "block seq does not match slot");
        b.payload_len = r.u32();
        if (b.payload_len > payload_max)
            throw SelError(Errc::InvariantViolation, "payload_len exceeds slot payload");
        b.ciphertext = r.bytes(b.payload_len);
        Bytes pad = r.bytes(payload_max - b.payload_len);
        if (!all_zero(pad)) throw SelError(Errc::InvariantViolation, "slot padding set");
        r.bytes(b.tag);
        image.blocks.push_back(std::move(b));
    }
    // Slots past block_count must still look erased.
    size_t used_end = block_offset(image.header, image.integrity.block_count);
    if (!all_zero(data.subspan(used_end, expected - used_end)))
        throw SelError(Errc::InvariantViolation, "unwritten slot contains data");

    return image;
}

uint64_t append_block(LmuImage& image, const EncryptedBlock& block) {
    if (image.integrity.block_count >= image.header.capacity_blocks)
        throw SelError(Errc::CapacityExceeded, "image is full");
    if (block.seq != image.integrity.block_count)
        throw SelError(Errc::SeqMismatch, "block seq must equal current block_count");
    if (block.payload_len > image.header.record_payload_max ||
        block.ciphertext.size() != block.payload_len)
        throw SelError(Errc::InvariantViolation, "block payload length invalid");

    image.blocks.push_back(block);
    image.integrity.block_count += 1;
    return block.seq;
}

Digest32 header_digest(const LmuHeader& header) {
    return crypto::sha256(serialize_header(header));
}

} // namespace sel
