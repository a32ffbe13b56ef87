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

#include "sel/porting.hpp"

#include <atomic>

#include "sel/crypto.hpp"

namespace sel {

const char* reject_reason_name(RejectReason reason) noexcept {
    switch (reason) {
    case RejectReason::AuthFailure: return "AuthFailure";
    case RejectReason::KeyUnwrapFailure: return "KeyUnwrapFailure";
    case RejectReason::IntegrityMismatch: return "IntegrityMismatch";
    case RejectReason::HeaderMismatch: return "HeaderMismatch";
    case RejectReason::ParseError: return "ParseError";
    }
    return "?";
}

nlohmann::ordered_json report_to_json(const VerificationReport& report) {
    nlohmann::ordered_json j;
    j["verdict"] = report.accepted ? "accepted" : "rejected";
    j["reject_reason"] =
        report.reject_reason ? nlohmann::json(reject_reason_name(*report.reject_reason))
                             : nlohmann::json(nullptr);
    j["blocks_checked"] = report.blocks_checked;
    j["first_bad_seq"] = report.first_bad_seq ? nlohmann::json(*report.first_bad_seq)
                                              : nlohmann::json(nullptr);
    j["transcript"] = {{"challenge", report.transcript.challenge_hex},
                       {"response_digest", report.transcript.response_digest_hex}};
    return j;
}

namespace {

bool try_open_block(const Key32& dek, const Digest32& hd, const EncryptedBlock& block,
                    LogRecord& out) noexcept {
    try {
        out = decrypt_record(dek, hd, block);
        return true;
    } catch (...) {
        return false;
    }
}

} // namespace

BlockOpenResult open_blocks_serial(const Key32& dek, const Digest32& hd,
                                   std::span<const EncryptedBlock> blocks) {
    BlockOpenResult result;
    result.records.resize(blocks.size());
    for (size_t i = 0; i < blocks.size(); ++i) {
        if (try_open_block(dek, hd, blocks[i], result.records[i])) {
            result.blocks_ok += 1;
        } else if (!result.first_bad_seq) {
            result.first_bad_seq = blocks[i].seq;
        }
    }
    if (result.first_bad_seq) result.records.clear();
    return result;
}

BlockOpenResult open_blocks_parallel(const Key32& dek, const Digest32& hd,
                                     std::span<const EncryptedBlock> blocks) {
    BlockOpenResult result;
    result.records.resize(blocks.size());

    const int64_t n = static_cast<int64_t>(blocks.size());
    std::atomic<int64_t> first_bad{n};
    int64_t ok_count = 0;

#pragma omp parallel for schedule(static) reduction(+ : ok_count)
    for (int64_t i = 0; i < n; ++i) {
        if (try_open_block(dek, hd, blocks[static_cast<size_t>(i)],
                           result.records[static_cast<size_t>(i)])) {
            ok_count += 1;
        } else {
            int64_t seen = first_bad.load(std::memory_order_relaxed);
            while (i < seen &&
                   !first_bad.compare_exchange_weak(seen, i, std::memory_order_relaxed)) {
            }
        }
    }

    result.blocks_ok = static_cast<uint64_t>(ok_count);
    if (first_bad.load() < n) {
        result.first_bad_seq = blocks[static_cast<size_t>(first_bad.load())].seq;
        result.records.clear();
    }
    return result;
}

namespace {

struct Pipeline {
    VerificationReport report;
    std::vector<LogRecord> records;
};

Pipeline run_pipeline(const PortingInputs& inputs, Rng& rng, const SvdResponder& responder,
                      ExecPolicy policy) {
    Pipeline out;
    VerificationReport& report = out.report;

    auto reject = [&](RejectReason reason, std::optional<uint64_t> bad_seq = {}) -> Pipeline& {
        report.accepted = false;
        report.reject_reason = reason;
        report.first_bad_seq = bad_seq;
        return out;
    };

    // 1. Parse.
    LmuImage image;
    try {
        image = parse_image(inputs.image_bytes);
    } catch (const SelError&) {
        reject(RejectReason::ParseError);
        return out;
    }

    // 2. Identity binding between credential and header.
    const SvdCredential& cred = inputs.credential;
    if (cred.lmu_id != image.header.lmu_id || cred.svd_id != image.header.svd_id) {
        reject(RejectReason::HeaderMismatch);
        return out;
    }

    // 3. Challenge/response with the source verification device.
    Digest32 hd = header_digest(image.header);
    Challenge challenge = new_challenge(rng);
    AuthResponse response = responder ? responder(challenge, hd)
                                      : svd_respond(cred, challenge, hd);
    report.transcript.challenge_hex = to_hex(challenge.nonce);
    report.transcript.response_digest_hex = to_hex(crypto::sha256(response.mac));

    Key32 ak = kdf_derive(cred.master, "svd-auth", image.header.svd_id);
    if (!verify_response(ak, challenge, response, image.header.svd_id, hd)) {
        reject(RejectReason::AuthFailure);
        return out;
    }

    // 4. Unwrap the data-encryption key under the presented master.
    Key32 kek = kdf_derive(cred.master, "lmu-kek", image.header.lmu_id);
    Key32 ik = kdf_derive(cred.master, "log-chain", image.header.lmu_id);
    Digest32 recomputed_chain = chain_over(ik, hd, image.blocks);
    bool chain_ok = crypto::ct_equal(recomputed_chain, image.integrity.chain_tag);

    Key32 dek{};
    try {
        dek = unwrap_dek(kek, image.key_section, hd);
    } catch (const SelError&) {
        // A failing chain under the same secret means the secret itself does
        // not belong to this unit; an intact chain isolates the damage to the
        // key section.
        reject(chain_ok ? RejectReason::KeyUnwrapFailure : RejectReason::AuthFailure);
        return out;
    }

    // 5. Integrity chain over the full block list.
    if (!chain_ok) {
        reject(RejectReason::IntegrityMismatch);
        return out;
    }

    // 6. Every block must authenticate and decrypt.
    BlockOpenResult opened = policy == ExecPolicy::Parallel
                                 ? open_blocks_parallel(dek, hd, image.blocks)
                                 : open_blocks_serial(dek, hd, image.blocks);
    report.blocks_checked = opened.blocks_ok;
    if (opened.first_bad_seq) {
        reject(RejectReason::IntegrityMismatch, opened.first_bad_seq);
        return out;
    }

    report.accepted = true;
    out.records = std::move(opened.records);
    return out;
}

} // namespace

VerificationReport verify_port(const PortingInputs& inputs, Rng& rng,
                               const SvdResponder& responder, ExecPolicy policy) {
    return run_pipeline(inputs, rng, responder, policy).report;
}

std::vector<LogRecord> export_records(const PortingInputs& inputs, Rng& rng, ExecPolicy policy) {
    Pipeline result = run_pipeline(inputs, rng, {}, policy);
    if (!result.report.accepted) throw ExportRefusedError(std::move(result.report));
    return std::move(result.records);
}

Bytes strip_last_blocks(ConstBytes image_bytes, uint64_t k) {
    LmuHeader header = parse_header(image_bytes);
    IntegritySection integrity = parse_integrity(image_bytes, header);
    if (k > integrity.block_count) throw SelError(Errc::BadParams, "cannot strip that many blocks");

    Bytes out(image_bytes.begin(), image_bytes.end());
    uint64_t new_count = integrity.block_count - k;

    // Patch block_count in place (first field of the integrity section), and
    // keep update_counter plausible so detection rests on the chain alone.
    size_t count_offset = kHeaderSize + kKeySectionSize;
    for (int i = 0; i < 8; ++i)
        out[count_offset + static_cast<size_t>(i)] = static_cast<uint8_t>(new_count >> (8 * i));
    uint64_t patched_counter = std::min(integrity.update_counter, new_count);
    for (int i = 0; i < 8; ++i)
        out[count_offset + 40 + static_cast<size_t>(i)] =
            static_cast<uint8_t>(patched_counter >> (8 * i));

    // Erase the dropped slots.
    size_t erase_begin = block_offset(header, new_count);
    size_t erase_end = block_offset(header, integrity.block_count);
    std::fill(out.begin() + static_cast<ptrdiff_t>(erase_begin),
              out.begin() + static_cast<ptrdiff_t>(erase_end), 0);
    return out;
}

} // namespace sel
