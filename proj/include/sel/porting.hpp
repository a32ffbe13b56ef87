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

#include <functional>
#include <optional>

#include "json.hpp"

#include "sel/secmod.hpp"

namespace sel {

// Verification run when a memory unit and its source verification device are
// ported to a new platform. The pipeline, in order:
//
//   1. parse the image                     -> ParseError
//   2. credential/header identity binding  -> HeaderMismatch
//   3. challenge/response with the device  -> AuthFailure
//   4. unwrap the data-encryption key      -> AuthFailure or KeyUnwrapFailure
//   5. recompute the full integrity chain  -> IntegrityMismatch
//   6. AEAD-open every block               -> IntegrityMismatch
//
// Stage 4 disambiguates by whether the chain also fails under the presented
// master secret: an unwrap failure together with a failing chain means the
// presented secret is not this unit's master (a counterfeit source, reported
// as AuthFailure), while an unwrap failure with an intact chain points at a
// damaged key section (KeyUnwrapFailure).

enum class RejectReason {
    AuthFailure,
    KeyUnwrapFailure,
    IntegrityMismatch,
    HeaderMismatch,
    ParseError,
};

const char* reject_reason_name(RejectReason reason) noexcept;

struct AuthTranscript {
    std::string challenge_hex;       // challenge nonce
    std::string response_digest_hex; // SHA-256 of the response mac
};

struct VerificationReport {
    bool accepted = false;
    std::optional<RejectReason> reject_reason;
    uint64_t blocks_checked = 0;
    std::optional<uint64_t> first_bad_seq;
    AuthTranscript transcript;
};

/// Stable JSON shape: verdict, reject_reason, blocks_checked, first_bad_seq,
/// transcript.
nlohmann::ordered_json report_to_json(const VerificationReport& report);

struct PortingInputs {
    Bytes image_bytes;
    SvdCredential credential;
};

/// Answers a challenge on behalf of the source verification device. The
/// default responder derives its key from the credential itself; tests
/// substitute hostile responders here.
using SvdResponder = std::function<AuthResponse(const Challenge&, const Digest32&)>;

/// Block-open kernels run over all blocks of a parsed image. The parallel
/// kernel splits the slots across threads; both return the same result for
/// the same input.
enum class ExecPolicy { Serial, Parallel };

struct BlockOpenResult {
    uint64_t blocks_ok = 0;
    std::optional<uint64_t> first_bad_seq;
    std::vector<LogRecord> records; // valid only when first_bad_seq is empty
};

BlockOpenResult open_blocks_serial(const Key32& dek, const Digest32& hd,
                                   std::span<const EncryptedBlock> blocks);
BlockOpenResult open_blocks_parallel(const Key32& dek, const Digest32& hd,
                                     std::span<const EncryptedBlock> blocks);

/// Runs the full porting pipeline. Never throws for verification outcomes;
/// every failure is a report verdict.
VerificationReport verify_port(const PortingInputs& inputs, Rng& rng,
                               const SvdResponder& responder = {},
                               ExecPolicy policy = ExecPolicy::Parallel);

class ExportRefusedError : public SelError {
public:
    explicit ExportRefusedError(VerificationReport report)
        : SelError(Errc::IntegrityMismatch,
                   std::string("export refused: ") + reject_reason_name(*report.reject_reason)),
          report_(std::move(report)) {}

    const VerificationReport& report() const noexcept { return report_; }

private:
    VerificationReport report_;
};

/// Verifies, then returns the plaintext records in sequence order. Throws
/// ExportRefusedError carrying the rejecting report when verification fails.
std::vector<LogRecord> export_records(const PortingInputs& inputs, Rng& rng,
                                      ExecPolicy policy = ExecPolicy::Parallel);

/// Test/audit helper: rewrites an image as if its last `k` blocks were erased
/// (slots zeroed, block_count patched down). The stored chain tag is left
/// untouched, exactly what a truncation attack without the chain key looks
/// like.
Bytes strip_last_blocks(ConstBytes image_bytes, uint64_t k);

} // namespace sel
