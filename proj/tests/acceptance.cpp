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

// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line and
// must finish inside its time budget; the process exits non-zero if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "harness.hpp"
#include "sel/crypto.hpp"

using namespace sel;
using namespace sel::testing;

namespace {

int failures = 0;

void criterion(const std::string& name, double budget_seconds,
               const std::function<bool(std::string&)>& body) {
    std::string detail;
    auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed >= budget_seconds) {
        ok = false;
        detail += " [over time budget]";
    }
    std::printf("[%s] %s: %s (%.2fs, budget %.0fs)\n", ok ? "PASS" : "FAIL", name.c_str(),
                detail.c_str(), elapsed, budget_seconds);
    std::fflush(stdout);
    if (!ok) ++failures;
}

Pack finalized_16_block_pack() {
    return closed_session(/*seed=*/9001, /*samples=*/15, /*capacity=*/16, /*payload_max=*/64);
}

} // namespace

// Threat: logged data tampering. Every byte of the finalized image is flipped
// in turn; the porting verification must reject each variant. The sweep spans
// the whole file, a superset of the block region and integrity section.
static void c1_tamper_evidence() {
    criterion("C1 tamper-evidence", 30.0, [](std::string& detail) {
        Pack pack = finalized_16_block_pack();
        if (pack.image.integrity.block_count != 16) {
            detail = "setup produced the wrong block count";
            return false;
        }
        Bytes wire = serialize_image(pack.image);
        const int64_t total = static_cast<int64_t>(wire.size());

        int64_t rejected = 0;
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : rejected)
        for (int64_t offset = 0; offset < total; ++offset) {
            PortingInputs inputs;
            inputs.image_bytes = wire;
            inputs.image_bytes[static_cast<size_t>(offset)] ^= 0xFF;
            inputs.credential = pack.credential;
            Rng rng(777 + static_cast<uint64_t>(offset));
            VerificationReport report = verify_port(inputs, rng, {}, ExecPolicy::Serial);
            if (!report.accepted) rejected += 1;
        }

        std::ostringstream os;
        os << rejected << "/" << total << " single-byte flips rejected";
        detail = os.str();
        return rejected == total;
    });
}

// Threat: counterfeited sources. A credential with any wrong master secret
// must be rejected as an authentication failure; the true credential passes.
static void c2_counterfeit_rejection() {
    criterion("C2 counterfeit-rejection", 10.0, [](std::string& detail) {
        Pack pack = finalized_16_block_pack();
        Bytes wire = serialize_image(pack.image);

        Rng accept_rng(1);
        PortingInputs good{wire, pack.credential};
        bool genuine_ok = verify_port(good, accept_rng).accepted;

        const int64_t trials = 1000;
        int64_t auth_failures = 0;
#pragma omp parallel for schedule(static) reduction(+ : auth_failures)
        for (int64_t i = 0; i < trials; ++i) {
            Rng rng(50000 + static_cast<uint64_t>(i));
            PortingInputs inputs{wire, pack.credential};
            rng.fill(inputs.credential.master.secret);
            VerificationReport report = verify_port(inputs, rng, {}, ExecPolicy::Serial);
            if (!report.accepted && report.reject_reason &&
                *report.reject_reason == RejectReason::AuthFailure)
                auth_failures += 1;
        }

        std::ostringstream os;
        os << auth_failures << "/" << trials << " wrong masters rejected as AuthFailure, "
           << "genuine credential " << (genuine_ok ? "accepted" : "rejected");
        detail = os.str();
        return genuine_ok && auth_failures == trials;
    });
}

// Dropping the last k blocks and patching the block count must never produce
// an acceptable image.
static void c3_truncation_detection() {
    criterion("C3 truncation-detection", 5.0, [](std::string& detail) {
        Pack pack = finalized_16_block_pack();
        Bytes wire = serialize_image(pack.image);
        uint64_t count = pack.image.integrity.block_count;

        uint64_t rejected = 0;
        for (uint64_t k = 1; k <= count; ++k) {
            Rng rng(300 + k);
            PortingInputs inputs{strip_last_blocks(wire, k), pack.credential};
            if (!verify_port(inputs, rng).accepted) ++rejected;
        }
        Rng rng(299);
        PortingInputs untouched{strip_last_blocks(wire, 0), pack.credential};
        bool zero_case = verify_port(untouched, rng).accepted;

        std::ostringstream os;
        os << rejected << "/" << count << " truncations rejected, k=0 "
           << (zero_case ? "accepted" : "rejected");
        detail = os.str();
        return rejected == count && zero_case;
    });
}

// Threat: spying. No informative window of any plaintext payload may appear
// in the stored image. Windows dominated by little-endian zero padding (five
// or more zero bytes of eight) are format noise, not payload content, and are
// skipped; everything else must vanish under encryption.
static void c4_confidentiality() {
    criterion("C4 confidentiality", 5.0, [](std::string& detail) {
        Pack pack = closed_session(9002, 63, 64, 64);
        if (pack.image.integrity.block_count != 64) {
            detail = "setup produced the wrong block count";
            return false;
        }
        Bytes wire = serialize_image(pack.image);

        size_t windows = 0;
        size_t hits = 0;
        for (const LogRecord& record : pack.plaintext) {
            Bytes encoded = encode_record(record);
            ConstBytes payload = ConstBytes(encoded).subspan(kRecordHeaderSize);
            if (payload.size() < 8) continue;
            for (size_t i = 0; i + 8 <= payload.size(); ++i) {
                ConstBytes window = payload.subspan(i, 8);
                size_t zeros = 0;
                for (uint8_t b : window) zeros += b == 0 ? 1 : 0;
                if (zeros >= 5) continue;
                ++windows;
                if (std::search(wire.begin(), wire.end(), window.begin(), window.end()) !=
                    wire.end())
                    ++hits;
            }
        }

        std::ostringstream os;
        os << windows << " payload windows searched, " << hits << " leaked";
        detail = os.str();
        return hits == 0 && windows >= 300;
    });
}

// Every controller's exported records must equal the simulator's plaintext
// oracle trace, record for record.
static void c5_oracle_equivalence() {
    criterion("C5 oracle-equivalence", 10.0, [](std::string& detail) {
        sim::SimResult result = sim::run_scenario(demo_scenario());
        size_t checked = 0;
        for (const auto& ec : result.ecs) {
            Rng rng(11 + ec.address);
            PortingInputs inputs{ec.image_bytes, ec.credential};
            std::vector<LogRecord> exported;
            try {
                exported = export_records(inputs, rng);
            } catch (const ExportRefusedError&) {
                detail = "export refused for controller " + std::to_string(ec.address);
                return false;
            }
            if (exported.size() != ec.oracle.size()) {
                detail = "record count mismatch on controller " + std::to_string(ec.address);
                return false;
            }
            for (size_t i = 0; i < exported.size(); ++i) {
                if (ec.oracle[i].seq != i || !(exported[i] == ec.oracle[i].record)) {
                    detail = "record mismatch on controller " + std::to_string(ec.address);
                    return false;
                }
                ++checked;
            }
        }
        std::ostringstream os;
        os << result.ecs.size() << " controllers, " << checked << " records oracle-equal";
        detail = os.str();
        return result.ecs.size() == 4;
    });
}

// Killing one controller mid-run must leave every other controller's image
// accepted and byte-identical to the unperturbed baseline.
static void c6_decentralization() {
    criterion("C6 decentralization", 10.0, [](std::string& detail) {
        sim::SimResult baseline = sim::run_scenario(demo_scenario());
        sim::ScenarioConfig config = demo_scenario();
        config.kills.push_back({2, 128});
        sim::SimResult killed = sim::run_scenario(config);

        size_t survivors_ok = 0;
        for (size_t i : {size_t(0), size_t(2), size_t(3)}) {
            const auto& before = baseline.ecs[i];
            const auto& after = killed.ecs[i];
            Rng rng(21 + after.address);
            PortingInputs inputs{after.image_bytes, after.credential};
            bool accepted = verify_port(inputs, rng).accepted;
            bool identical = after.image_bytes == before.image_bytes &&
                             after.oracle == before.oracle;
            if (accepted && identical) ++survivors_ok;
        }
        std::ostringstream os;
        os << survivors_ok << "/3 survivors accepted and byte-identical to baseline";
        detail = os.str();
        return survivors_ok == 3;
    });
}

// The same configuration and seed must reproduce every artifact bit for bit.
static void c7_determinism() {
    criterion("C7 determinism", 10.0, [](std::string& detail) {
        namespace fs = std::filesystem;
        fs::path dir_a = fs::temp_directory_path() / "sel_acc_run_a";
        fs::path dir_b = fs::temp_directory_path() / "sel_acc_run_b";
        fs::remove_all(dir_a);
        fs::remove_all(dir_b);

        sim::write_outputs(sim::run_scenario(demo_scenario()), dir_a);
        sim::write_outputs(sim::run_scenario(demo_scenario()), dir_b);

        auto slurp = [](const fs::path& p) {
            std::ifstream in(p, std::ios::binary);
            return std::string(std::istreambuf_iterator<char>(in),
                               std::istreambuf_iterator<char>());
        };

        size_t identical = 0;
        size_t total = 0;
        for (const char* name :
             {"ec1.lmu", "ec2.lmu", "ec3.lmu", "ec4.lmu", "ec1.svd", "ec2.svd", "ec3.svd",
              "ec4.svd", "oracle.jsonl"}) {
            ++total;
            std::string a = slurp(dir_a / name);
            if (!a.empty() && a == slurp(dir_b / name)) ++identical;
        }
        fs::remove_all(dir_a);
        fs::remove_all(dir_b);

        std::ostringstream os;
        os << identical << "/" << total << " artifacts byte-identical across reruns";
        detail = os.str();
        return identical == total;
    });
}

// The fixed primitive suite must match its published vectors.
static void c8_crypto_kats() {
    criterion("C8 crypto-known-answers", 1.0, [](std::string& detail) {
        size_t passed = 0;
        size_t total = 0;
        auto expect = [&](bool ok) {
            ++total;
            if (ok) ++passed;
        };
        auto str_bytes = [](const std::string& s) { return Bytes(s.begin(), s.end()); };
        auto range_bytes = [](int lo, int hi) {
            Bytes out;
            for (int v = lo; v < hi; ++v) out.push_back(static_cast<uint8_t>(v));
            return out;
        };

        // SHA-256
        expect(to_hex(crypto::sha256(str_bytes("abc"))) ==
               "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        expect(to_hex(crypto::sha256(Bytes{})) ==
               "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        expect(to_hex(crypto::sha256(str_bytes(
                   "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"))) ==
               "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");

        // HMAC-SHA-256
        expect(to_hex(crypto::hmac_sha256(Bytes(20, 0x0b), str_bytes("Hi There"))) ==
               "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");
        expect(to_hex(crypto::hmac_sha256(str_bytes("Jefe"),
                                          str_bytes("what do ya want for nothing?"))) ==
               "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
        expect(to_hex(crypto::hmac_sha256(Bytes(20, 0xaa), Bytes(50, 0xdd))) ==
               "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe");

        // HKDF-SHA-256
        {
            Digest32 prk1 = crypto::hkdf_extract(range_bytes(0x00, 0x0d), Bytes(22, 0x0b));
            expect(to_hex(prk1) ==
                   "077709362c2e32df0ddc3f0dc47bba6390b6c73bb50f9c3122ec844ad7c2b3e5");
            expect(to_hex(crypto::hkdf_expand(prk1, range_bytes(0xf0, 0xfa), 42)) ==
                   "3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf"
                   "34007208d5b887185865");
            Digest32 prk2 = crypto::hkdf_extract(range_bytes(0x60, 0xb0), range_bytes(0x00, 0x50));
            expect(to_hex(crypto::hkdf_expand(prk2, range_bytes(0xb0, 0x100), 82)) ==
                   "b11e398dc80327a1c8e7f78c596a49344f012eda2d4efad8a050cc4c19afa97c"
                   "59045a99cac7827271cb41c65e590e09da3275600c2f09b8367793a9aca3db71"
                   "cc30c58179ec3e87c14c01d5c1f3434f1d87");
            Digest32 prk3 = crypto::hkdf_extract({}, Bytes(22, 0x0b));
            expect(to_hex(crypto::hkdf_expand(prk3, {}, 42)) ==
                   "8da4e775a563c18f715f802a063c5a31b8a11f5c5ee1879ec3454e5f3c738d2d"
                   "9d201395faa4b61a96c8");
        }

        // AES-256-GCM
        {
            Key32 zero_key{};
            Nonce12 zero_iv{};
            crypto::Sealed s1 = crypto::aead_seal(zero_key, zero_iv, {}, {});
            expect(to_hex(s1.tag) == "530f8afbc74536b9a963b4f1c4cb738b");
            crypto::Sealed s2 = crypto::aead_seal(zero_key, zero_iv, {}, Bytes(16, 0));
            expect(to_hex(s2.ciphertext) == "cea7403d4d606b6e074ec5d3baf39d18" &&
                   to_hex(s2.tag) == "d0d1c8a799996bf0265b98b5d48ab919");

            Key32 key = to_array<32>(from_hex(
                "feffe9928665731c6d6a8f9467308308feffe9928665731c6d6a8f9467308308"));
            Nonce12 iv = to_array<12>(from_hex("cafebabefacedbaddecaf888"));
            Bytes pt = from_hex(
                "d9313225f88406e5a55909c5aff5269a86a7a9531534f7da2e4c303d8a318a72"
                "1c3c0c95956809532fcf0e2449a6b525b16aedf5aa0de657ba637b391aafd255");
            crypto::Sealed s3 = crypto::aead_seal(key, iv, {}, pt);
            expect(to_hex(s3.ciphertext) ==
                       "522dc1f099567d07f47f37a32a84427d643a8cdcbfe5c0c97598a2bd2555d1aa"
                       "8cb08e48590dbb3da7b08b1056828838c5f61e6393ba7a0abcc9f662898015ad" &&
                   to_hex(s3.tag) == "b094dac5d93471bdec1a502270e3cc6c");
            Bytes aad = from_hex("feedfacedeadbeeffeedfacedeadbeefabaddad2");
            Bytes short_pt(pt.begin(), pt.begin() + 60);
            crypto::Sealed s4 = crypto::aead_seal(key, iv, aad, short_pt);
            expect(to_hex(s4.ciphertext) ==
                       "522dc1f099567d07f47f37a32a84427d643a8cdcbfe5c0c97598a2bd2555d1aa"
                       "8cb08e48590dbb3da7b08b1056828838c5f61e6393ba7a0abcc9f662" &&
                   to_hex(s4.tag) == "76fc6ece0f4e1768cddf8853bb2d551b");
        }

        // CRC-16/CCITT
        Bytes check = {'1', '2', '3', '4', '5', '6', '7', '8', '9'};
        expect(sim::crc16_ccitt(check) == 0x29B1);

        std::ostringstream os;
        os << passed << "/" << total << " published vectors matched";
        detail = os.str();
        return passed == total;
    });
}

// Exhaustive lifecycle table plus the closing contract: exactly one summary
// record and a final integrity commit.
static void c9_lifecycle() {
    criterion("C9 lifecycle-conformance", 1.0, [](std::string& detail) {
        using ec::CommandKind;
        using ec::Phase;

        auto expected = [](Phase phase, CommandKind kind) -> std::optional<Phase> {
            if (kind == CommandKind::Status) return phase;
            if (phase == Phase::Connected && kind == CommandKind::StartLogging)
                return Phase::Logging;
            if (phase == Phase::Logging && kind == CommandKind::Stop) return Phase::Closing;
            if (phase == Phase::Logging && kind == CommandKind::Sleep) return Phase::Sleep;
            if (phase == Phase::Sleep && kind == CommandKind::Wake) return Phase::Logging;
            return std::nullopt;
        };

        const Phase phases[] = {Phase::Init,  Phase::Connected, Phase::Logging, Phase::Idle,
                                Phase::Sleep, Phase::Closing,   Phase::Closed};
        const CommandKind kinds[] = {CommandKind::StartLogging, CommandKind::Stop,
                                     CommandKind::Sleep, CommandKind::Wake, CommandKind::Status};

        size_t pairs_ok = 0;
        size_t pairs = 0;
        for (Phase phase : phases) {
            for (CommandKind kind : kinds) {
                ++pairs;
                Pack pack = make_pack(600);
                pack.state.phase = phase;
                auto actions = handle_command(pack.state, {kind, 4});
                auto want = expected(phase, kind);
                if (want) {
                    bool no_invalid = true;
                    for (const auto& a : actions)
                        if (a.kind == ec::ActionKind::InvalidTransition) no_invalid = false;
                    if (pack.state.phase == *want && no_invalid) ++pairs_ok;
                } else {
                    if (pack.state.phase == phase && actions.size() == 1 &&
                        actions[0].kind == ec::ActionKind::InvalidTransition)
                        ++pairs_ok;
                }
            }
        }

        // closing contract
        Pack pack = closed_session(601, 5);
        uint64_t counter_before_close = 0;
        {
            Pack probe = make_pack(601);
            handle_command(probe.state, {CommandKind::StartLogging, 4});
            for (int i = 0; i < 5; ++i) on_sample(probe.state, probe.image, make_sample(4 * i + 2));
            counter_before_close = probe.image.integrity.update_counter;
        }
        size_t meta_count = 0;
        for (const auto& rec : pack.plaintext)
            if (rec.type() == RecordType::SessionMeta) ++meta_count;
        bool close_ok = pack.image.integrity.block_count == 6 && meta_count == 1 &&
                        pack.plaintext.back().type() == RecordType::SessionMeta &&
                        pack.image.integrity.update_counter == counter_before_close + 1;

        std::ostringstream os;
        os << pairs_ok << "/" << pairs << " transition pairs conform, closing contract "
           << (close_ok ? "holds" : "broken");
        detail = os.str();
        return pairs_ok == pairs && close_ok;
    });
}

// Every single-bit frame corruption is caught by the CRC screen, and the
// bounded retry policy logs a link-failure record after three failed sends.
static void c10_frame_integrity() {
    criterion("C10 frame-integrity", 5.0, [](std::string& detail) {
        sim::Frame frame;
        frame.dest = 2;
        frame.src = 0;
        frame.hop_count = 1;
        frame.payload = {0x01, 0x04, 0x00, 0x00, 0x00, 0x42, 0x99};
        Bytes wire = sim::encode_frame(frame);

        size_t detected = 0;
        const size_t bits = wire.size() * 8;
        for (size_t bit = 0; bit < bits; ++bit) {
            Bytes bad = wire;
            bad[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
            try {
                sim::decode_frame(bad);
            } catch (const SelError&) {
                ++detected;
            }
        }

        // retry policy under a fully corrupted device link
        sim::ScenarioConfig config = demo_scenario();
        config.faults.push_back({sim::FaultKind::Corrupt, "med:1", 1000000, {}, 0});
        sim::SimResult result = sim::run_scenario(config);

        size_t link_failures = 0;
        bool details_ok = true;
        for (const auto& entry : result.ecs[0].oracle) {
            if (entry.record.type() != RecordType::Event) continue;
            const auto& ev = std::get<EventPayload>(entry.record.payload);
            if (ev.event_code != kEventLinkFailure) continue;
            ++link_failures;
            if (ev.detail != sim::kMaxSampleAttempts) details_ok = false;
        }
        // exactly two retries precede the first give-up
        size_t retries_before_first_failure = 0;
        for (const auto& event : result.events) {
            if (event.node != "ec:1") continue;
            if (event.kind == "sample_retry") ++retries_before_first_failure;
            if (event.kind == "link_failure_logged") break;
        }

        std::ostringstream os;
        os << detected << "/" << bits << " bit corruptions detected, " << link_failures
           << " link-failure records (3 sends each)";
        detail = os.str();
        return detected == bits && link_failures > 0 && details_ok &&
               retries_before_first_failure == 2;
    });
}

int main() {
    c1_tamper_evidence();
    c2_counterfeit_rejection();
    c3_truncation_detection();
    c4_confidentiality();
    c5_oracle_equivalence();
    c6_decentralization();
    c7_determinism();
    c8_crypto_kats();
    c9_lifecycle();
    c10_frame_integrity();

    if (failures == 0) {
        std::printf("acceptance: all criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", failures);
    return 1;
}
