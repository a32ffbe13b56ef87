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

#include "sel/controller.hpp"

#include "sel/crypto.hpp"

namespace sel::ec {

namespace {

StatusInfo status_of(const EcState& state, const LmuImage* image = nullptr) {
    StatusInfo info;
    info.phase = state.phase;
    info.next_seq = state.next_seq;
    info.block_count = image != nullptr ? image->integrity.block_count : state.next_seq;
    return info;
}

void commit_integrity(EcState& state, LmuImage& image) {
    image.integrity.chain_tag = state.chain_cache;
    image.integrity.update_counter += 1;
    state.appends_since_update = 0;
}

void append_sealed(EcState& state, LmuImage& image, const LogRecord& record) {
    EncryptedBlock block = encrypt_record(*state.keys, state.hd, state.next_seq, record,
                                          image.header.record_payload_max);
    append_block(image, block);
    state.chain_cache = chain_extend(state.keys->ik, state.chain_cache, block);
    state.next_seq += 1;
    state.appends_since_update += 1;
    state.stats.record_count += 1;
    if (state.appends_since_update >= state.config.integrity_update_interval)
        commit_integrity(state, image);
}

bool image_full(const EcState& state, const LmuImage& image) {
    return state.next_seq >= image.header.capacity_blocks;
}

} // namespace

const char* phase_name(Phase phase) noexcept {
    switch (phase) {
    case Phase::Init: return "Init";
    case Phase::Connected: return "Connected";
    case Phase::Logging: return "Logging";
    case Phase::Idle: return "Idle";
    case Phase::Sleep: return "Sleep";
    case Phase::Closing: return "Closing";
    case Phase::Closed: return "Closed";
    }
    return "?";
}

EcState ec_connect(const Config& config, const MasterSecret& master, LmuImage& image, Rng& rng) {
    if (config.integrity_update_interval < 1)
        throw SelError(Errc::BadParams, "integrity_update_interval must be at least 1");

    EcState state;
    state.config = config;
    state.hd = header_digest(image.header);

    if (image.integrity.block_count == 0) {
        // Fresh unit: generate and wrap a new data-encryption key.
        Key32 dek{};
        rng.fill(dek);
        state.keys = derive_session_keys(master, image.header.lmu_id, image.header.svd_id, dek);
        image.key_section = wrap_dek(state.keys->kek, dek, state.hd, rng);
        state.chain_cache = chain_genesis(state.keys->ik, state.hd);
    } else {
        // Resume: the unit must authenticate fully before any further write.
        SessionKeys partial = derive_session_keys(master, image.header.lmu_id,
                                                  image.header.svd_id, Key32{});
        Key32 dek = unwrap_dek(partial.kek, image.key_section, state.hd); // throws AuthError
        state.keys = derive_session_keys(master, image.header.lmu_id, image.header.svd_id, dek);

        Digest32 recomputed = chain_over(state.keys->ik, state.hd, image.blocks);
        if (!crypto::ct_equal(recomputed, image.integrity.chain_tag))
            throw SelError(Errc::IntegrityMismatch, "stored chain does not cover the block list");
        for (const EncryptedBlock& block : image.blocks) {
            try {
                decrypt_record(state.keys->dek, state.hd, block);
            } catch (const SelError&) {
                throw SelError(Errc::IntegrityMismatch, "block failed authentication on resume");
            }
        }
        state.chain_cache = recomputed;
    }

    state.phase = Phase::Connected;
    state.next_seq = image.integrity.block_count;
    return state;
}

std::vector<Action> handle_command(EcState& state, const Command& cmd) {
    std::vector<Action> actions;

    if (cmd.kind == CommandKind::Status) {
        actions.push_back({ActionKind::Status, status_of(state)});
        return actions;
    }

    switch (cmd.kind) {
    case CommandKind::StartLogging:
        if (state.phase == Phase::Connected && cmd.sample_interval >= 1) {
            state.phase = Phase::Logging;
            state.sample_interval = cmd.sample_interval;
            return actions;
        }
        break;
    case CommandKind::Stop:
        if (state.phase == Phase::Logging) {
            state.phase = Phase::Closing;
            state.outstanding_sample = false;
            actions.push_back({ActionKind::CloseRequested, status_of(state)});
            return actions;
        }
        break;
    case CommandKind::Sleep:
        if (state.phase == Phase::Logging) {
            state.phase = Phase::Sleep;
            state.outstanding_sample = false;
            return actions;
        }
        break;
    case CommandKind::Wake:
        if (state.phase == Phase::Sleep) {
            state.phase = Phase::Logging;
            return actions;
        }
        break;
    case CommandKind::Status:
        break;
    }

    actions.push_back({ActionKind::InvalidTransition, status_of(state)});
    return actions;
}

std::vector<Action> tick(EcState& state, uint64_t now) {
    std::vector<Action> actions;
    if (state.phase != Phase::Logging || state.sample_interval == 0) return actions;
    if (now % state.sample_interval != 0) return actions;
    if (state.outstanding_sample) return actions; // one request in flight at most
    state.outstanding_sample = true;
    actions.push_back({ActionKind::SampleRequest, status_of(state)});
    return actions;
}

AppendOutcome on_sample(EcState& state, LmuImage& image, const LogRecord& sample) {
    state.outstanding_sample = false;
    if (sample.type() != RecordType::Sample)
        throw SelError(Errc::MalformedRecord, "on_sample requires a sample record");
    if (state.phase != Phase::Logging) return AppendOutcome::RejectedPhase;

    if (image_full(state, image)) {
        state.phase = Phase::Closing;
        return AppendOutcome::CapacityClosing;
    }

    const auto& payload = std::get<SamplePayload>(sample.payload);
    append_sealed(state, image, sample);
    if (!state.stats.have_sample) {
        state.stats.have_sample = true;
        state.stats.min_voltage_mv = payload.voltage_mv;
        state.stats.max_voltage_mv = payload.voltage_mv;
        state.stats.max_temp_centi_c = payload.temp_centi_c;
    } else {
        state.stats.min_voltage_mv = std::min(state.stats.min_voltage_mv, payload.voltage_mv);
        state.stats.max_voltage_mv = std::max(state.stats.max_voltage_mv, payload.voltage_mv);
        state.stats.max_temp_centi_c = std::max(state.stats.max_temp_centi_c,
                                                payload.temp_centi_c);
    }
    return AppendOutcome::Appended;
}

AppendOutcome log_event(EcState& state, LmuImage& image, uint16_t event_code, uint32_t detail,
                        uint64_t now, LogRecord* out) {
    if (state.phase != Phase::Logging) return AppendOutcome::RejectedPhase;

    if (image_full(state, image)) {
        state.phase = Phase::Closing;
        return AppendOutcome::CapacityClosing;
    }

    LogRecord record;
    record.timestamp = now;
    record.payload = EventPayload{event_code, detail};
    append_sealed(state, image, record);
    state.stats.fault_count += 1;
    if (out != nullptr) *out = record;
    return AppendOutcome::Appended;
}

void on_sample_failed(EcState& state) {
    state.outstanding_sample = false;
}

CloseResult ec_close(EcState& state, LmuImage& image, uint64_t now) {
    if (state.phase != Phase::Logging && state.phase != Phase::Idle &&
        state.phase != Phase::Closing)
        throw SelError(Errc::InvalidTransition, "close is only valid from an active session");

    CloseResult result;
    SessionMetaPayload meta;
    meta.record_count = state.stats.record_count;
    meta.min_voltage_mv = state.stats.have_sample ? state.stats.min_voltage_mv : 0;
    meta.max_voltage_mv = state.stats.have_sample ? state.stats.max_voltage_mv : 0;
    meta.max_temp_centi_c = state.stats.have_sample ? state.stats.max_temp_centi_c : 0;
    meta.fault_count = state.stats.fault_count;

    if (!image_full(state, image)) {
        LogRecord record;
        record.timestamp = now;
        record.payload = meta;
        append_sealed(state, image, record);
        result.meta_written = true;
        result.meta = record;
    }
    if (state.appends_since_update > 0) commit_integrity(state, image);

    state.phase = Phase::Closed;
    state.outstanding_sample = false;
    return result;
}

} // namespace sel::ec
