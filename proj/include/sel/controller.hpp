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

#include <limits>
#include <optional>
#include <vector>

#include "sel/secmod.hpp"

namespace sel::ec {

// Deterministic logging lifecycle of one embedded controller: connect to a
// memory unit, sample the monitored device while Logging, seal each record
// through the security module, and close the session with a summary record.
// Pure step functions; the caller owns scheduling and message transport.

enum class Phase {
    Init,
    Connected,
    Logging,
    Idle,
    Sleep,
    Closing,
    Closed,
};

const char* phase_name(Phase phase) noexcept;

enum class CommandKind {
    StartLogging,
    Stop,
    Sleep,
    Wake,
    Status,
};

struct Command {
    CommandKind kind = CommandKind::Status;
    uint32_t sample_interval = 0; // StartLogging only, in ticks
};

struct StatusInfo {
    Phase phase = Phase::Init;
    uint64_t block_count = 0;
    uint64_t next_seq = 0;
};

enum class ActionKind {
    SampleRequest,    // poll the monitored device now
    Status,           // status report toward the central unit
    CloseRequested,   // session should be closed by the driver
    InvalidTransition // command rejected; state unchanged
};

struct Action {
    ActionKind kind;
    StatusInfo status{};
};

/// Running min/max aggregation for the closing summary record.
struct SessionStats {
    uint64_t record_count = 0;
    bool have_sample = false;
    uint32_t min_voltage_mv = 0;
    uint32_t max_voltage_mv = 0;
    int16_t max_temp_centi_c = std::numeric_limits<int16_t>::min();
    uint32_t fault_count = 0;
};

struct Config {
    Id16 ec_id{};
    // Blocks appended between in-place integrity section commits. The stored
    // chain tag lags the block list by at most this many appends.
    uint32_t integrity_update_interval = 8;
};

struct EcState {
    Config config;
    Phase phase = Phase::Init;
    Digest32 hd{}; // header digest of the attached image
    std::optional<SessionKeys> keys;
    uint64_t next_seq = 0;
    uint32_t sample_interval = 0;
    uint32_t appends_since_update = 0;
    Digest32 chain_cache{}; // chain over all appended blocks
    bool outstanding_sample = false;
    SessionStats stats;
};

enum class AppendOutcome {
    Appended,
    RejectedPhase,   // not Logging; nothing written
    CapacityClosing, // image full; phase moved to Closing
};

struct CloseResult {
    bool meta_written = false;
    std::optional<LogRecord> meta;
};

/// Connects a controller to its unit. A fresh image (virgin key section)
/// gets a new dek wrapped into the key section. A non-empty image is resumed
/// only after the dek unwraps and every block passes both the chain and an
/// AEAD open; throws AuthError or IntegrityMismatch otherwise.
EcState ec_connect(const Config& config, const MasterSecret& master, LmuImage& image, Rng& rng);

/// Applies one command from the central unit. Only the lifecycle transitions
/// below change phase; everything else yields an InvalidTransition action
/// with the state untouched.
///   Connected --StartLogging--> Logging
///   Logging   --Stop---------> Closing   (plus CloseRequested)
///   Logging   --Sleep--------> Sleep
///   Sleep     --Wake---------> Logging
///   any       --Status-------> unchanged (plus Status action)
std::vector<Action> handle_command(EcState& state, const Command& cmd);

/// Advances time. In Logging, emits one SampleRequest whenever the tick hits
/// the sample interval and no request is outstanding. Quiescent phases emit
/// nothing.
std::vector<Action> tick(EcState& state, uint64_t now);

/// Seals and appends one sample record (phase must be Logging). Commits the
/// integrity section every integrity_update_interval appends. On a full
/// image the phase moves to Closing instead of dropping data silently.
AppendOutcome on_sample(EcState& state, LmuImage& image, const LogRecord& sample);

/// Seals and appends one event record under the same rules as on_sample.
AppendOutcome log_event(EcState& state, LmuImage& image, uint16_t event_code, uint32_t detail,
                        uint64_t now, LogRecord* out = nullptr);

/// Clears the outstanding sample request after the transport gave up on it.
void on_sample_failed(EcState& state);

/// Appends the single session summary record and commits the final integrity
/// update; phase becomes Closed. When the summary cannot fit the remaining
/// capacity the image is still left chain-committed over its existing blocks
/// and meta_written is false.
CloseResult ec_close(EcState& state, LmuImage& image, uint64_t now);

} // namespace sel::ec
