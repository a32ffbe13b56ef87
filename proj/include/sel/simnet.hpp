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

#include <filesystem>

#include "json.hpp"

#include "sel/controller.hpp"
#include "sel/porting.hpp"

namespace sel::sim {

// Deterministic tick simulation of a central unit and daisy-chained
// controllers, each with its own monitored device and memory unit:
//
//   MPU --seg0-- EC1 --seg1-- EC2 -- ... -- ECn
//                 |            |
//                MED1         MED2        (one private link per pair)
//
// One tick is one bus slot: a frame crosses one chain segment per tick and
// its hop counter increments per segment. Couplers pass frames through
// passively, so a dead controller never blocks its neighbours' traffic.
// Every random decision comes from streams forked off the scenario seed;
// identical (config, seed) runs are byte-identical.

// Framed serial line. Layout: sync 0x7E | dest | src | hop_count |
// length u16 | payload | crc16. The CRC (CCITT polynomial 0x1021, init
// 0xFFFF) covers everything except the sync byte.
inline constexpr uint8_t kFrameSync = 0x7E;
inline constexpr size_t kFrameOverhead = 8;

struct Frame {
    uint8_t dest = 0;
    uint8_t src = 0;
    uint8_t hop_count = 0;
    Bytes payload;

    bool operator==(const Frame&) const = default;
};

uint16_t crc16_ccitt(ConstBytes data, uint16_t init = 0xFFFF);

Bytes encode_frame(const Frame& frame);

/// Throws on bad sync, length mismatch or CRC failure.
Frame decode_frame(ConstBytes data);

// Node addressing: MPU is 0, controllers are 1..127, a monitored device is
// its controller's address with the high bit set.
inline constexpr uint8_t kMpuAddress = 0;
inline constexpr uint8_t kMedAddressBit = 0x80;

// Sample transport policy: a request times out after kResponseTimeout ticks;
// after kMaxSampleAttempts consecutive failures (one-tick backoff between
// sends) the controller logs a link-failure event record and moves on.
inline constexpr uint64_t kResponseTimeout = 12;
inline constexpr int kMaxSampleAttempts = 3;

/// Deterministic battery-pack model: linear discharge, triangular
/// temperature cycle with period 64 ticks, charge estimated linearly over
/// the remaining voltage range.
struct MedProfile {
    uint32_t initial_voltage_mv = 4200;
    uint32_t discharge_mv_per_tick = 0;
    int16_t temp_base_centi_c = 2500;
    int16_t temp_amplitude = 0;
    std::vector<std::pair<uint64_t, uint16_t>> fault_schedule; // (tick, event_code)
};

SamplePayload med_sample(const MedProfile& profile, uint64_t tick);

enum class FaultKind { Corrupt, Drop, Delay };

/// Fault on one link, either probabilistic (parts per million of frames) or
/// pinned to explicit ticks. Link names: "chain:<segment>" with segment 0
/// between the MPU and the first controller, or "med:<address>".
struct FaultSpec {
    FaultKind kind = FaultKind::Corrupt;
    std::string link;
    uint32_t ppm = 0;
    std::vector<uint64_t> ticks;
    uint32_t delay_ticks = 0;
};

struct EcEntry {
    Id16 ec_id{};
    uint8_t address = 0;
    uint32_t sample_interval = 4;
    uint32_t integrity_update_interval = 8;
    uint32_t capacity_blocks = 64;
    uint32_t record_payload_max = 64;
    MedProfile med;
};

struct KillSpec {
    uint8_t address = 0;
    uint64_t tick = 0;
};

struct ScenarioConfig {
    uint64_t seed = 0;
    uint64_t ticks = 0;
    uint64_t stop_margin_ticks = 16;
    std::vector<EcEntry> ecs;
    std::vector<FaultSpec> faults;
    std::vector<KillSpec> kills;
};

/// Throws SelError(BadConfig) on malformed or inconsistent input.
ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario_file(const std::filesystem::path& path);

struct OracleEntry {
    uint64_t seq = 0;
    LogRecord record;

    bool operator==(const OracleEntry&) const = default;
};

struct SimEvent {
    uint64_t tick = 0;
    std::string node;
    std::string kind;
    int64_t detail = 0;
};

struct EcResult {
    uint8_t address = 0;
    Bytes image_bytes;
    SvdCredential credential;
    std::vector<OracleEntry> oracle;
    bool closed_cleanly = false;
};

struct SimResult {
    std::vector<EcResult> ecs;
    std::vector<SimEvent> events;
    uint64_t ticks_executed = 0;
};

class Sim {
public:
    /// Validates the topology and provisions every controller: identities,
    /// master secret and credential, an empty image, and the initial connect.
    static Sim build(const ScenarioConfig& config, uint64_t seed);

    /// Activates a fault from the current tick on. Throws UnknownLink for a
    /// link that does not exist.
    void inject_fault(const FaultSpec& spec);

    /// Runs the scripted scenario: start-logging commands right after
    /// connect, stop commands stop_margin_ticks before the end, hop-by-hop
    /// frame routing, CRC screening with bounded retries, scripted kills.
    SimResult run(uint64_t ticks);

private:
    Sim() = default;

    struct LinkFaults {
        uint32_t corrupt_ppm = 0;
        std::vector<uint64_t> corrupt_ticks;
        uint32_t drop_ppm = 0;
        std::vector<uint64_t> drop_ticks;
        uint32_t delay_ticks = 0;
    };

    struct Link {
        std::string name;
        LinkFaults faults;
        Rng rng{0};
    };

    struct Flight {
        Frame frame;
        std::vector<size_t> route; // link indices, traversed in order
        size_t next_segment = 0;
        uint64_t due = 0; // tick at which the next segment completes
        std::vector<uint32_t> corrupt_bits;
    };

    struct Node {
        EcEntry cfg;
        ec::EcState state;
        LmuImage image;
        MasterSecret master;
        SvdCredential credential;
        std::vector<OracleEntry> oracle;
        bool dead = false;
        bool closed = false;
        // sample transport bookkeeping
        uint64_t sent_tick = 0;
        int attempts = 0;
        bool resend_pending = false;
        uint64_t resend_at = 0;
    };

    size_t position_of(uint8_t address) const; // 1-based chain position
    std::vector<size_t> route_between(uint8_t src, uint8_t dest) const;
    void send(uint64_t now, uint8_t src, uint8_t dest, Bytes payload);
    void event(uint64_t tick, std::string node, std::string kind, int64_t detail = 0);
    void traverse_flights(uint64_t now);
    void deliver(uint64_t now, const Flight& flight);
    void handle_ec_frame(uint64_t now, Node& node, const Frame& frame);
    void handle_med_frame(uint64_t now, size_t ec_index, const Frame& frame);
    void send_sample_request(uint64_t now, Node& node);
    void step_ec(uint64_t now, Node& node);
    void close_node(uint64_t now, Node& node);
    void record_oracle(Node& node, uint64_t seq, const LogRecord& record);

    ScenarioConfig config_;
    std::vector<Node> nodes_;
    std::vector<Link> links_; // chain segments first, then one med link per node
    std::vector<Flight> flights_;
    std::vector<SimEvent> events_;
};

/// Convenience wrapper: build and run in one call.
SimResult run_scenario(const ScenarioConfig& config,
                       std::optional<uint64_t> seed_override = {});

/// Writes ec<addr>.lmu and ec<addr>.svd per controller plus oracle.jsonl and
/// events.jsonl into the directory (created if missing).
void write_outputs(const SimResult& result, const std::filesystem::path& dir);

} // namespace sel::sim
