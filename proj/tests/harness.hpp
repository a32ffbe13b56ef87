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

#include "sel/controller.hpp"
#include "sel/porting.hpp"
#include "sel/simnet.hpp"

namespace sel::testing {

struct Pack {
    LmuImage image;
    SvdCredential credential;
    MasterSecret master;
    ec::EcState state;
    std::vector<LogRecord> plaintext; // every record sealed, in order
};

inline LogRecord make_sample(uint64_t ts, uint32_t voltage = 4000) {
    LogRecord r;
    r.timestamp = ts;
    r.payload = SamplePayload{voltage, -150, static_cast<int16_t>(2500 + ts % 97),
                              static_cast<uint16_t>(900 - ts % 11)};
    return r;
}

/// Provisioned pack with a connected controller and an empty image.
inline Pack make_pack(uint64_t seed, uint32_t capacity = 16, uint32_t payload_max = 64,
                      uint32_t integrity_interval = 8) {
    Rng rng(seed);
    Pack pack;

    HeaderParams params;
    rng.fill(params.lmu_id);
    rng.fill(params.ec_id);
    rng.fill(params.med_id);
    rng.fill(params.svd_id);
    params.capacity_blocks = capacity;
    params.record_payload_max = payload_max;
    rng.fill(pack.master.secret);

    pack.credential.svd_id = params.svd_id;
    pack.credential.lmu_id = params.lmu_id;
    pack.credential.master = pack.master;

    pack.image = create_image(params, 0);
    ec::Config config{params.ec_id, integrity_interval};
    pack.state = ec_connect(config, pack.master, pack.image, rng);
    return pack;
}

/// Connected pack with `samples` appended and the session closed.
inline Pack closed_session(uint64_t seed, uint32_t samples, uint32_t capacity = 16,
                           uint32_t payload_max = 64, uint32_t integrity_interval = 8) {
    Pack pack = make_pack(seed, capacity, payload_max, integrity_interval);
    ec::handle_command(pack.state, {ec::CommandKind::StartLogging, 4});
    for (uint32_t i = 0; i < samples; ++i) {
        LogRecord sample = make_sample(4 * i + 2, 4000 - 3 * i);
        if (on_sample(pack.state, pack.image, sample) == ec::AppendOutcome::Appended)
            pack.plaintext.push_back(sample);
    }
    ec::CloseResult closed = ec_close(pack.state, pack.image, 4 * samples + 10);
    if (closed.meta_written) pack.plaintext.push_back(*closed.meta);
    return pack;
}

inline PortingInputs inputs_for(const Pack& pack) {
    PortingInputs inputs;
    inputs.image_bytes = serialize_image(pack.image);
    inputs.credential = pack.credential;
    return inputs;
}

/// Four daisy-chained controllers, 256 ticks, one scheduled device fault.
inline sim::ScenarioConfig demo_scenario(uint64_t seed = 4242) {
    sim::ScenarioConfig config;
    config.seed = seed;
    config.ticks = 256;
    config.stop_margin_ticks = 16;
    for (uint8_t addr = 1; addr <= 4; ++addr) {
        sim::EcEntry entry;
        entry.ec_id.fill(addr);
        entry.address = addr;
        entry.sample_interval = 4;
        entry.integrity_update_interval = 8;
        entry.capacity_blocks = 80;
        entry.record_payload_max = 64;
        entry.med.initial_voltage_mv = 4200 - 50u * addr;
        entry.med.discharge_mv_per_tick = 3;
        entry.med.temp_base_centi_c = 2480;
        entry.med.temp_amplitude = 150;
        if (addr == 2) entry.med.fault_schedule = {{100, 0x0101}};
        config.ecs.push_back(entry);
    }
    return config;
}

inline bool results_equal(const sim::SimResult& a, const sim::SimResult& b) {
    if (a.ecs.size() != b.ecs.size()) return false;
    for (size_t i = 0; i < a.ecs.size(); ++i) {
        if (a.ecs[i].image_bytes != b.ecs[i].image_bytes) return false;
        if (!(a.ecs[i].credential == b.ecs[i].credential)) return false;
        if (!(a.ecs[i].oracle == b.ecs[i].oracle)) return false;
    }
    return a.events.size() == b.events.size();
}

} // namespace sel::testing
