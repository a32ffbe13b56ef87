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

#include "sel/simnet.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace sel::sim {

namespace {

// Frame payload opcodes.
constexpr uint8_t kOpStartLogging = 0x01;
constexpr uint8_t kOpStop = 0x02;
constexpr uint8_t kOpSleep = 0x03;
constexpr uint8_t kOpWake = 0x04;
constexpr uint8_t kOpStatusReq = 0x05;
constexpr uint8_t kOpSampleRequest = 0x10;
constexpr uint8_t kOpSampleResponse = 0x11;
constexpr uint8_t kOpMedEvent = 0x12;
constexpr uint8_t kOpStatusReply = 0x15;

// Rng stream ids forked off the scenario seed.
constexpr uint64_t kStreamIdentity = 0x100;
constexpr uint64_t kStreamRuntime = 0x200;
constexpr uint64_t kStreamChainLink = 0x300;
constexpr uint64_t kStreamMedLink = 0x400;

std::string ec_node_name(uint8_t address) {
    return "ec:" + std::to_string(address);
}

} // namespace

uint16_t crc16_ccitt(ConstBytes data, uint16_t init) {
    uint16_t crc = init;
    for (uint8_t byte : data) {
        crc = static_cast<uint16_t>(crc ^ (static_cast<uint16_t>(byte) << 8));
        for (int bit = 0; bit < 8; ++bit) {
            if (crc & 0x8000)
                crc = static_cast<uint16_t>((crc << 1) ^ 0x1021);
            else
                crc = static_cast<uint16_t>(crc << 1);
        }
    }
    return crc;
}

Bytes encode_frame(const Frame& frame) {
    if (frame.payload.size() > 0xFFFF) throw SelError(Errc::BadParams, "payload too long");
    ByteWriter w;
    w.u8(kFrameSync);
    w.u8(frame.dest);
    w.u8(frame.src);
    w.u8(frame.hop_count);
    w.u16(static_cast<uint16_t>(frame.payload.size()));
    w.bytes(frame.payload);
    Bytes out = w.take();
    uint16_t crc = crc16_ccitt(ConstBytes(out).subspan(1));
    out.push_back(static_cast<uint8_t>(crc));
    out.push_back(static_cast<uint8_t>(crc >> 8));
    return out;
}

Frame decode_frame(ConstBytes data) {
    if (data.size() < kFrameOverhead) throw SelError(Errc::Truncated, "frame shorter than header");
    if (data[0] != kFrameSync) throw SelError(Errc::BadMagic, "missing sync byte");

    Frame frame;
    frame.dest = data[1];
    frame.src = data[2];
    frame.hop_count = data[3];
    uint16_t length = static_cast<uint16_t>(data[4] | (data[5] << 8));
    if (data.size() != kFrameOverhead + length)
        throw SelError(Errc::Truncated, "frame length mismatch");

    uint16_t stored = static_cast<uint16_t>(data[data.size() - 2] | (data[data.size() - 1] << 8));
    uint16_t computed = crc16_ccitt(data.subspan(1, data.size() - 3));
    if (stored != computed) throw SelError(Errc::IntegrityMismatch, "frame crc mismatch");

    frame.payload.assign(data.begin() + 6, data.end() - 2);
    return frame;
}

SamplePayload med_sample(const MedProfile& profile, uint64_t tick) {
    SamplePayload sample;

    uint64_t drained = static_cast<uint64_t>(profile.discharge_mv_per_tick) * tick;
    sample.voltage_mv =
        drained >= profile.initial_voltage_mv
            ? 0
            : profile.initial_voltage_mv - static_cast<uint32_t>(drained);

    // Triangle wave over a 64-tick period: 0 at phase 0, peak at phase 32.
    uint64_t phase = tick % 64;
    uint64_t rise = std::min(phase, 64 - phase);
    int32_t temp = profile.temp_base_centi_c +
                   static_cast<int32_t>(profile.temp_amplitude) * static_cast<int32_t>(rise) / 32;
    sample.temp_centi_c = static_cast<int16_t>(std::clamp<int32_t>(temp, INT16_MIN, INT16_MAX));

    // Charge estimate: linear between 0 mV (empty) and the initial voltage.
    if (profile.initial_voltage_mv == 0) {
        sample.soc_permille = 0;
    } else {
        uint64_t permille =
            static_cast<uint64_t>(sample.voltage_mv) * 1000 / profile.initial_voltage_mv;
        sample.soc_permille = static_cast<uint16_t>(std::min<uint64_t>(permille, 1000));
    }

    sample.current_ma = -static_cast<int32_t>(profile.discharge_mv_per_tick) * 10;
    return sample;
}

ScenarioConfig parse_scenario(const nlohmann::json& j) {
    try {
        ScenarioConfig cfg;
        cfg.seed = j.at("seed").get<uint64_t>();
        cfg.ticks = j.at("ticks").get<uint64_t>();
        if (j.contains("stop_margin_ticks"))
            cfg.stop_margin_ticks = j.at("stop_margin_ticks").get<uint64_t>();

        for (const auto& e : j.at("ecs")) {
            EcEntry entry;
            std::string hex = e.at("ec_id_hex").get<std::string>();
            if (hex.size() != 32) throw SelError(Errc::BadConfig, "ec_id_hex must be 32 hex chars");
            entry.ec_id = to_array<16>(from_hex(hex));
            entry.address = e.at("address").get<uint8_t>();
            entry.sample_interval = e.at("sample_interval").get<uint32_t>();
            entry.integrity_update_interval = e.at("integrity_update_interval").get<uint32_t>();
            entry.capacity_blocks = e.at("capacity_blocks").get<uint32_t>();
            if (e.contains("record_payload_max"))
                entry.record_payload_max = e.at("record_payload_max").get<uint32_t>();

            const auto& med = e.at("med");
            entry.med.initial_voltage_mv = med.at("initial_voltage_mv").get<uint32_t>();
            entry.med.discharge_mv_per_tick = med.at("discharge_mv_per_tick").get<uint32_t>();
            entry.med.temp_base_centi_c = med.at("temp_base_centi_c").get<int16_t>();
            entry.med.temp_amplitude = med.at("temp_amplitude").get<int16_t>();
            if (med.contains("fault_schedule")) {
                for (const auto& f : med.at("fault_schedule"))
                    entry.med.fault_schedule.emplace_back(f.at(0).get<uint64_t>(),
                                                          f.at(1).get<uint16_t>());
            }
            cfg.ecs.push_back(std::move(entry));
        }

        if (j.contains("faults")) {
            for (const auto& f : j.at("faults")) {
                FaultSpec spec;
                std::string kind = f.at("kind").get<std::string>();
                if (kind == "corrupt")
                    spec.kind = FaultKind::Corrupt;
                else if (kind == "drop")
                    spec.kind = FaultKind::Drop;
                else if (kind == "delay")
                    spec.kind = FaultKind::Delay;
                else
                    throw SelError(Errc::BadConfig, "unknown fault kind: " + kind);
                spec.link = f.at("link").get<std::string>();
                if (f.contains("ppm")) spec.ppm = f.at("ppm").get<uint32_t>();
                if (f.contains("ticks"))
                    spec.ticks = f.at("ticks").get<std::vector<uint64_t>>();
                if (f.contains("delay_ticks")) spec.delay_ticks = f.at("delay_ticks").get<uint32_t>();
                cfg.faults.push_back(std::move(spec));
            }
        }

        if (j.contains("kill")) {
            for (const auto& k : j.at("kill")) {
                KillSpec spec;
                spec.address = k.at("address").get<uint8_t>();
                spec.tick = k.at("tick").get<uint64_t>();
                cfg.kills.push_back(spec);
            }
        }
        return cfg;
    } catch (const SelError&) {
        throw;
    } catch (const std::exception& e) {
        throw SelError(Errc::BadConfig, e.what());
    }
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SelError(Errc::IoError, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw SelError(Errc::BadConfig, e.what());
    }
    return parse_scenario(j);
}

Sim Sim::build(const ScenarioConfig& config, uint64_t seed) {
    if (config.ecs.empty()) throw SelError(Errc::BadConfig, "at least one controller required");
    if (config.ticks < 1) throw SelError(Errc::BadConfig, "ticks must be at least 1");
    if (config.stop_margin_ticks >= config.ticks)
        throw SelError(Errc::BadConfig, "stop margin leaves no run time");
    if (config.stop_margin_ticks < config.ecs.size() + 2)
        throw SelError(Errc::BadConfig, "stop margin too small for the chain length");

    std::set<uint8_t> addresses;
    for (const EcEntry& e : config.ecs) {
        if (e.address < 1 || e.address > 127)
            throw SelError(Errc::BadConfig, "controller addresses must be in 1..127");
        if (!addresses.insert(e.address).second)
            throw SelError(Errc::BadConfig, "duplicate controller address");
        if (e.sample_interval < 1) throw SelError(Errc::BadConfig, "sample_interval must be >= 1");
    }
    for (const KillSpec& k : config.kills) {
        if (addresses.find(k.address) == addresses.end())
            throw SelError(Errc::BadConfig, "kill refers to unknown address");
    }

    Sim sim;
    sim.config_ = config;
    Rng root(seed);

    // Chain segments, then one device link per controller.
    for (size_t i = 0; i < config.ecs.size(); ++i) {
        Link link;
        link.name = "chain:" + std::to_string(i);
        link.rng = root.fork(kStreamChainLink + i);
        sim.links_.push_back(std::move(link));
    }
    for (const EcEntry& e : config.ecs) {
        Link link;
        link.name = "med:" + std::to_string(e.address);
        link.rng = root.fork(kStreamMedLink + e.address);
        sim.links_.push_back(std::move(link));
    }

    for (const EcEntry& entry : config.ecs) {
        Node node;
        node.cfg = entry;

        // Identities and the pack's master secret come from a stream bound to
        // the controller address, independent of every other node.
        Rng ids = root.fork(kStreamIdentity + entry.address);
        HeaderParams params;
        params.ec_id = entry.ec_id;
        ids.fill(params.lmu_id);
        ids.fill(params.med_id);
        ids.fill(params.svd_id);
        ids.fill(node.master.secret);
        params.capacity_blocks = entry.capacity_blocks;
        params.record_payload_max = entry.record_payload_max;

        node.credential.svd_id = params.svd_id;
        node.credential.lmu_id = params.lmu_id;
        node.credential.master = node.master;

        node.image = create_image(params, 0);
        Rng runtime = root.fork(kStreamRuntime + entry.address);
        ec::Config ec_config{entry.ec_id, entry.integrity_update_interval};
        node.state = ec_connect(ec_config, node.master, node.image, runtime);

        sim.nodes_.push_back(std::move(node));
    }

    for (const FaultSpec& fault : config.faults) sim.inject_fault(fault);
    return sim;
}

size_t Sim::position_of(uint8_t address) const {
    for (size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].cfg.address == address) return i + 1;
    throw SelError(Errc::UnknownLink, "no controller at address " + std::to_string(address));
}

std::vector<size_t> Sim::route_between(uint8_t src, uint8_t dest) const {
    std::vector<size_t> route;
    const size_t med_base = nodes_.size();

    auto chain_route = [&](size_t from_pos, size_t to_pos) {
        if (from_pos < to_pos)
            for (size_t s = from_pos; s < to_pos; ++s) route.push_back(s);
        else
            for (size_t s = from_pos; s > to_pos; --s) route.push_back(s - 1);
    };

    bool src_med = (src & kMedAddressBit) != 0;
    bool dest_med = (dest & kMedAddressBit) != 0;
    if (src_med || dest_med) {
        uint8_t ec_addr = static_cast<uint8_t>((src_med ? src : dest) & ~kMedAddressBit);
        size_t ec_pos = position_of(ec_addr);
        route.push_back(med_base + (ec_pos - 1));
        return route; // device links are single-segment and private
    }

    size_t from = src == kMpuAddress ? 0 : position_of(src);
    size_t to = dest == kMpuAddress ? 0 : position_of(dest);
    chain_route(from, to);
    return route;
}

void Sim::send(uint64_t now, uint8_t src, uint8_t dest, Bytes payload) {
    Flight flight;
    flight.frame.dest = dest;
    flight.frame.src = src;
    flight.frame.payload = std::move(payload);
    flight.route = route_between(src, dest);
    if (flight.route.empty()) throw SelError(Errc::UnknownLink, "no route");
    flight.due = now + 1 + links_[flight.route[0]].faults.delay_ticks;
    flights_.push_back(std::move(flight));
}

void Sim::event(uint64_t tick, std::string node, std::string kind, int64_t detail) {
    events_.push_back({tick, std::move(node), std::move(kind), detail});
}

void Sim::traverse_flights(uint64_t now) {
    std::vector<Flight> arrived;
    for (auto it = flights_.begin(); it != flights_.end();) {
        Flight& flight = *it;
        if (flight.due != now) {
            ++it;
            continue;
        }

        Link& link = links_[flight.route[flight.next_segment]];
        bool drop = false;
        if (link.faults.drop_ppm > 0 && link.rng.below(1000000) < link.faults.drop_ppm)
            drop = true;
        if (std::find(link.faults.drop_ticks.begin(), link.faults.drop_ticks.end(), now) !=
            link.faults.drop_ticks.end())
            drop = true;
        if (drop) {
            event(now, "link:" + link.name, "frame_dropped", flight.frame.dest);
            it = flights_.erase(it);
            continue;
        }

        bool corrupt = false;
        if (link.faults.corrupt_ppm > 0 && link.rng.below(1000000) < link.faults.corrupt_ppm)
            corrupt = true;
        if (std::find(link.faults.corrupt_ticks.begin(), link.faults.corrupt_ticks.end(), now) !=
            link.faults.corrupt_ticks.end())
            corrupt = true;
        if (corrupt) {
            size_t encoded_bits = (kFrameOverhead + flight.frame.payload.size()) * 8;
            flight.corrupt_bits.push_back(static_cast<uint32_t>(link.rng.below(encoded_bits)));
            event(now, "link:" + link.name, "frame_corrupted", flight.frame.dest);
        }

        flight.frame.hop_count += 1;
        flight.next_segment += 1;
        if (flight.next_segment == flight.route.size()) {
            arrived.push_back(std::move(flight));
            it = flights_.erase(it);
        } else {
            flight.due = now + 1 + links_[flight.route[flight.next_segment]].faults.delay_ticks;
            ++it;
        }
    }
    for (const Flight& flight : arrived) deliver(now, flight);
}

void Sim::deliver(uint64_t now, const Flight& flight) {
    Bytes wire = encode_frame(flight.frame);
    for (uint32_t bit : flight.corrupt_bits) wire[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));

    Frame frame;
    try {
        frame = decode_frame(wire);
    } catch (const SelError&) {
        // Corruption is caught at the receiving port; the sender recovers
        // through its timeout-and-retry policy.
        event(now, "bus", "frame_crc_reject", flight.frame.dest);
        return;
    }

    if (frame.dest == kMpuAddress) {
        event(now, "mpu", "frame_rx", frame.payload.empty() ? 0 : frame.payload[0]);
        return;
    }
    if ((frame.dest & kMedAddressBit) != 0) {
        uint8_t ec_addr = static_cast<uint8_t>(frame.dest & ~kMedAddressBit);
        handle_med_frame(now, position_of(ec_addr) - 1, frame);
        return;
    }

    Node& node = nodes_[position_of(frame.dest) - 1];
    if (node.dead) {
        event(now, ec_node_name(node.cfg.address), "frame_to_dead_node", 0);
        return;
    }
    handle_ec_frame(now, node, frame);
}

void Sim::record_oracle(Node& node, uint64_t seq, const LogRecord& record) {
    node.oracle.push_back({seq, record});
}

void Sim::close_node(uint64_t now, Node& node) {
    ec::CloseResult result = ec_close(node.state, node.image, now);
    if (result.meta_written) {
        record_oracle(node, node.state.next_seq - 1, *result.meta);
        node.closed = true;
        event(now, ec_node_name(node.cfg.address), "session_closed",
              static_cast<int64_t>(node.image.integrity.block_count));
    } else {
        event(now, ec_node_name(node.cfg.address), "session_closed_without_meta",
              static_cast<int64_t>(node.image.integrity.block_count));
    }
}

void Sim::handle_ec_frame(uint64_t now, Node& node, const Frame& frame) {
    if (frame.payload.empty()) return;
    const std::string name = ec_node_name(node.cfg.address);
    ByteReader r(frame.payload);
    uint8_t op = r.u8();

    auto run_command = [&](ec::Command cmd) {
        for (const ec::Action& action : handle_command(node.state, cmd)) {
            switch (action.kind) {
            case ec::ActionKind::CloseRequested: close_node(now, node); break;
            case ec::ActionKind::InvalidTransition:
                event(now, name, "invalid_command", static_cast<int64_t>(op));
                break;
            case ec::ActionKind::Status: {
                ByteWriter w;
                w.u8(kOpStatusReply);
                w.u8(static_cast<uint8_t>(action.status.phase));
                w.u64(action.status.block_count);
                send(now, node.cfg.address, kMpuAddress, w.take());
                break;
            }
            case ec::ActionKind::SampleRequest: break;
            }
        }
    };

    switch (op) {
    case kOpStartLogging: {
        uint32_t interval = r.u32();
        run_command({ec::CommandKind::StartLogging, interval});
        break;
    }
    case kOpStop: run_command({ec::CommandKind::Stop}); break;
    case kOpSleep: run_command({ec::CommandKind::Sleep}); break;
    case kOpWake: run_command({ec::CommandKind::Wake}); break;
    case kOpStatusReq: run_command({ec::CommandKind::Status}); break;

    case kOpSampleResponse: {
        if (!node.state.outstanding_sample) {
            event(now, name, "unexpected_sample_response", 0);
            break;
        }
        LogRecord record;
        record.timestamp = r.u64();
        SamplePayload sample;
        sample.voltage_mv = r.u32();
        sample.current_ma = r.i32();
        sample.temp_centi_c = r.i16();
        sample.soc_permille = r.u16();
        record.payload = sample;

        node.attempts = 0;
        node.resend_pending = false;
        ec::AppendOutcome outcome = on_sample(node.state, node.image, record);
        if (outcome == ec::AppendOutcome::Appended) {
            record_oracle(node, node.state.next_seq - 1, record);
        } else if (outcome == ec::AppendOutcome::CapacityClosing) {
            event(now, name, "capacity_reached", static_cast<int64_t>(node.state.next_seq));
            close_node(now, node);
        } else {
            event(now, name, "sample_dropped_by_phase", 0);
        }
        break;
    }

    case kOpMedEvent: {
        uint64_t scheduled = r.u64();
        uint16_t code = r.u16();
        LogRecord record;
        ec::AppendOutcome outcome = log_event(node.state, node.image, code,
                                              static_cast<uint32_t>(scheduled), now, &record);
        if (outcome == ec::AppendOutcome::Appended) {
            record_oracle(node, node.state.next_seq - 1, record);
            event(now, name, "device_event_logged", code);
        } else if (outcome == ec::AppendOutcome::CapacityClosing) {
            event(now, name, "capacity_reached", static_cast<int64_t>(node.state.next_seq));
            close_node(now, node);
        } else {
            event(now, name, "device_event_ignored", code);
        }
        break;
    }

    default: event(now, name, "unknown_opcode", op); break;
    }
}

void Sim::handle_med_frame(uint64_t now, size_t ec_index, const Frame& frame) {
    Node& node = nodes_[ec_index];
    ByteReader r(frame.payload);
    if (frame.payload.empty() || r.u8() != kOpSampleRequest) return;

    SamplePayload sample = med_sample(node.cfg.med, now);
    ByteWriter w;
    w.u8(kOpSampleResponse);
    w.u64(now); // sample timestamp: the tick the device was polled
    w.u32(sample.voltage_mv);
    w.i32(sample.current_ma);
    w.i16(sample.temp_centi_c);
    w.u16(sample.soc_permille);
    uint8_t med_addr = static_cast<uint8_t>(node.cfg.address | kMedAddressBit);
    send(now, med_addr, node.cfg.address, w.take());
}

void Sim::send_sample_request(uint64_t now, Node& node) {
    ByteWriter w;
    w.u8(kOpSampleRequest);
    w.u64(now);
    uint8_t med_addr = static_cast<uint8_t>(node.cfg.address | kMedAddressBit);
    send(now, node.cfg.address, med_addr, w.take());
    node.sent_tick = now;
}

void Sim::step_ec(uint64_t now, Node& node) {
    const std::string name = ec_node_name(node.cfg.address);

    // Timeout-and-retry for the one outstanding sample request.
    if (node.state.outstanding_sample) {
        if (node.resend_pending && now >= node.resend_at) {
            node.resend_pending = false;
            node.attempts += 1;
            send_sample_request(now, node);
            event(now, name, "sample_retry", node.attempts);
        } else if (!node.resend_pending && now >= node.sent_tick + kResponseTimeout) {
            if (node.attempts >= kMaxSampleAttempts) {
                on_sample_failed(node.state);
                node.attempts = 0;
                LogRecord record;
                ec::AppendOutcome outcome = log_event(node.state, node.image, kEventLinkFailure,
                                                      kMaxSampleAttempts, now, &record);
                if (outcome == ec::AppendOutcome::Appended) {
                    record_oracle(node, node.state.next_seq - 1, record);
                    event(now, name, "link_failure_logged", kMaxSampleAttempts);
                } else if (outcome == ec::AppendOutcome::CapacityClosing) {
                    event(now, name, "capacity_reached", static_cast<int64_t>(node.state.next_seq));
                    close_node(now, node);
                }
            } else {
                node.resend_pending = true;
                node.resend_at = now + 1; // one-tick backoff
                event(now, name, "sample_timeout", node.attempts);
            }
        }
    }

    for (const ec::Action& action : tick(node.state, now)) {
        if (action.kind == ec::ActionKind::SampleRequest) {
            node.attempts = 1;
            node.resend_pending = false;
            send_sample_request(now, node);
        }
    }
}

void Sim::inject_fault(const FaultSpec& spec) {
    if (spec.ppm > 1000000) throw SelError(Errc::BadConfig, "ppm above one million");
    auto it = std::find_if(links_.begin(), links_.end(),
                           [&](const Link& l) { return l.name == spec.link; });
    if (it == links_.end()) throw SelError(Errc::UnknownLink, "no such link: " + spec.link);

    switch (spec.kind) {
    case FaultKind::Corrupt:
        it->faults.corrupt_ppm = spec.ppm;
        it->faults.corrupt_ticks = spec.ticks;
        break;
    case FaultKind::Drop:
        it->faults.drop_ppm = spec.ppm;
        it->faults.drop_ticks = spec.ticks;
        break;
    case FaultKind::Delay: it->faults.delay_ticks = spec.delay_ticks; break;
    }
}

SimResult Sim::run(uint64_t ticks) {
    if (ticks < 1) throw SelError(Errc::BadParams, "ticks must be at least 1");
    if (config_.stop_margin_ticks >= ticks)
        throw SelError(Errc::BadParams, "stop margin leaves no run time");
    const uint64_t start_tick = 1;
    const uint64_t stop_tick = ticks - config_.stop_margin_ticks;

    for (uint64_t now = 0; now < ticks; ++now) {
        for (const KillSpec& kill : config_.kills) {
            if (kill.tick != now) continue;
            Node& node = nodes_[position_of(kill.address) - 1];
            if (!node.dead) {
                node.dead = true;
                event(now, ec_node_name(kill.address), "killed", 0);
            }
        }

        if (now == start_tick) {
            for (const Node& node : nodes_) {
                ByteWriter w;
                w.u8(kOpStartLogging);
                w.u32(node.cfg.sample_interval);
                send(now, kMpuAddress, node.cfg.address, w.take());
            }
            event(now, "mpu", "start_broadcast", static_cast<int64_t>(nodes_.size()));
        }
        if (now == stop_tick) {
            for (const Node& node : nodes_) {
                ByteWriter w;
                w.u8(kOpStop);
                send(now, kMpuAddress, node.cfg.address, w.take());
            }
            event(now, "mpu", "stop_broadcast", static_cast<int64_t>(nodes_.size()));
        }

        traverse_flights(now);

        for (Node& node : nodes_) {
            if (node.dead) continue;
            step_ec(now, node);
        }

        for (Node& node : nodes_) {
            for (const auto& [tick, code] : node.cfg.med.fault_schedule) {
                if (tick != now) continue;
                ByteWriter w;
                w.u8(kOpMedEvent);
                w.u64(tick);
                w.u16(code);
                uint8_t med_addr = static_cast<uint8_t>(node.cfg.address | kMedAddressBit);
                send(now, med_addr, node.cfg.address, w.take());
                event(now, "med:" + std::to_string(node.cfg.address), "device_fault", code);
            }
        }
    }

    SimResult result;
    result.ticks_executed = ticks;
    result.events = events_;
    for (Node& node : nodes_) {
        EcResult ec_result;
        ec_result.address = node.cfg.address;
        ec_result.image_bytes = serialize_image(node.image);
        ec_result.credential = node.credential;
        ec_result.oracle = node.oracle;
        ec_result.closed_cleanly = node.closed;
        result.ecs.push_back(std::move(ec_result));
    }
    return result;
}

SimResult run_scenario(const ScenarioConfig& config, std::optional<uint64_t> seed_override) {
    Sim sim = Sim::build(config, seed_override.value_or(config.seed));
    return sim.run(config.ticks);
}

void write_outputs(const SimResult& result, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw SelError(Errc::IoError, "cannot create " + dir.string());

    auto write_file = [](const std::filesystem::path& path, ConstBytes data) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw SelError(Errc::IoError, "cannot write " + path.string());
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size()));
    };

    std::ofstream oracle(dir / "oracle.jsonl", std::ios::trunc);
    if (!oracle) throw SelError(Errc::IoError, "cannot write oracle.jsonl");
    for (const EcResult& ec_result : result.ecs) {
        std::string base = "ec" + std::to_string(ec_result.address);
        write_file(dir / (base + ".lmu"), ec_result.image_bytes);
        write_file(dir / (base + ".svd"), encode_svd(ec_result.credential));
        for (const OracleEntry& entry : ec_result.oracle) {
            nlohmann::ordered_json line;
            line["ec"] = ec_result.address;
            nlohmann::ordered_json rec = record_to_json(entry.record, entry.seq);
            for (auto& [key, value] : rec.items()) line[key] = value;
            oracle << line.dump() << "\n";
        }
    }

    std::ofstream events(dir / "events.jsonl", std::ios::trunc);
    if (!events) throw SelError(Errc::IoError, "cannot write events.jsonl");
    for (const SimEvent& e : result.events) {
        nlohmann::ordered_json line;
        line["tick"] = e.tick;
        line["node"] = e.node;
        line["kind"] = e.kind;
        line["detail"] = e.detail;
        events << line.dump() << "\n";
    }
}

} // namespace sel::sim
