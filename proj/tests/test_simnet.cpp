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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "harness.hpp"

using namespace sel;
using namespace sel::testing;

namespace {

std::vector<uint64_t> sample_timestamps(const sim::EcResult& ec) {
    std::vector<uint64_t> out;
    for (const auto& entry : ec.oracle)
        if (entry.record.type() == RecordType::Sample) out.push_back(entry.record.timestamp);
    return out;
}

size_t count_events(const sim::EcResult& ec, uint16_t code) {
    size_t n = 0;
    for (const auto& entry : ec.oracle) {
        if (entry.record.type() != RecordType::Event) continue;
        if (std::get<EventPayload>(entry.record.payload).event_code == code) ++n;
    }
    return n;
}

} // namespace

TEST_CASE("crc16 matches the reference check value") {
    Bytes check = {'1', '2', '3', '4', '5', '6', '7', '8', '9'};
    CHECK(sim::crc16_ccitt(check) == 0x29B1);
    CHECK(sim::crc16_ccitt({}) == 0xFFFF);
}

TEST_CASE("frame codec round trips and screens corruption") {
    sim::Frame frame;
    frame.dest = 3;
    frame.src = 0;
    frame.hop_count = 2;
    frame.payload = {0x01, 0x04, 0x00, 0x00, 0x00, 0xAB};

    Bytes wire = sim::encode_frame(frame);
    CHECK(wire.size() == sim::kFrameOverhead + frame.payload.size());
    CHECK(wire[0] == sim::kFrameSync);
    CHECK(sim::decode_frame(wire) == frame);

    SUBCASE("every single-bit corruption is detected") {
        for (size_t bit = 0; bit < wire.size() * 8; ++bit) {
            Bytes bad = wire;
            bad[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
            CHECK_THROWS_AS(sim::decode_frame(bad), SelError);
        }
    }
    SUBCASE("truncation is detected") {
        CHECK_THROWS_AS(sim::decode_frame(ConstBytes(wire).first(wire.size() - 1)), SelError);
        CHECK_THROWS_AS(sim::decode_frame(ConstBytes(wire).first(3)), SelError);
    }
}

TEST_CASE("med sample model") {
    sim::MedProfile profile;
    profile.initial_voltage_mv = 4000;
    profile.discharge_mv_per_tick = 10;
    profile.temp_base_centi_c = 2500;
    profile.temp_amplitude = 160;

    SUBCASE("tick zero reads the initial voltage") {
        CHECK(sim::med_sample(profile, 0).voltage_mv == 4000);
        CHECK(sim::med_sample(profile, 0).soc_permille == 1000);
    }
    SUBCASE("charge is half at the voltage midpoint") {
        // 4000 - 10 * 200 = 2000 mV, the midpoint of [0, 4000]
        CHECK(sim::med_sample(profile, 200).soc_permille == 500);
    }
    SUBCASE("voltage floors at zero") {
        CHECK(sim::med_sample(profile, 100000).voltage_mv == 0);
        CHECK(sim::med_sample(profile, 100000).soc_permille == 0);
    }
    SUBCASE("zero discharge repeats modulo the temperature cycle") {
        sim::MedProfile flat = profile;
        flat.discharge_mv_per_tick = 0;
        for (uint64_t tick = 0; tick < 300; ++tick) {
            SamplePayload a = sim::med_sample(flat, tick);
            SamplePayload b = sim::med_sample(flat, tick + 64);
            CHECK(a == b);
            CHECK(a.voltage_mv == 4000);
            CHECK(a.current_ma == 0);
        }
    }
    SUBCASE("temperature follows a triangle") {
        CHECK(sim::med_sample(profile, 0).temp_centi_c == 2500);
        CHECK(sim::med_sample(profile, 32).temp_centi_c == 2660);
        CHECK(sim::med_sample(profile, 64).temp_centi_c == 2500);
        CHECK(sim::med_sample(profile, 16).temp_centi_c == 2580);
    }
}

TEST_CASE("config validation") {
    sim::ScenarioConfig config = demo_scenario();

    SUBCASE("duplicate addresses are refused") {
        config.ecs[1].address = config.ecs[0].address;
        try {
            sim::Sim::build(config, 1);
            FAIL("expected BadConfig");
        } catch (const SelError& e) {
            CHECK(e.code() == Errc::BadConfig);
        }
    }
    SUBCASE("no controllers is refused") {
        config.ecs.clear();
        CHECK_THROWS_AS(sim::Sim::build(config, 1), SelError);
    }
    SUBCASE("kill must reference a real address") {
        config.kills.push_back({9, 10});
        CHECK_THROWS_AS(sim::Sim::build(config, 1), SelError);
    }
    SUBCASE("unknown fault link is refused") {
        config.faults.push_back({sim::FaultKind::Drop, "med:9", 1000, {}, 0});
        CHECK_THROWS_AS(sim::Sim::build(config, 1), SelError);
    }
    SUBCASE("run refuses a margin that swallows the whole window") {
        sim::Sim built = sim::Sim::build(config, 1);
        CHECK_THROWS_AS(built.run(config.stop_margin_ticks), SelError);
    }
    SUBCASE("json round trip") {
        nlohmann::json j = {
            {"seed", 7},
            {"ticks", 64},
            {"stop_margin_ticks", 8},
            {"ecs",
             {{{"ec_id_hex", "00112233445566778899aabbccddeeff"},
               {"address", 1},
               {"sample_interval", 4},
               {"integrity_update_interval", 8},
               {"capacity_blocks", 16},
               {"med",
                {{"initial_voltage_mv", 4000},
                 {"discharge_mv_per_tick", 2},
                 {"temp_base_centi_c", 2500},
                 {"temp_amplitude", 100},
                 {"fault_schedule", {{30, 257}}}}}}}},
            {"faults", {{{"kind", "delay"}, {"link", "med:1"}, {"delay_ticks", 2}}}},
            {"kill", {{{"address", 1}, {"tick", 60}}}}};
        sim::ScenarioConfig parsed = sim::parse_scenario(j);
        CHECK(parsed.ecs.size() == 1);
        CHECK(parsed.ecs[0].record_payload_max == 64); // default
        CHECK(parsed.ecs[0].med.fault_schedule.size() == 1);
        CHECK(parsed.faults.size() == 1);
        CHECK(parsed.kills.size() == 1);

        nlohmann::json bad = j;
        bad["ecs"][0]["ec_id_hex"] = "1234";
        CHECK_THROWS_AS(sim::parse_scenario(bad), SelError);
    }
}

TEST_CASE("clean four-controller run") {
    sim::SimResult result = sim::run_scenario(demo_scenario());
    REQUIRE(result.ecs.size() == 4);

    Rng rng(1);
    for (const auto& ec : result.ecs) {
        INFO("controller ", int(ec.address));
        CHECK(ec.closed_cleanly);
        CHECK_FALSE(ec.oracle.empty());

        // image verifies and exports exactly the oracle trace
        PortingInputs inputs{ec.image_bytes, ec.credential};
        VerificationReport report = verify_port(inputs, rng);
        CHECK(report.accepted);
        CHECK(report.blocks_checked == ec.oracle.size());

        std::vector<LogRecord> exported = export_records(inputs, rng);
        REQUIRE(exported.size() == ec.oracle.size());
        for (size_t i = 0; i < exported.size(); ++i) {
            CHECK(ec.oracle[i].seq == i);
            CHECK(exported[i] == ec.oracle[i].record);
        }
        CHECK(exported.back().type() == RecordType::SessionMeta);
    }

    // the scheduled device fault reached controller 2's log
    CHECK(count_events(result.ecs[1], 0x0101) == 1);
}

TEST_CASE("identical config and seed reproduce byte-identical results") {
    sim::SimResult a = sim::run_scenario(demo_scenario());
    sim::SimResult b = sim::run_scenario(demo_scenario());
    CHECK(results_equal(a, b));

    sim::SimResult c = sim::run_scenario(demo_scenario(), 777);
    CHECK_FALSE(results_equal(a, c));
}

TEST_CASE("zero-probability faults change nothing") {
    sim::ScenarioConfig with_fault = demo_scenario();
    with_fault.faults.push_back({sim::FaultKind::Corrupt, "med:1", 0, {}, 0});
    sim::SimResult base = sim::run_scenario(demo_scenario());
    sim::SimResult faulty = sim::run_scenario(with_fault);
    CHECK(results_equal(base, faulty));
}

TEST_CASE("certain corruption starves a device link") {
    sim::ScenarioConfig config = demo_scenario();
    config.faults.push_back({sim::FaultKind::Corrupt, "med:1", 1000000, {}, 0});
    sim::SimResult result = sim::run_scenario(config);

    const sim::EcResult& starved = result.ecs[0];
    CHECK(sample_timestamps(starved).empty());
    CHECK(count_events(starved, kEventLinkFailure) > 0);
    CHECK(starved.closed_cleanly);

    Rng rng(2);
    PortingInputs inputs{starved.image_bytes, starved.credential};
    CHECK(verify_port(inputs, rng).accepted);

    // the other controllers never noticed
    CHECK_FALSE(sample_timestamps(result.ecs[1]).empty());
    CHECK(count_events(result.ecs[1], kEventLinkFailure) == 0);
}

TEST_CASE("tick-listed faults hit exactly the listed slots") {
    sim::ScenarioConfig config = demo_scenario();
    sim::FaultSpec spec;
    spec.kind = sim::FaultKind::Drop;
    spec.link = "med:1";
    for (uint64_t t = 0; t < 256; ++t) spec.ticks.push_back(t); // every slot
    config.faults.push_back(spec);

    sim::SimResult result = sim::run_scenario(config);
    CHECK(sample_timestamps(result.ecs[0]).empty());
    CHECK(count_events(result.ecs[0], kEventLinkFailure) > 0);
    CHECK_FALSE(sample_timestamps(result.ecs[1]).empty());
}

TEST_CASE("fault probabilities above one million are refused") {
    sim::ScenarioConfig config = demo_scenario();
    config.faults.push_back({sim::FaultKind::Corrupt, "med:1", 1000001, {}, 0});
    CHECK_THROWS_AS(sim::Sim::build(config, 1), SelError);
}

TEST_CASE("full drop behaves like full corruption for the logger") {
    sim::ScenarioConfig config = demo_scenario();
    config.faults.push_back({sim::FaultKind::Drop, "med:1", 1000000, {}, 0});
    sim::SimResult result = sim::run_scenario(config);
    CHECK(sample_timestamps(result.ecs[0]).empty());
    CHECK(count_events(result.ecs[0], kEventLinkFailure) > 0);
    Rng rng(3);
    PortingInputs inputs{result.ecs[0].image_bytes, result.ecs[0].credential};
    CHECK(verify_port(inputs, rng).accepted);
}

TEST_CASE("link delay shifts sample timestamps") {
    sim::ScenarioConfig config = demo_scenario();
    config.faults.push_back({sim::FaultKind::Delay, "med:1", 0, {}, 3});

    std::vector<uint64_t> base = sample_timestamps(sim::run_scenario(demo_scenario()).ecs[0]);
    std::vector<uint64_t> delayed = sample_timestamps(sim::run_scenario(config).ecs[0]);

    REQUIRE_FALSE(base.empty());
    REQUIRE_FALSE(delayed.empty());
    CHECK(delayed.front() == base.front() + 3);
    // the slower round trip halves the cadence but keeps the shifted phase
    for (size_t i = 1; i < delayed.size(); ++i)
        CHECK((delayed[i] - delayed.front()) % 4 == 0);
}

TEST_CASE("killing one controller leaves the others byte-identical") {
    sim::SimResult base = sim::run_scenario(demo_scenario());

    SUBCASE("mid-run kill") {
        sim::ScenarioConfig config = demo_scenario();
        config.kills.push_back({2, 128});
        sim::SimResult killed = sim::run_scenario(config);

        Rng rng(4);
        for (size_t i : {size_t(0), size_t(2), size_t(3)}) {
            INFO("controller ", int(base.ecs[i].address));
            CHECK(killed.ecs[i].image_bytes == base.ecs[i].image_bytes);
            CHECK(killed.ecs[i].oracle == base.ecs[i].oracle);
            PortingInputs inputs{killed.ecs[i].image_bytes, killed.ecs[i].credential};
            CHECK(verify_port(inputs, rng).accepted);
        }
        // the victim stopped mid-session and cannot be finalized
        CHECK_FALSE(killed.ecs[1].closed_cleanly);
    }

    SUBCASE("kill at tick zero acts as removal") {
        sim::ScenarioConfig config = demo_scenario();
        config.kills.push_back({2, 0});
        sim::SimResult removed = sim::run_scenario(config);
        for (size_t i : {size_t(0), size_t(2), size_t(3)}) {
            CHECK(removed.ecs[i].image_bytes == base.ecs[i].image_bytes);
            CHECK(removed.ecs[i].oracle == base.ecs[i].oracle);
        }
        CHECK(removed.ecs[1].oracle.empty());
    }
}

TEST_CASE("oracle length matches block count on clean closes") {
    for (uint64_t seed = 40; seed < 44; ++seed) {
        sim::SimResult result = sim::run_scenario(demo_scenario(seed));
        for (const auto& ec : result.ecs) {
            if (!ec.closed_cleanly) continue;
            LmuImage image = parse_image(ec.image_bytes);
            CHECK(image.integrity.block_count == ec.oracle.size());
        }
    }
}

TEST_CASE("outputs land on disk deterministically") {
    namespace fs = std::filesystem;
    fs::path dir_a = fs::temp_directory_path() / "sel_sim_a";
    fs::path dir_b = fs::temp_directory_path() / "sel_sim_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    sim::write_outputs(sim::run_scenario(demo_scenario()), dir_a);
    sim::write_outputs(sim::run_scenario(demo_scenario()), dir_b);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        REQUIRE(in);
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };

    for (const char* name : {"ec1.lmu", "ec2.lmu", "ec3.lmu", "ec4.lmu", "ec1.svd", "ec2.svd",
                             "ec3.svd", "ec4.svd", "oracle.jsonl", "events.jsonl"}) {
        INFO(name);
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    }

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}
