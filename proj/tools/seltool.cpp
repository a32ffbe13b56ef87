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

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "sel/porting.hpp"
#include "sel/simnet.hpp"

namespace fs = std::filesystem;

namespace {

// Exit codes: 0 success/accepted, 1 verification rejected, 2 usage error,
// 3 I/O or parse error.
constexpr int kExitOk = 0;
constexpr int kExitRejected = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

sel::Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sel::SelError(sel::Errc::IoError, "cannot open " + path.string());
    return sel::Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, sel::ConstBytes data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw sel::SelError(sel::Errc::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
}

int run_sim(const std::string& config_path, std::optional<uint64_t> seed,
            const std::string& out_dir, bool json_out) {
    sel::sim::ScenarioConfig config = sel::sim::load_scenario_file(config_path);
    sel::sim::SimResult result = sel::sim::run_scenario(config, seed);
    sel::sim::write_outputs(result, out_dir);

    if (json_out) {
        nlohmann::ordered_json j;
        j["ticks"] = result.ticks_executed;
        j["out_dir"] = out_dir;
        auto& ecs = j["ecs"] = nlohmann::ordered_json::array();
        for (const auto& ec : result.ecs) {
            ecs.push_back({{"address", ec.address},
                           {"records", ec.oracle.size()},
                           {"closed", ec.closed_cleanly}});
        }
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "simulated " << result.ticks_executed << " ticks, " << result.ecs.size()
                  << " controller(s) -> " << out_dir << "\n";
        for (const auto& ec : result.ecs) {
            std::cout << "  ec" << int(ec.address) << ": " << ec.oracle.size() << " records, "
                      << (ec.closed_cleanly ? "closed" : "not closed") << "\n";
        }
    }
    return kExitOk;
}

int run_inspect(const std::string& image_path, bool json_out) {
    sel::Bytes data = read_file(image_path);
    // Header and integrity section are readable without any secret.
    sel::LmuHeader header = sel::parse_header(data);
    sel::IntegritySection integrity = sel::parse_integrity(data, header);

    if (json_out) {
        nlohmann::ordered_json j;
        j["version"] = header.version;
        j["flags"] = header.flags;
        j["lmu_id"] = sel::to_hex(header.lmu_id);
        j["ec_id"] = sel::to_hex(header.ec_id);
        j["med_id"] = sel::to_hex(header.med_id);
        j["svd_id"] = sel::to_hex(header.svd_id);
        j["created_at"] = header.created_at;
        j["capacity_blocks"] = header.capacity_blocks;
        j["record_payload_max"] = header.record_payload_max;
        j["block_count"] = integrity.block_count;
        j["update_counter"] = integrity.update_counter;
        j["chain_tag"] = sel::to_hex(integrity.chain_tag);
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "lmu_id:             " << sel::to_hex(header.lmu_id) << "\n"
                  << "ec_id:              " << sel::to_hex(header.ec_id) << "\n"
                  << "med_id:             " << sel::to_hex(header.med_id) << "\n"
                  << "svd_id:             " << sel::to_hex(header.svd_id) << "\n"
                  << "created_at:         " << header.created_at << "\n"
                  << "capacity_blocks:    " << header.capacity_blocks << "\n"
                  << "record_payload_max: " << header.record_payload_max << "\n"
                  << "block_count:        " << integrity.block_count << "\n"
                  << "update_counter:     " << integrity.update_counter << "\n"
                  << "chain_tag:          " << sel::to_hex(integrity.chain_tag) << "\n";
    }
    return kExitOk;
}

int run_verify(const std::string& image_path, const std::string& svd_path,
               const std::string& report_path, uint64_t seed, bool json_out) {
    sel::PortingInputs inputs;
    inputs.image_bytes = read_file(image_path);
    inputs.credential = sel::parse_svd(read_file(svd_path));

    sel::Rng rng(seed);
    sel::VerificationReport report = sel::verify_port(inputs, rng);
    nlohmann::ordered_json j = sel::report_to_json(report);

    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::trunc);
        if (!out) throw sel::SelError(sel::Errc::IoError, "cannot write " + report_path);
        out << j.dump(2) << "\n";
    }
    if (json_out) {
        std::cout << j.dump() << "\n";
    } else if (report.accepted) {
        std::cout << "accepted: " << report.blocks_checked << " block(s) verified\n";
    } else {
        std::cout << "rejected: " << sel::reject_reason_name(*report.reject_reason) << "\n";
    }
    return report.accepted ? kExitOk : kExitRejected;
}

int run_tamper(const std::string& image_path, std::optional<uint64_t> offset,
               std::optional<uint64_t> block, uint64_t byte_in_block) {
    sel::Bytes data = read_file(image_path);

    uint64_t target = 0;
    if (offset) {
        target = *offset;
    } else {
        sel::LmuHeader header = sel::parse_header(data);
        target = sel::block_offset(header, *block) + byte_in_block;
    }
    if (target >= data.size()) {
        std::cerr << "tamper offset " << target << " out of range (file is " << data.size()
                  << " bytes)\n";
        return kExitUsage;
    }

    data[target] ^= 0xFF;
    write_file(image_path, data);
    std::cout << "flipped byte at offset " << target << "\n";
    return kExitOk;
}

int run_export(const std::string& image_path, const std::string& svd_path,
               const std::string& out_path, uint64_t seed) {
    sel::PortingInputs inputs;
    inputs.image_bytes = read_file(image_path);
    inputs.credential = sel::parse_svd(read_file(svd_path));

    sel::Rng rng(seed);
    std::vector<sel::LogRecord> records;
    try {
        records = sel::export_records(inputs, rng);
    } catch (const sel::ExportRefusedError& e) {
        std::cerr << e.what() << "\n";
        return kExitRejected;
    }

    // All-or-nothing: the file is only touched once verification succeeded.
    std::string body;
    for (size_t i = 0; i < records.size(); ++i)
        body += sel::record_to_json(records[i], i).dump() + "\n";
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw sel::SelError(sel::Errc::IoError, "cannot write " + out_path);
    out << body;
    std::cout << "exported " << records.size() << " record(s) to " << out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tamper-evident logging memory toolkit"};
    app.require_subcommand(1);
    bool json_out = false;
    app.add_flag("--json", json_out, "stable machine-readable output");

    // sim run
    CLI::App* sim = app.add_subcommand("sim", "scenario simulation");
    sim->require_subcommand(1);
    CLI::App* sim_run = sim->add_subcommand("run", "run a scenario and write its artifacts");
    std::string config_path;
    std::string out_dir = ".";
    std::optional<uint64_t> seed_override;
    sim_run->add_option("--config", config_path, "scenario JSON")->required();
    sim_run->add_option("--seed", seed_override, "override the scenario seed");
    sim_run->add_option("--out", out_dir, "output directory")->required();

    // inspect
    CLI::App* inspect = app.add_subcommand("inspect", "dump image header and integrity section");
    std::string inspect_path;
    inspect->add_option("image", inspect_path, "image file")->required();

    // verify
    CLI::App* verify = app.add_subcommand("verify", "run the porting verification");
    std::string verify_image, verify_svd, report_path;
    uint64_t verify_seed = 1;
    verify->add_option("--image", verify_image, "image file")->required();
    verify->add_option("--svd", verify_svd, "credential file")->required();
    verify->add_option("--report", report_path, "write the JSON report here");
    verify->add_option("--seed", verify_seed, "challenge randomness seed");

    // tamper
    CLI::App* tamper = app.add_subcommand("tamper", "flip one byte of an image in place");
    std::string tamper_image;
    std::optional<uint64_t> tamper_offset, tamper_block;
    uint64_t tamper_byte = 0;
    tamper->add_option("--image", tamper_image, "image file")->required();
    auto* opt_offset = tamper->add_option("--offset", tamper_offset, "absolute byte offset");
    auto* opt_block = tamper->add_option("--block", tamper_block, "block index");
    tamper->add_option("--byte", tamper_byte, "byte within the block slot");
    opt_offset->excludes(opt_block);

    // export
    CLI::App* exp = app.add_subcommand("export", "verify and export plaintext records");
    std::string export_image, export_svd, export_out;
    uint64_t export_seed = 1;
    exp->add_option("--image", export_image, "image file")->required();
    exp->add_option("--svd", export_svd, "credential file")->required();
    exp->add_option("--out", export_out, "records JSONL output")->required();
    exp->add_option("--seed", export_seed, "challenge randomness seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim_run->parsed()) return run_sim(config_path, seed_override, out_dir, json_out);
        if (inspect->parsed()) return run_inspect(inspect_path, json_out);
        if (verify->parsed())
            return run_verify(verify_image, verify_svd, report_path, verify_seed, json_out);
        if (tamper->parsed()) {
            if (!tamper_offset && !tamper_block) {
                std::cerr << "tamper requires --offset or --block\n";
                return kExitUsage;
            }
            return run_tamper(tamper_image, tamper_offset, tamper_block, tamper_byte);
        }
        if (exp->parsed()) return run_export(export_image, export_svd, export_out, export_seed);
    } catch (const sel::SelError& e) {
        std::cerr << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
