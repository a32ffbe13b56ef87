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

#include "sel/record.hpp"

#include <limits>

namespace sel {

namespace {

size_t payload_size_for(RecordType type) {
    switch (type) {
    case RecordType::Sample: return kSamplePayloadSize;
    case RecordType::Event: return kEventPayloadSize;
    case RecordType::SessionMeta: return kSessionMetaPayloadSize;
    }
    throw SelError(Errc::MalformedRecord, "unreachable record type");
}

} // namespace

size_t encoded_record_size(const LogRecord& record) {
    return kRecordHeaderSize + payload_size_for(record.type());
}

Bytes encode_record(const LogRecord& record) {
    ByteWriter w;
    w.u64(record.timestamp);
    w.u8(static_cast<uint8_t>(record.type()));
    w.u16(static_cast<uint16_t>(payload_size_for(record.type())));
    std::visit(
        [&w](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, SamplePayload>) {
                w.u32(p.voltage_mv);
                w.i32(p.current_ma);
                w.i16(p.temp_centi_c);
                w.u16(p.soc_permille);
            } else if constexpr (std::is_same_v<P, EventPayload>) {
                w.u16(p.event_code);
                w.u32(p.detail);
            } else {
                w.u64(p.record_count);
                w.u32(p.min_voltage_mv);
                w.u32(p.max_voltage_mv);
                w.i32(p.max_temp_centi_c);
                w.u32(p.fault_count);
            }
        },
        record.payload);
    return w.take();
}

LogRecord parse_record(ConstBytes data) {
    try {
        ByteReader r(data);
        LogRecord rec;
        rec.timestamp = r.u64();
        uint8_t type = r.u8();
        uint16_t payload_len = r.u16();

        if (type == 0 || type > 3) throw SelError(Errc::MalformedRecord, "reserved record type");
        RecordType rt = static_cast<RecordType>(type);
        if (payload_len != payload_size_for(rt))
            throw SelError(Errc::MalformedRecord, "payload length does not match type");

        switch (rt) {
        case RecordType::Sample: {
            SamplePayload p;
            p.voltage_mv = r.u32();
            p.current_ma = r.i32();
            p.temp_centi_c = r.i16();
            p.soc_permille = r.u16();
            rec.payload = p;
            break;
        }
        case RecordType::Event: {
            EventPayload p;
            p.event_code = r.u16();
            p.detail = r.u32();
            rec.payload = p;
            break;
        }
        case RecordType::SessionMeta: {
            SessionMetaPayload p;
            p.record_count = r.u64();
            p.min_voltage_mv = r.u32();
            p.max_voltage_mv = r.u32();
            int32_t temp = r.i32();
            if (temp < std::numeric_limits<int16_t>::min() ||
                temp > std::numeric_limits<int16_t>::max())
                throw SelError(Errc::MalformedRecord, "temperature out of 16-bit range");
            p.max_temp_centi_c = static_cast<int16_t>(temp);
            p.fault_count = r.u32();
            rec.payload = p;
            break;
        }
        }
        if (!r.done()) throw SelError(Errc::MalformedRecord, "trailing bytes after record");
        return rec;
    } catch (const SelError& e) {
        if (e.code() == Errc::Truncated)
            throw SelError(Errc::MalformedRecord, "record shorter than declared");
        throw;
    }
}

nlohmann::ordered_json record_to_json(const LogRecord& record, uint64_t seq) {
    nlohmann::ordered_json j;
    j["seq"] = seq;
    j["timestamp"] = record.timestamp;
    std::visit(
        [&j](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, SamplePayload>) {
                j["type"] = "sample";
                j["voltage_mv"] = p.voltage_mv;
                j["current_ma"] = p.current_ma;
                j["temp_centi_c"] = p.temp_centi_c;
                j["soc_permille"] = p.soc_permille;
            } else if constexpr (std::is_same_v<P, EventPayload>) {
                j["type"] = "event";
                j["event_code"] = p.event_code;
                j["detail"] = p.detail;
            } else {
                j["type"] = "session_meta";
                j["record_count"] = p.record_count;
                j["min_voltage_mv"] = p.min_voltage_mv;
                j["max_voltage_mv"] = p.max_voltage_mv;
                j["max_temp_centi_c"] = p.max_temp_centi_c;
                j["fault_count"] = p.fault_count;
            }
        },
        record.payload);
    return j;
}

} // namespace sel
