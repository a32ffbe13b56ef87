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

#include <variant>

#include "json.hpp"

#include "sel/bytes.hpp"

namespace sel {

// A log record is the plaintext unit a controller seals into one block.
// Wire layout: timestamp u64 | record_type u8 | payload_len u16 | payload.
// Payload sizes are fixed per type; type 0x00 is reserved-invalid.

enum class RecordType : uint8_t {
    Sample = 0x01,
    Event = 0x02,
    SessionMeta = 0x03,
};

struct SamplePayload {
    uint32_t voltage_mv = 0;
    int32_t current_ma = 0;
    int16_t temp_centi_c = 0;
    uint16_t soc_permille = 0;

    bool operator==(const SamplePayload&) const = default;
};

struct EventPayload {
    uint16_t event_code = 0;
    uint32_t detail = 0;

    bool operator==(const EventPayload&) const = default;
};

struct SessionMetaPayload {
    uint64_t record_count = 0;
    uint32_t min_voltage_mv = 0;
    uint32_t max_voltage_mv = 0;
    int16_t max_temp_centi_c = 0; // carried as a sign-extended 32-bit field
    uint32_t fault_count = 0;

    bool operator==(const SessionMetaPayload&) const = default;
};

struct LogRecord {
    uint64_t timestamp = 0;
    std::variant<SamplePayload, EventPayload, SessionMetaPayload> payload;

    RecordType type() const {
        switch (payload.index()) {
        case 0: return RecordType::Sample;
        case 1: return RecordType::Event;
        default: return RecordType::SessionMeta;
        }
    }

    bool operator==(const LogRecord&) const = default;
};

inline constexpr size_t kRecordHeaderSize = 11;
inline constexpr size_t kSamplePayloadSize = 12;
inline constexpr size_t kEventPayloadSize = 6;
inline constexpr size_t kSessionMetaPayloadSize = 24;

// Event codes logged by the controller itself; scenario-defined device
// events use codes outside this range.
inline constexpr uint16_t kEventLinkFailure = 0x0001;
inline constexpr uint16_t kEventCapacityReached = 0x0002;

Bytes encode_record(const LogRecord& record);

/// Throws SelError(MalformedRecord) on reserved types, length mismatches or
/// trailing bytes.
LogRecord parse_record(ConstBytes data);

size_t encoded_record_size(const LogRecord& record);

/// Stable-key-order JSON used by both the oracle trace and record export.
nlohmann::ordered_json record_to_json(const LogRecord& record, uint64_t seq);

} // namespace sel
