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

#include <stdexcept>
#include <string>

namespace sel {

enum class Errc {
    BadParams,
    BadMagic,
    BadVersion,
    Truncated,
    InvariantViolation,
    CapacityExceeded,
    SeqMismatch,
    AuthError,
    RecordTooLarge,
    MalformedRecord,
    IntegrityMismatch,
    InvalidTransition,
    BadConfig,
    UnknownLink,
    IoError,
};

const char* errc_name(Errc code) noexcept;

/// Library-wide error: a typed code plus a human-readable message.
class SelError : public std::runtime_error {
public:
    SelError(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

inline const char* errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::BadParams: return "BadParams";
    case Errc::BadMagic: return "BadMagic";
    case Errc::BadVersion: return "BadVersion";
    case Errc::Truncated: return "Truncated";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::CapacityExceeded: return "CapacityExceeded";
    case Errc::SeqMismatch: return "SeqMismatch";
    case Errc::AuthError: return "AuthError";
    case Errc::RecordTooLarge: return "RecordTooLarge";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::IntegrityMismatch: return "IntegrityMismatch";
    case Errc::InvalidTransition: return "InvalidTransition";
    case Errc::BadConfig: return "BadConfig";
    case Errc::UnknownLink: return "UnknownLink";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace sel
