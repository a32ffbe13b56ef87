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

#include <cstdint>
#include <span>

namespace sel {

/// SplitMix64 stream. Output is pinned: the same seed yields the same byte
/// sequence on every platform, which the simulator's determinism contract
/// depends on. Not a cryptographic source; callers that need secrets in
/// production must substitute a real entropy source.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform-ish value in [0, bound). Modulo bias is irrelevant at the
    /// bounds used here (<= 10^6).
    uint64_t below(uint64_t bound) { return bound == 0 ? 0 : next() % bound; }

    void fill(std::span<uint8_t> out) {
        size_t i = 0;
        while (i < out.size()) {
            uint64_t v = next();
            for (int b = 0; b < 8 && i < out.size(); ++b, ++i)
                out[i] = static_cast<uint8_t>(v >> (8 * b));
        }
    }

    /// Derives an independent child stream without advancing this one.
    /// Fork ids must be distinct per child.
    Rng fork(uint64_t stream) const {
        uint64_t z = state_ ^ (0xbf58476d1ce4e5b9ull * (stream + 1));
        z = (z ^ (z >> 30)) * 0x94d049bb133111ebull;
        return Rng(z ^ (z >> 31));
    }

private:
    uint64_t state_;
};

} // namespace sel
