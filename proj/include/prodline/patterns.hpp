#pragma once

// Arrival patterns over a one-second spot grid: bit i set means a vehicle
// requests entry at second i.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "prodline/random.hpp"
#include "prodline/units.hpp"

namespace prodline {

struct RequestPattern {
    std::vector<std::uint8_t> bits;

    [[nodiscard]] std::size_t size() const noexcept { return bits.size(); }
    friend bool operator==(const RequestPattern&, const RequestPattern&) = default;
};

/// 1,0,1,0,... : arrivals line up with the gate openings.
inline RequestPattern matched_pattern(std::size_t length) {
    RequestPattern p;
    p.bits.resize(length);
    for (std::size_t i = 0; i < length; ++i) p.bits[i] = (i % 2 == 0) ? 1 : 0;
    return p;
}

/// A request in every spot.
inline RequestPattern worst_pattern(std::size_t length) {
    return RequestPattern{std::vector<std::uint8_t>(length, 1)};
}

/// Independent Bernoulli(probability) bits drawn from Rng(seed).
inline RequestPattern random_pattern(std::size_t length, double probability, std::uint64_t seed) {
    if (!(probability >= 0.0 && probability <= 1.0)) {
        throw DomainError("probability must be in [0, 1]");
    }
    Rng rng{seed};
    RequestPattern p;
    p.bits.resize(length);
    for (auto& b : p.bits) b = rng.bernoulli(probability) ? 1 : 0;
    return p;
}

inline std::vector<double> bits_to_arrivals(const RequestPattern& pattern) {
    std::vector<double> out;
    for (std::size_t i = 0; i < pattern.bits.size(); ++i) {
        if (pattern.bits[i] > 1) throw DomainError("pattern bits must be 0 or 1");
        if (pattern.bits[i] == 1) out.push_back(static_cast<double>(i));
    }
    return out;
}

/// The thirty arrival times of the reference random-flow run, kept as a
/// fixed fixture ("reference-random").
inline std::vector<double> reference_random_arrivals() {
    return {0,  1,  3,  4,  5,  9,  11, 13, 15, 17, 18, 21, 24, 26, 28,
            30, 32, 33, 34, 36, 38, 41, 43, 48, 50, 52, 53, 57, 58, 59};
}

}  // namespace prodline
