#pragma once

// Speeds, unit conversion and the simple kinematics every scheduling model
// builds on. Internally everything runs in feet and seconds.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace prodline {

class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kFeetPerMile = 5280.0;
inline constexpr double kSecondsPerHour = 3600.0;

enum class SpeedUnit { Mph, Fps };

/// Non-negative speed tagged with its unit.
class Speed {
public:
    constexpr Speed() = default;

    static Speed mph(double value) { return Speed{value, SpeedUnit::Mph}; }
    static Speed fps(double value) { return Speed{value, SpeedUnit::Fps}; }

    [[nodiscard]] double value() const noexcept { return value_; }
    [[nodiscard]] SpeedUnit unit() const noexcept { return unit_; }

    [[nodiscard]] double in_mph() const noexcept {
        return unit_ == SpeedUnit::Mph ? value_ : value_ * kSecondsPerHour / kFeetPerMile;
    }
    [[nodiscard]] double in_fps() const noexcept {
        return unit_ == SpeedUnit::Fps ? value_ : value_ * kFeetPerMile / kSecondsPerHour;
    }

private:
    Speed(double value, SpeedUnit unit) : value_(value), unit_(unit) {
        if (!(value >= 0.0) || !std::isfinite(value)) {
            throw DomainError("speed must be a finite non-negative number, got " +
                              std::to_string(value));
        }
    }

    double value_ = 0.0;
    SpeedUnit unit_ = SpeedUnit::Mph;
};

/// Admissible arrival speeds [s1, s2], both in mph.
class SpeedRange {
public:
    SpeedRange(double s1_mph, double s2_mph) : s1_(s1_mph), s2_(s2_mph) {
        if (!(s1_mph > 0.0) || !(s1_mph <= s2_mph) || !std::isfinite(s2_mph)) {
            throw DomainError("speed range requires 0 < s1 <= s2");
        }
    }

    [[nodiscard]] double s1() const noexcept { return s1_; }
    [[nodiscard]] double s2() const noexcept { return s2_; }
    [[nodiscard]] bool contains(double mph) const noexcept { return mph >= s1_ && mph <= s2_; }

private:
    double s1_;
    double s2_;
};

/// Stretch between two chained intersections where the speed ramps from the
/// upstream exit speed to the downstream entry speed.
///
/// A zero-length zone is accepted and behaves as a step change.
struct CorridorLink {
    CorridorLink(double exit_mph, double target_mph, double zone_length_ft)
        : exit_speed(Speed::mph(exit_mph)), target_speed(Speed::mph(target_mph)),
          zone_length_ft(zone_length_ft) {
        if (!(exit_mph > 0.0) || !(target_mph > 0.0)) {
            throw DomainError("corridor speeds must be positive");
        }
        if (!(zone_length_ft >= 0.0) || !std::isfinite(zone_length_ft)) {
            throw DomainError("corridor zone_length must be non-negative");
        }
    }

    Speed exit_speed;
    Speed target_speed;
    double zone_length_ft;
};

inline Speed mph_to_fps(Speed speed) { return Speed::fps(speed.in_fps()); }

inline Speed fps_to_mph(Speed speed) { return Speed::mph(speed.in_mph()); }

/// Seconds needed to cover `distance_ft` at constant `speed`.
inline double time_to_point(double distance_ft, Speed speed) {
    if (!(distance_ft >= 0.0)) {
        throw DomainError("distance must be non-negative");
    }
    const double fps = speed.in_fps();
    if (fps <= 0.0) {
        throw DomainError("a stationary vehicle never reaches the point");
    }
    return distance_ft / fps;
}

inline Speed average_speed(const SpeedRange& range) {
    return Speed::mph((range.s1() + range.s2()) / 2.0);
}

/// Speed at `position_ft` inside the transition zone: a linear ramp in
/// distance from the exit speed to the target speed.
inline Speed transition_speed(const CorridorLink& link, double position_ft) {
    if (!(position_ft >= 0.0) || position_ft > link.zone_length_ft) {
        throw DomainError("position outside the transition zone");
    }
    const double from = link.exit_speed.in_mph();
    const double to = link.target_speed.in_mph();
    if (link.zone_length_ft == 0.0) {
        return Speed::mph(to);
    }
    const double frac = position_ft / link.zone_length_ft;
    return Speed::mph(from + (to - from) * frac);
}

/// Time spent crossing the whole transition zone under the linear ramp.
///
/// With v(x) = v0 + (v1 - v0) x / L the integral of dx / v(x) over [0, L]
/// is L ln(v1 / v0) / (v1 - v0).
inline double transition_time(const CorridorLink& link) {
    const double length = link.zone_length_ft;
    if (length == 0.0) {
        return 0.0;
    }
    const double v0 = link.exit_speed.in_fps();
    const double v1 = link.target_speed.in_fps();
    const double dv = v1 - v0;
    if (std::abs(dv) <= 1e-12 * std::max(v0, v1)) {
        return length / v0;
    }
    return length * std::log(v1 / v0) / dv;
}

}  // namespace prodline
