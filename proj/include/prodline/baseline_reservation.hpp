#pragma once

// Request/reply reservation model used as the comparison baseline: each
// vehicle asks the manager for the conflict point, and the manager accepts,
// asks for a speed change, or stops the vehicle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prodline/production_line.hpp"
#include "prodline/random.hpp"
#include "prodline/units.hpp"

namespace prodline {

/// A vehicle `distance_ft` away from conflict point `point_id` at
/// `request_time`, travelling at `speed`.
struct TrajectoryQuery {
    int vehicle_id = 0;
    double distance_ft = 0.0;
    Speed speed;
    std::string point_id;
    double request_time = 0.0;

    [[nodiscard]] double arrival_time() const {
        return request_time + time_to_point(distance_ft, speed);
    }
    [[nodiscard]] double arrival_time_at(Speed s) const {
        return request_time + time_to_point(distance_ft, s);
    }
};

struct PredictedConflict {
    std::string point_id;
    double time_a = 0.0;
    double time_b = 0.0;
};

/// Two vehicles collide when they reach the same point within `epsilon`
/// seconds of each other.
inline std::optional<PredictedConflict> predict_conflict(const TrajectoryQuery& a,
                                                         const TrajectoryQuery& b,
                                                         double epsilon) {
    if (a.point_id != b.point_id) {
        throw DomainError("conflict prediction needs a shared point, got '" + a.point_id +
                          "' and '" + b.point_id + "'");
    }
    const double ta = a.arrival_time();
    const double tb = b.arrival_time();
    if (std::abs(ta - tb) <= epsilon) {
        return PredictedConflict{a.point_id, ta, tb};
    }
    return std::nullopt;
}

/// A granted occupation of a conflict point.
struct Reservation {
    int vehicle_id = 0;
    std::string point_id;
    double time = 0.0;
};

enum class Verdict { Accept, AdjustSpeed, Stop };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Accept: return "ACCEPT";
        case Verdict::AdjustSpeed: return "ADJUST_SPEED";
        case Verdict::Stop: return "STOP";
    }
    return "?";
}

struct ReservationDecision {
    Verdict verdict = Verdict::Accept;
    std::optional<Speed> adjusted_speed;  // set iff verdict == AdjustSpeed
};

struct DecisionParams {
    double epsilon_s = 0.5;
    double speed_step_mph = 1.0;
};

inline std::size_t count_conflicts_at(double t, const std::string& point,
                                      std::span<const Reservation> reservations, double epsilon) {
    std::size_t n = 0;
    for (const auto& r : reservations) {
        if (r.point_id == point && std::abs(r.time - t) <= epsilon) ++n;
    }
    return n;
}

/// Accept when the request is conflict-free. Otherwise scan a speed grid
/// around the current speed, nearest first (slower wins a tie), for a speed
/// inside `bounds` that clears every reservation. Stop if none exists.
inline ReservationDecision decide(const TrajectoryQuery& request,
                                  std::span<const Reservation> reservations,
                                  const SpeedRange& bounds, const DecisionParams& params = {}) {
    const double eps = params.epsilon_s;
    if (count_conflicts_at(request.arrival_time(), request.point_id, reservations, eps) == 0) {
        return {Verdict::Accept, std::nullopt};
    }
    if (request.distance_ft <= 0.0 || !(params.speed_step_mph > 0.0)) {
        return {Verdict::Stop, std::nullopt};
    }

    const double current = request.speed.in_mph();
    const double step = params.speed_step_mph;
    const double reach = std::max(std::abs(current - bounds.s1()), std::abs(bounds.s2() - current));
    const auto max_steps = static_cast<long>(std::floor(reach / step + 1e-9));
    for (long j = 1; j <= max_steps; ++j) {
        for (double candidate : {current - j * step, current + j * step}) {
            if (candidate <= 0.0 || candidate < bounds.s1() - 1e-9 || candidate > bounds.s2() + 1e-9) {
                continue;
            }
            const Speed s = Speed::mph(candidate);
            if (count_conflicts_at(request.arrival_time_at(s), request.point_id, reservations, eps) == 0) {
                return {Verdict::AdjustSpeed, s};
            }
        }
    }
    return {Verdict::Stop, std::nullopt};
}

struct BaselineParams {
    DecisionParams decision;
    /// Distance from the conflict point at which vehicles send requests.
    double request_distance_ft = 600.0;
    /// Minimum spacing between consecutive vehicles of one lane at the point.
    double lane_headway_s = 0.5;

    /// Holds the reservation manager to the separation the gate timer gives
    /// the production line: conflicting vehicles, and vehicles sharing a
    /// lane, at least one open interval apart.
    static BaselineParams matching_clearance(const GateSchedule& gates) {
        BaselineParams p;
        p.decision.epsilon_s = gates.open_duration() - kTimeTolerance;
        p.lane_headway_s = gates.open_duration();
        return p;
    }
};

/// A vehicle approaching the shared conflict point.
struct ApproachingVehicle {
    int vehicle_id = 0;
    std::size_t lane = 0;  // index into the lane list
    double nominal_arrival = 0.0;
    Speed speed;
};

struct BaselineGrant {
    int vehicle_id = 0;
    std::size_t lane = 0;
    double nominal_arrival = 0.0;
    double granted_arrival = 0.0;
    double wait = 0.0;
    int stops = 0;
    bool adjusted = false;
};

struct BaselineMetrics {
    long vehicles = 0;
    /// Conflicts each vehicle would meet if nobody were managed:
    /// 2 * conflict_pairs / vehicles.
    double expected_collisions_per_vehicle = 0.0;
    double avg_wait = 0.0;
    double max_wait = 0.0;
    double conflict_pairs = 0.0;  // pairs among the unmanaged trajectories
    /// Conflicting reservations met per vehicle across all its requests,
    /// re-requests after a STOP included.
    double request_conflicts_per_vehicle = 0.0;
    long stops = 0;
    long adjustments = 0;
};

struct BaselineOutcome {
    std::vector<BaselineGrant> grants;  // in grant order
    BaselineMetrics metrics;
};

/// Pairs of vehicles from conflicting lane groups whose unmanaged arrivals
/// fall within epsilon of each other.
inline long count_conflict_pairs(std::span<const ApproachingVehicle> vehicles,
                                 std::span<const LaneGroup> lane_groups, double epsilon) {
    long pairs = 0;
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        for (std::size_t j = i + 1; j < vehicles.size(); ++j) {
            if (lane_groups[vehicles[i].lane] == lane_groups[vehicles[j].lane]) continue;
            if (std::abs(vehicles[i].nominal_arrival - vehicles[j].nominal_arrival) <= epsilon) ++pairs;
        }
    }
    return pairs;
}

/// Event-driven reservation run over one shared conflict point.
///
/// Lanes of different groups conflict. Each lane is served FIFO; a lane head
/// is ready at max(nominal arrival, previous grant + headway). The head
/// requests from min(request distance, remaining distance). A STOPped vehicle
/// halts where it asked, waits until every conflicting reservation clears
/// (r + epsilon), then covers the same distance again and re-requests.
/// Followers queue behind it.
inline BaselineOutcome run_reservation_baseline(std::span<const ApproachingVehicle> vehicles,
                                                std::span<const LaneGroup> lane_groups,
                                                const SpeedRange& bounds,
                                                const BaselineParams& params = {}) {
    static const std::string kPoint = "core";
    const double eps = params.decision.epsilon_s;

    std::vector<std::vector<const ApproachingVehicle*>> lanes(lane_groups.size());
    for (const auto& v : vehicles) {
        if (v.lane >= lane_groups.size()) throw DomainError("vehicle lane index out of range");
        lanes[v.lane].push_back(&v);
    }
    for (auto& q : lanes) {
        std::stable_sort(q.begin(), q.end(), [](const auto* a, const auto* b) {
            return a->nominal_arrival < b->nominal_arrival;
        });
    }

    std::vector<std::size_t> head(lanes.size(), 0);
    std::vector<double> last_grant(lanes.size(), -std::numeric_limits<double>::infinity());
    std::vector<double> ready(lanes.size(), 0.0);
    std::vector<int> stops(lanes.size(), 0);
    for (std::size_t l = 0; l < lanes.size(); ++l) {
        if (!lanes[l].empty()) ready[l] = lanes[l][0]->nominal_arrival;
    }

    // Reservations per group so a request only sees the conflicting side.
    std::vector<Reservation> group_res[2];
    const auto gi = [](LaneGroup g) { return g == LaneGroup::A ? 0 : 1; };

    BaselineOutcome out;
    long collisions = 0;
    for (;;) {
        std::size_t pick = lanes.size();
        for (std::size_t l = 0; l < lanes.size(); ++l) {
            if (head[l] >= lanes[l].size()) continue;
            if (pick == lanes.size() || ready[l] < ready[pick]) pick = l;
        }
        if (pick == lanes.size()) break;

        const ApproachingVehicle& v = *lanes[pick][head[pick]];
        const double target = ready[pick];
        const double fps = v.speed.in_fps();
        const double dist = std::min(params.request_distance_ft, std::max(0.0, target * fps));
        TrajectoryQuery q{v.vehicle_id, dist, v.speed, kPoint, target - dist / fps};

        const auto& others = group_res[1 - gi(lane_groups[pick])];
        collisions += static_cast<long>(count_conflicts_at(target, kPoint, others, eps));
        const auto decision = decide(q, others, bounds, params.decision);

        if (decision.verdict == Verdict::Stop) {
            double clear = target;
            for (const auto& r : others) {
                if (std::abs(r.time - target) <= eps) clear = std::max(clear, r.time + eps);
            }
            // strictly past the conflict window
            clear = std::nextafter(clear, std::numeric_limits<double>::infinity());
            ready[pick] = clear + dist / fps;
            ++stops[pick];
            continue;
        }

        const double granted = decision.verdict == Verdict::AdjustSpeed
                                   ? q.arrival_time_at(*decision.adjusted_speed)
                                   : target;
        group_res[gi(lane_groups[pick])].push_back({v.vehicle_id, kPoint, granted});
        out.grants.push_back({v.vehicle_id, pick, v.nominal_arrival, granted,
                              std::max(0.0, granted - v.nominal_arrival), stops[pick],
                              decision.verdict == Verdict::AdjustSpeed});

        last_grant[pick] = std::max(granted, target);
        stops[pick] = 0;
        if (++head[pick] < lanes[pick].size()) {
            ready[pick] = std::max(lanes[pick][head[pick]]->nominal_arrival,
                                   last_grant[pick] + params.lane_headway_s);
        }
    }

    auto& m = out.metrics;
    m.vehicles = static_cast<long>(out.grants.size());
    m.conflict_pairs = static_cast<double>(count_conflict_pairs(vehicles, lane_groups, eps));
    if (m.vehicles > 0) {
        double total = 0.0;
        for (const auto& g : out.grants) {
            total += g.wait;
            m.max_wait = std::max(m.max_wait, g.wait);
        }
        m.avg_wait = total / static_cast<double>(m.vehicles);
        m.expected_collisions_per_vehicle = 2.0 * m.conflict_pairs / static_cast<double>(m.vehicles);
        m.request_conflicts_per_vehicle =
            static_cast<double>(collisions) / static_cast<double>(m.vehicles);
        for (const auto& g : out.grants) {
            m.stops += g.stops;
            m.adjustments += g.adjusted ? 1 : 0;
        }
    }
    return out;
}

/// Runs the reservation baseline on the same requests a production-line run
/// would receive. Requests whose speed falls outside the range are dropped,
/// as they would be by admission.
inline BaselineOutcome baseline_on_requests(const IntersectionConfig& config,
                                            std::span<const VehicleRequest> requests,
                                            const BaselineParams& params = {}) {
    std::vector<LaneGroup> groups;
    for (const auto& l : config.lanes) groups.push_back(l.group);
    std::vector<ApproachingVehicle> vehicles;
    for (const auto& r : requests) {
        if (!config.speed_range.contains(r.arrival_speed.in_mph())) continue;
        vehicles.push_back({r.vehicle_id, config.lane_index(r.lane_id), r.arrival_time, r.arrival_speed});
    }
    return run_reservation_baseline(vehicles, groups, config.speed_range, params);
}

struct DensityScenario {
    long capacity_per_side = 722;
    double container_length_ft = 26.2467;
    double speed_mph = 100.0;
    double speed_margin_mph = 5.0;  // adjustment bounds: speed +/- margin
};

/// One random placement: vehicles split over two crossing one-lane
/// approaches, each in a distinct container-sized spot of its approach.
inline std::vector<ApproachingVehicle> place_vehicles(long vehicle_count,
                                                      const DensityScenario& scenario, Rng& rng) {
    const long cap = scenario.capacity_per_side;
    if (vehicle_count < 0 || vehicle_count > 2 * cap) {
        throw DomainError("vehicle_count must be in [0, 2 * capacity_per_side]");
    }
    const Speed speed = Speed::mph(scenario.speed_mph);
    const long first_side = (vehicle_count + 1) / 2;

    std::vector<ApproachingVehicle> out;
    out.reserve(static_cast<std::size_t>(vehicle_count));
    int id = 0;
    for (std::size_t side = 0; side < 2; ++side) {
        const long n = side == 0 ? first_side : vehicle_count - first_side;
        // partial Fisher-Yates over the side's spots
        std::vector<long> spots(static_cast<std::size_t>(cap));
        for (long i = 0; i < cap; ++i) spots[static_cast<std::size_t>(i)] = i;
        for (long i = 0; i < n; ++i) {
            const auto j = static_cast<long>(rng.below(static_cast<std::uint64_t>(cap - i))) + i;
            std::swap(spots[static_cast<std::size_t>(i)], spots[static_cast<std::size_t>(j)]);
            const double position = static_cast<double>(spots[static_cast<std::size_t>(i)] + 1) *
                                    scenario.container_length_ft;
            out.push_back({id++, side, time_to_point(position, speed), speed});
        }
    }
    return out;
}

/// Monte-Carlo density experiment: mean over `runs` independent placements.
/// Run r draws from Rng::derive(seed, r), so results do not depend on how
/// runs are scheduled.
inline BaselineMetrics simulate_baseline(long vehicle_count, const DensityScenario& scenario,
                                         int runs, std::uint64_t seed,
                                         const BaselineParams& params = {}) {
    if (runs < 1) throw DomainError("runs must be at least 1");
    const std::vector<LaneGroup> groups{LaneGroup::A, LaneGroup::B};
    const SpeedRange bounds{std::max(1e-9, scenario.speed_mph - scenario.speed_margin_mph),
                            scenario.speed_mph + scenario.speed_margin_mph};

    BaselineMetrics mean;
    mean.vehicles = vehicle_count;
    if (vehicle_count == 0) return mean;
    for (int r = 0; r < runs; ++r) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(r));
        const auto vehicles = place_vehicles(vehicle_count, scenario, rng);
        const auto m = run_reservation_baseline(vehicles, groups, bounds, params).metrics;
        mean.expected_collisions_per_vehicle += m.expected_collisions_per_vehicle;
        mean.avg_wait += m.avg_wait;
        mean.max_wait = std::max(mean.max_wait, m.max_wait);
        mean.conflict_pairs += m.conflict_pairs;
        mean.request_conflicts_per_vehicle += m.request_conflicts_per_vehicle;
        mean.stops += m.stops;
        mean.adjustments += m.adjustments;
    }
    mean.expected_collisions_per_vehicle /= runs;
    mean.avg_wait /= runs;
    mean.conflict_pairs /= runs;
    mean.request_conflicts_per_vehicle /= runs;
    return mean;
}

}  // namespace prodline
