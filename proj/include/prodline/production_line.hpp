#pragma once

// Production-line intersection: the intersection generates fixed-length
// containers at every gate opening, the two conflicting lane groups open in
// strict alternation, and each arriving vehicle is placed FIFO into the next
// free container of its lane.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "prodline/turn_predictor.hpp"
#include "prodline/units.hpp"

namespace prodline {

inline constexpr double kTimeTolerance = 1e-6;

enum class LaneGroup { A, B };

inline char group_name(LaneGroup g) { return g == LaneGroup::A ? 'A' : 'B'; }

struct Lane {
    std::string id;
    LaneGroup group = LaneGroup::A;
};

/// Cyclic gate timer. Group A is open on [offset_a, offset_a + open) and
/// group B on [offset_b, offset_b + open), both modulo the cycle; the two
/// intervals partition the cycle so exactly one group is open at any time.
class GateSchedule {
public:
    GateSchedule(double cycle_period, double open_duration, double offset_a, double offset_b)
        : cycle_(cycle_period), open_(open_duration), offset_a_(offset_a), offset_b_(offset_b) {
        if (!(cycle_ > 0.0) || !(open_ > 0.0)) {
            throw DomainError("gate cycle_period and open_duration must be positive");
        }
        if (std::abs(2.0 * open_ - cycle_) > 1e-9) {
            throw DomainError("gate open_duration must be half the cycle_period");
        }
        for (double off : {offset_a_, offset_b_}) {
            if (!(off >= 0.0) || !(off < cycle_)) {
                throw DomainError("gate offsets must lie in [0, cycle_period)");
            }
        }
        const double gap = std::fmod(offset_b_ - offset_a_ + cycle_, cycle_);
        if (std::abs(gap - open_) > 1e-9) {
            throw DomainError("gate open intervals of A and B must not overlap");
        }
    }

    /// 2 s cycle: A open on [0, 1), B open on [1, 2).
    static GateSchedule alternating() { return GateSchedule{2.0, 1.0, 0.0, 1.0}; }

    [[nodiscard]] double cycle_period() const noexcept { return cycle_; }
    [[nodiscard]] double open_duration() const noexcept { return open_; }
    [[nodiscard]] double offset(LaneGroup g) const noexcept {
        return g == LaneGroup::A ? offset_a_ : offset_b_;
    }

    [[nodiscard]] bool is_open(LaneGroup g, double t) const {
        double phase = std::fmod(t - offset(g), cycle_);
        if (phase < 0.0) phase += cycle_;
        // absorb rounding right at the end of a cycle
        if (cycle_ - phase <= 1e-9) phase = 0.0;
        return phase < open_;
    }

    /// Start of the `index`-th opening of group g.
    [[nodiscard]] double slot_time(LaneGroup g, long index) const {
        return offset(g) + static_cast<double>(index) * cycle_;
    }

    /// Index of the first opening of g starting at or after t.
    [[nodiscard]] long first_slot_index_at_or_after(LaneGroup g, double t) const {
        const double raw = std::ceil((t - offset(g)) / cycle_ - 1e-9);
        return std::max(0L, static_cast<long>(raw));
    }

    /// Openings of g that start inside [0, horizon).
    [[nodiscard]] long slots_before(LaneGroup g, double horizon) const {
        if (horizon <= offset(g)) return 0;
        return static_cast<long>(std::ceil((horizon - offset(g)) / cycle_ - 1e-9));
    }

private:
    double cycle_;
    double open_;
    double offset_a_;
    double offset_b_;
};

inline bool is_gate_open(const GateSchedule& schedule, LaneGroup group, double t) {
    return schedule.is_open(group, t);
}

struct IntersectionConfig {
    IntersectionConfig(SpeedRange speed_range_, double container_length_ft_,
                       int containers_per_lane_, double run_duration_s_, GateSchedule gates_,
                       std::vector<Lane> lanes_)
        : speed_range(speed_range_), container_length_ft(container_length_ft_),
          containers_per_lane(containers_per_lane_), run_duration_s(run_duration_s_),
          gates(gates_), lanes(std::move(lanes_)) {
        if (!(container_length_ft > 0.0)) {
            throw DomainError("container_length must be positive");
        }
        if (containers_per_lane < 1) {
            throw DomainError("containers_per_lane must be at least 1");
        }
        if (!(run_duration_s > 0.0)) {
            throw DomainError("run_duration must be positive");
        }
        if (lanes.empty()) {
            throw DomainError("at least one lane is required");
        }
        std::set<std::string> seen;
        for (const auto& lane : lanes) {
            if (lane.id.empty() || !seen.insert(lane.id).second) {
                throw DomainError("lane ids must be non-empty and unique");
            }
        }
    }

    /// Four lanes (A1, A2 | B1, B2), 60-65 mph, 60 containers of 26.2467 ft,
    /// one-minute run, alternating 1 s gates.
    static IntersectionConfig four_lane_reference() {
        return IntersectionConfig{SpeedRange{60.0, 65.0},
                                  26.2467,
                                  60,
                                  60.0,
                                  GateSchedule::alternating(),
                                  {{"A1", LaneGroup::A},
                                   {"A2", LaneGroup::A},
                                   {"B1", LaneGroup::B},
                                   {"B2", LaneGroup::B}}};
    }

    [[nodiscard]] const Lane& lane(const std::string& id) const {
        for (const auto& l : lanes) {
            if (l.id == id) return l;
        }
        throw DomainError("unknown lane '" + id + "'");
    }

    [[nodiscard]] std::size_t lane_index(const std::string& id) const {
        for (std::size_t i = 0; i < lanes.size(); ++i) {
            if (lanes[i].id == id) return i;
        }
        throw DomainError("unknown lane '" + id + "'");
    }

    /// Container slots one group gets inside the run window.
    [[nodiscard]] long base_slots(LaneGroup g) const { return gates.slots_before(g, run_duration_s); }

    SpeedRange speed_range;
    double container_length_ft;
    int containers_per_lane;
    double run_duration_s;
    GateSchedule gates;
    std::vector<Lane> lanes;
};

struct VehicleRequest {
    int vehicle_id = 0;
    std::string lane_id;
    double arrival_time = 0.0;
    Speed arrival_speed;
    FeatureVector features;
};

enum class RejectReason { None, SpeedOutOfRange };

struct AdmissionDecision {
    bool accepted = false;
    Speed entry_speed;
    RejectReason reason = RejectReason::None;
};

/// Accepts iff s1 <= arrival speed <= s2; admitted vehicles are snapped to
/// the range midpoint.
inline AdmissionDecision admit(const VehicleRequest& request, const IntersectionConfig& config) {
    if (!config.speed_range.contains(request.arrival_speed.in_mph())) {
        return {false, request.arrival_speed, RejectReason::SpeedOutOfRange};
    }
    return {true, average_speed(config.speed_range), RejectReason::None};
}

/// Smallest opening of `group` at or after `after` that is not in `occupied`.
inline double next_open_slot(const GateSchedule& schedule, LaneGroup group, double after,
                             const std::set<double>& occupied = {}) {
    long idx = schedule.first_slot_index_at_or_after(group, std::max(after, 0.0));
    for (;; ++idx) {
        const double t = schedule.slot_time(group, idx);
        const auto it = occupied.lower_bound(t - kTimeTolerance);
        if (it == occupied.end() || *it > t + kTimeTolerance) return t;
    }
}

struct SlotGrant {
    double arrival = 0.0;
    double slot = 0.0;
    double wait = 0.0;
};

/// FIFO greedy: every arrival takes the first opening at or after its
/// arrival that is a full cycle past the previous vehicle's slot.
/// `arrivals` must be sorted non-decreasing.
inline std::vector<SlotGrant> assign_slots(std::span<const double> arrivals,
                                           const GateSchedule& schedule, LaneGroup group) {
    if (!std::is_sorted(arrivals.begin(), arrivals.end())) {
        throw DomainError("arrivals must be sorted");
    }
    std::vector<SlotGrant> out;
    out.reserve(arrivals.size());
    double earliest = 0.0;
    for (double a : arrivals) {
        if (!(a >= 0.0)) throw DomainError("arrival times must be non-negative");
        const double slot = next_open_slot(schedule, group, std::max(a, earliest));
        out.push_back({a, slot, slot - a});
        earliest = slot + schedule.cycle_period();
    }
    return out;
}

/// Extra lane space needed, in percent of the base slot budget.
inline double extra_space_pct(long requests, long base_slots) {
    if (base_slots <= 0) throw DomainError("base_slots must be positive");
    if (requests < 0) throw DomainError("request count must be non-negative");
    if (requests <= base_slots) return 0.0;
    return static_cast<double>(requests - base_slots) / static_cast<double>(base_slots) * 100.0;
}

/// Time to traverse the lane's full container line at the average speed.
inline double traversal_time(const IntersectionConfig& config) {
    const double length = config.containers_per_lane * config.container_length_ft;
    return time_to_point(length, average_speed(config.speed_range));
}

inline double exit_time(double slot_time, const IntersectionConfig& config) {
    if (!(slot_time >= 0.0)) throw DomainError("slot_time must be non-negative");
    return slot_time + traversal_time(config);
}

struct SlotAssignment {
    int vehicle_id = 0;
    std::string lane_id;
    double arrival_time = 0.0;
    double slot_time = 0.0;
    double wait = 0.0;
    Speed entry_speed;
    TurnClass right_turn = TurnClass::Straight;
    double exit_time = 0.0;
};

struct Rejection {
    int vehicle_id = 0;
    std::string lane_id;
    double arrival_time = 0.0;
    RejectReason reason = RejectReason::SpeedOutOfRange;
};

struct LaneMetrics {
    std::string lane_id;
    long admitted = 0;
    long base_slots = 0;
    double extra_space_pct = 0.0;
};

struct ScheduleResult {
    std::vector<SlotAssignment> assignments;  // by (slot_time, lane order)
    double avg_wait = 0.0;
    double max_wait = 0.0;
    double extra_space_pct = 0.0;  // worst lane
    std::vector<Rejection> rejected;
    std::vector<LaneMetrics> lanes;
};

/// One deterministic run: admission, slot assignment, turn prediction and
/// exit times for every lane. Each lane group has its own predictor, seeded
/// from `predictor` and fed once per occupied opening.
inline ScheduleResult simulate_run(const IntersectionConfig& config,
                                   std::span<const VehicleRequest> requests,
                                   const PredictorState& predictor) {
    const auto& lanes = config.lanes;
    std::vector<std::vector<const VehicleRequest*>> per_lane(lanes.size());
    std::set<int> ids;
    for (const auto& r : requests) {
        if (!(r.arrival_time >= 0.0) || r.arrival_time > config.run_duration_s) {
            throw DomainError("arrival time outside the run window for vehicle " +
                              std::to_string(r.vehicle_id));
        }
        if (!ids.insert(r.vehicle_id).second) {
            throw DomainError("duplicate vehicle id " + std::to_string(r.vehicle_id));
        }
        per_lane[config.lane_index(r.lane_id)].push_back(&r);
    }

    ScheduleResult result;
    std::vector<std::pair<std::size_t, SlotAssignment>> placed;  // (lane index, row)

    for (std::size_t li = 0; li < lanes.size(); ++li) {
        auto& queue = per_lane[li];
        std::stable_sort(queue.begin(), queue.end(), [](const auto* a, const auto* b) {
            return a->arrival_time < b->arrival_time;
        });

        std::vector<const VehicleRequest*> admitted;
        std::vector<double> arrivals;
        Speed entry;
        for (const auto* r : queue) {
            const auto decision = admit(*r, config);
            if (!decision.accepted) {
                result.rejected.push_back({r->vehicle_id, r->lane_id, r->arrival_time, decision.reason});
                continue;
            }
            entry = decision.entry_speed;
            admitted.push_back(r);
            arrivals.push_back(r->arrival_time);
        }

        const auto grants = assign_slots(arrivals, config.gates, lanes[li].group);
        for (std::size_t i = 0; i < grants.size(); ++i) {
            SlotAssignment row;
            row.vehicle_id = admitted[i]->vehicle_id;
            row.lane_id = lanes[li].id;
            row.arrival_time = grants[i].arrival;
            row.slot_time = grants[i].slot;
            row.wait = grants[i].wait;
            row.entry_speed = entry;
            row.exit_time = exit_time(grants[i].slot, config);
            placed.emplace_back(li, std::move(row));
        }

        const long base = config.base_slots(lanes[li].group);
        const auto n = static_cast<long>(admitted.size());
        result.lanes.push_back({lanes[li].id, n, base, extra_space_pct(n, base)});
    }

    std::stable_sort(placed.begin(), placed.end(), [](const auto& a, const auto& b) {
        if (a.second.slot_time != b.second.slot_time) return a.second.slot_time < b.second.slot_time;
        return a.first < b.first;
    });

    // One prediction per group opening: the containers generated together
    // for the group's lanes share it. The first vehicle of the opening (lane
    // order) supplies the features.
    struct GroupTurns {
        PredictorState state;
        double last_slot;
        TurnClass current;
    };
    std::map<LaneGroup, GroupTurns> turns;
    std::map<int, FeatureVector> features;
    for (const auto& r : requests) features.emplace(r.vehicle_id, r.features);
    for (auto& [li, row] : placed) {
        auto [it, fresh] = turns.try_emplace(lanes[li].group, GroupTurns{predictor, -1.0, TurnClass::Straight});
        auto& g = it->second;
        if (fresh || std::abs(row.slot_time - g.last_slot) > kTimeTolerance) {
            const FeatureVector& f = features.at(row.vehicle_id);
            g.current = g.state.classify(f);
            g.state.observe({f, g.current});
            g.last_slot = row.slot_time;
        }
        row.right_turn = g.current;
    }

    double total = 0.0;
    for (auto& [li, row] : placed) {
        total += row.wait;
        result.max_wait = std::max(result.max_wait, row.wait);
        result.assignments.push_back(std::move(row));
    }
    if (!result.assignments.empty()) {
        result.avg_wait = total / static_cast<double>(result.assignments.size());
    }
    for (const auto& lm : result.lanes) {
        result.extra_space_pct = std::max(result.extra_space_pct, lm.extra_space_pct);
    }
    return result;
}

enum class ConflictKind { DuplicateSlot, GateClosed };

struct OccupancyConflict {
    ConflictKind kind;
    int vehicle_id = 0;
    std::string lane_id;
    double slot_time = 0.0;
};

/// Lists every container shared by two vehicles of one lane and every slot
/// granted while the lane's gate is closed.
inline std::vector<OccupancyConflict> occupancy_check(const ScheduleResult& result,
                                                      const IntersectionConfig& config) {
    std::vector<OccupancyConflict> out;
    std::map<std::string, std::vector<const SlotAssignment*>> by_lane;
    for (const auto& a : result.assignments) by_lane[a.lane_id].push_back(&a);

    for (auto& [lane_id, rows] : by_lane) {
        const LaneGroup group = config.lane(lane_id).group;
        std::stable_sort(rows.begin(), rows.end(),
                         [](const auto* x, const auto* y) { return x->slot_time < y->slot_time; });
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!config.gates.is_open(group, rows[i]->slot_time)) {
                out.push_back({ConflictKind::GateClosed, rows[i]->vehicle_id, lane_id, rows[i]->slot_time});
            }
            if (i > 0 && std::abs(rows[i]->slot_time - rows[i - 1]->slot_time) <= kTimeTolerance) {
                out.push_back({ConflictKind::DuplicateSlot, rows[i]->vehicle_id, lane_id, rows[i]->slot_time});
            }
        }
    }
    return out;
}

class HandoffError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Link from the upstream average speed to the downstream average speed.
inline CorridorLink corridor_link_between(const IntersectionConfig& upstream,
                                          const IntersectionConfig& downstream,
                                          double zone_length_ft) {
    return CorridorLink{average_speed(upstream.speed_range).in_mph(),
                        average_speed(downstream.speed_range).in_mph(), zone_length_ft};
}

/// Turns an upstream exit into the downstream arrival request after the
/// vehicle crosses the speed transition zone.
inline VehicleRequest corridor_handoff(const CorridorLink& link, const SlotAssignment& upstream,
                                       const IntersectionConfig& downstream,
                                       const std::string& downstream_lane,
                                       const FeatureVector& features = {}) {
    const double from = link.exit_speed.in_mph();
    const double to = link.target_speed.in_mph();
    if (std::abs(from - upstream.entry_speed.in_mph()) > 1e-6) {
        throw HandoffError("link exit speed does not match the vehicle's exit speed");
    }
    if (link.zone_length_ft == 0.0 && std::abs(from - to) > 1e-6) {
        throw HandoffError("zero-length transition zone cannot change speed");
    }
    if (!downstream.speed_range.contains(to)) {
        throw HandoffError("target speed is outside the downstream admission range");
    }
    (void)downstream.lane(downstream_lane);  // throws on an unknown lane

    VehicleRequest next;
    next.vehicle_id = upstream.vehicle_id;
    next.lane_id = downstream_lane;
    next.arrival_time = upstream.exit_time + transition_time(link);
    next.arrival_speed = link.target_speed;
    next.features = features;
    return next;
}

}  // namespace prodline
