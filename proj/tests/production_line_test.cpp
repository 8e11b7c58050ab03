#include "prodline/production_line.hpp"

#include <gtest/gtest.h>

#include <numeric>

#include "oracles.hpp"
#include "prodline/patterns.hpp"
#include "prodline/random.hpp"

namespace prodline {
namespace {

const GateSchedule kGates = GateSchedule::alternating();

std::vector<double> slots_of(const std::vector<SlotGrant>& grants) {
    std::vector<double> out;
    for (const auto& g : grants) out.push_back(g.slot);
    return out;
}

std::vector<double> every_other(double start, std::size_t n) {
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(start + 2.0 * static_cast<double>(i));
    return out;
}

VehicleRequest request(int id, const std::string& lane, double t, double mph = 62.0) {
    VehicleRequest r;
    r.vehicle_id = id;
    r.lane_id = lane;
    r.arrival_time = t;
    r.arrival_speed = Speed::mph(mph);
    return r;
}

PredictorState seed_predictor() { return PredictorState(initial_training_table(), 3); }

TEST(Gates, AlternatingExamples) {
    EXPECT_TRUE(is_gate_open(kGates, LaneGroup::A, 0.5));
    EXPECT_FALSE(is_gate_open(kGates, LaneGroup::B, 0.5));
    EXPECT_TRUE(is_gate_open(kGates, LaneGroup::B, 1.5));
    EXPECT_TRUE(is_gate_open(kGates, LaneGroup::A, 2.0));
    EXPECT_FALSE(is_gate_open(kGates, LaneGroup::A, 1.0));
}

TEST(Gates, ExactlyOneGroupOpen) {
    Rng rng{21};
    for (int i = 0; i < 20000; ++i) {
        const double t = rng.uniform(0, 1000);
        EXPECT_NE(kGates.is_open(LaneGroup::A, t), kGates.is_open(LaneGroup::B, t)) << t;
    }
}

TEST(Gates, RejectsOverlappingOrLopsidedSchedules) {
    EXPECT_THROW(GateSchedule(2, 1.5, 0, 1), DomainError);
    EXPECT_THROW(GateSchedule(2, 1, 0, 0.5), DomainError);
    EXPECT_THROW(GateSchedule(2, 1, 0, 2), DomainError);
    EXPECT_THROW(GateSchedule(0, 0, 0, 0), DomainError);
}

TEST(Slots, NextOpenSlotExamples) {
    EXPECT_EQ(next_open_slot(kGates, LaneGroup::A, 0.3), 2.0);
    EXPECT_EQ(next_open_slot(kGates, LaneGroup::B, 0.3), 1.0);
    EXPECT_EQ(next_open_slot(kGates, LaneGroup::A, 2.0), 2.0);
    EXPECT_EQ(next_open_slot(kGates, LaneGroup::A, 2.0, {2.0, 4.0}), 6.0);
}

TEST(Slots, NextOpenSlotAgreesWithScan) {
    Rng rng{22};
    for (int trial = 0; trial < 3000; ++trial) {
        const bool a = rng.bernoulli(0.5);
        const double after = rng.uniform(0, 50);
        std::set<double> occupied;
        for (int k = 0; k < 10; ++k) occupied.insert(static_cast<double>(rng.below(60)));
        EXPECT_EQ(next_open_slot(kGates, a ? LaneGroup::A : LaneGroup::B, after, occupied),
                  oracle::scan_next_slot(a, after, occupied));
    }
}

TEST(Admission, BoundsAreInclusive) {
    const auto cfg = IntersectionConfig::four_lane_reference();
    const auto hi = admit(request(1, "A1", 0, 61), cfg);
    EXPECT_TRUE(hi.accepted);
    EXPECT_DOUBLE_EQ(hi.entry_speed.in_mph(), 62.5);
    EXPECT_TRUE(admit(request(2, "A1", 0, 60), cfg).accepted);
    EXPECT_TRUE(admit(request(3, "A1", 0, 65), cfg).accepted);
    const auto low = admit(request(4, "A1", 0, 59), cfg);
    EXPECT_FALSE(low.accepted);
    EXPECT_EQ(low.reason, RejectReason::SpeedOutOfRange);
    EXPECT_FALSE(admit(request(5, "A1", 0, 65.5), cfg).accepted);
}

TEST(Assign, MatchedIsWaitFree) {
    const auto arrivals = bits_to_arrivals(matched_pattern(60));
    const auto grants = assign_slots(arrivals, kGates, LaneGroup::A);
    EXPECT_EQ(slots_of(grants), every_other(0, 30));
    for (const auto& g : grants) EXPECT_EQ(g.wait, 0.0);
}

TEST(Assign, WorstPatternQueues) {
    const auto arrivals = bits_to_arrivals(worst_pattern(60));
    const auto grants = assign_slots(arrivals, kGates, LaneGroup::A);
    EXPECT_EQ(slots_of(grants), every_other(0, 60));
    double total = 0;
    for (const auto& g : grants) total += g.wait;
    EXPECT_DOUBLE_EQ(total / 60.0, 29.5);
    EXPECT_EQ(grants.back().wait, 59.0);
}

TEST(Assign, EmptyAndUnsorted) {
    EXPECT_TRUE(assign_slots(std::vector<double>{}, kGates, LaneGroup::A).empty());
    EXPECT_THROW(assign_slots(std::vector<double>{3, 1}, kGates, LaneGroup::A), DomainError);
}

TEST(ExtraSpace, Examples) {
    EXPECT_EQ(extra_space_pct(60, 30), 100.0);
    EXPECT_EQ(extra_space_pct(30, 30), 0.0);
    EXPECT_EQ(extra_space_pct(45, 30), 50.0);
    EXPECT_EQ(extra_space_pct(10, 30), 0.0);
    EXPECT_THROW(extra_space_pct(10, 0), DomainError);
}

TEST(ExitTime, TraversalOfTheContainerLine) {
    const auto cfg = IntersectionConfig::four_lane_reference();
    const double expected = 60 * 26.2467 / oracle::mph_to_fps(62.5);
    EXPECT_NEAR(exit_time(0, cfg), expected, 1e-9);
    EXPECT_NEAR(exit_time(0, cfg), 17.1797, 1e-3);
    EXPECT_NEAR(exit_time(9, cfg), 26.1797, 1e-3);
}

TEST(Config, RejectsZeroContainers) {
    EXPECT_THROW(IntersectionConfig(SpeedRange{60, 65}, 26.2467, 0, 60, kGates, {{"A1", LaneGroup::A}}),
                 DomainError);
    EXPECT_THROW(IntersectionConfig(SpeedRange{60, 65}, 26.2467, 60, 60, kGates,
                                    {{"A1", LaneGroup::A}, {"A1", LaneGroup::B}}),
                 DomainError);
}

TEST(Simulate, MatchedFourLanes) {
    const auto cfg = IntersectionConfig::four_lane_reference();
    std::vector<VehicleRequest> reqs;
    int id = 0;
    for (const auto& lane : cfg.lanes) {
        const double off = cfg.gates.offset(lane.group);
        for (double t : bits_to_arrivals(matched_pattern(60))) reqs.push_back(request(id++, lane.id, t + off));
    }
    const auto result = simulate_run(cfg, reqs, seed_predictor());
    EXPECT_EQ(result.assignments.size(), 120u);
    EXPECT_EQ(result.avg_wait, 0.0);
    EXPECT_EQ(result.extra_space_pct, 0.0);
    EXPECT_TRUE(occupancy_check(result, cfg).empty());
    // ordered by slot, then lane order
    EXPECT_EQ(result.assignments[0].lane_id, "A1");
    EXPECT_EQ(result.assignments[1].lane_id, "A2");
    EXPECT_EQ(result.assignments[2].lane_id, "B1");
    EXPECT_EQ(result.assignments[2].slot_time, 1.0);
}

TEST(Simulate, RejectsOutOfRangeSpeedsAndBadInput) {
    const auto cfg = IntersectionConfig::four_lane_reference();
    std::vector<VehicleRequest> reqs{request(1, "A1", 0), request(2, "A1", 2, 70)};
    const auto result = simulate_run(cfg, reqs, seed_predictor());
    ASSERT_EQ(result.rejected.size(), 1u);
    EXPECT_EQ(result.rejected[0].vehicle_id, 2);
    EXPECT_EQ(result.assignments.size(), 1u);

    std::vector<VehicleRequest> dup{request(1, "A1", 0), request(1, "A2", 0)};
    EXPECT_THROW(simulate_run(cfg, dup, seed_predictor()), DomainError);
    std::vector<VehicleRequest> late{request(1, "A1", 61)};
    EXPECT_THROW(simulate_run(cfg, late, seed_predictor()), DomainError);
    std::vector<VehicleRequest> unknown{request(1, "C1", 0)};
    EXPECT_THROW(simulate_run(cfg, unknown, seed_predictor()), DomainError);
}

TEST(Simulate, OpeningSharesOnePrediction) {
    const auto cfg = IntersectionConfig::four_lane_reference();
    std::vector<VehicleRequest> reqs{request(1, "A1", 0), request(2, "A2", 0)};
    reqs[0].features = FeatureVector{3, 9, 0};
    reqs[1].features = FeatureVector{2, 20, 1};
    const auto result = simulate_run(cfg, reqs, seed_predictor());
    ASSERT_EQ(result.assignments.size(), 2u);
    EXPECT_EQ(result.assignments[0].right_turn, TurnClass::Right);
    EXPECT_EQ(result.assignments[1].right_turn, TurnClass::Right);
}

TEST(Occupancy, FlagsDuplicatesAndClosedGates) {
    const auto cfg = IntersectionConfig::four_lane_reference();
    ScheduleResult r;
    SlotAssignment a;
    a.vehicle_id = 1;
    a.lane_id = "A1";
    a.slot_time = 2.0;
    r.assignments.push_back(a);
    a.vehicle_id = 2;
    r.assignments.push_back(a);
    a.vehicle_id = 3;
    a.slot_time = 3.0;
    r.assignments.push_back(a);
    const auto conflicts = occupancy_check(r, cfg);
    ASSERT_EQ(conflicts.size(), 2u);
    EXPECT_EQ(conflicts[0].kind, ConflictKind::DuplicateSlot);
    EXPECT_EQ(conflicts[0].vehicle_id, 2);
    EXPECT_EQ(conflicts[1].kind, ConflictKind::GateClosed);
    EXPECT_EQ(conflicts[1].vehicle_id, 3);
}

SlotAssignment upstream_row(double exit, double speed_mph) {
    SlotAssignment a;
    a.vehicle_id = 7;
    a.lane_id = "A1";
    a.exit_time = exit;
    a.entry_speed = Speed::mph(speed_mph);
    return a;
}

TEST(Corridor, IdentityLink) {
    const auto cfg = IntersectionConfig::four_lane_reference();
    const auto next = corridor_handoff(CorridorLink{62.5, 62.5, 0}, upstream_row(17.18, 62.5), cfg, "A1");
    EXPECT_EQ(next.arrival_time, 17.18);
    EXPECT_EQ(next.arrival_speed.in_mph(), 62.5);
    EXPECT_EQ(next.vehicle_id, 7);
}

TEST(Corridor, RampToFasterIntersection) {
    const IntersectionConfig down{SpeedRange{102.5, 107.5}, 26.2467, 60, 240, kGates,
                                  {{"A1", LaneGroup::A}}};
    const auto next = corridor_handoff(CorridorLink{62.5, 105, 1000}, upstream_row(17.18, 62.5), down, "A1");
    const double ramp = oracle::simpson(
        [](double x) { return 1.0 / oracle::mph_to_fps(62.5 + 42.5 * x / 1000.0); }, 0.0, 1000.0);
    EXPECT_NEAR(next.arrival_time, 17.18 + ramp, 1e-9);
    EXPECT_GT(ramp, 1000.0 / oracle::mph_to_fps(105));
    EXPECT_LT(ramp, 1000.0 / oracle::mph_to_fps(62.5));
    EXPECT_EQ(next.arrival_speed.in_mph(), 105.0);
}

TEST(Corridor, HandoffErrors) {
    const auto cfg = IntersectionConfig::four_lane_reference();
    EXPECT_THROW(corridor_handoff(CorridorLink{62.5, 70, 0}, upstream_row(1, 62.5), cfg, "A1"), HandoffError);
    EXPECT_THROW(corridor_handoff(CorridorLink{62.5, 105, 500}, upstream_row(1, 62.5), cfg, "A1"), HandoffError);
    EXPECT_THROW(corridor_handoff(CorridorLink{70, 62.5, 500}, upstream_row(1, 62.5), cfg, "A1"), HandoffError);
    EXPECT_THROW(corridor_handoff(CorridorLink{62.5, 62.5, 0}, upstream_row(1, 62.5), cfg, "Z9"), DomainError);
}

// FIFO, one vehicle per container, work conservation.
TEST(ScheduleProperty, RandomPatterns) {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto arrivals = bits_to_arrivals(random_pattern(60, 0.5, seed));
        const bool a = seed % 2 == 0;
        const auto grants = assign_slots(arrivals, kGates, a ? LaneGroup::A : LaneGroup::B);
        ASSERT_EQ(grants.size(), arrivals.size());
        std::set<double> used;
        for (std::size_t i = 0; i < grants.size(); ++i) {
            const auto& g = grants[i];
            EXPECT_GE(g.slot, g.arrival);
            EXPECT_TRUE(used.insert(g.slot).second);
            if (i > 0) {
                EXPECT_GT(g.slot, grants[i - 1].slot);
            }
            // no free opening of the group was skipped while the vehicle waited
            const double earliest = i == 0 ? g.arrival : std::max(g.arrival, grants[i - 1].slot + 2.0);
            EXPECT_EQ(g.slot, oracle::scan_next_slot(a, earliest, {}));
        }
    }
}

TEST(ScheduleProperty, GreedyMatchesBruteForceOptimum) {
    Rng rng{23};
    for (int trial = 0; trial < 400; ++trial) {
        const auto n = static_cast<std::size_t>(1 + rng.below(8));
        std::vector<double> arrivals;
        for (std::size_t i = 0; i < n; ++i) arrivals.push_back(static_cast<double>(rng.below(16)));
        std::sort(arrivals.begin(), arrivals.end());
        const auto grants = assign_slots(arrivals, kGates, LaneGroup::B);
        double total = 0;
        for (const auto& g : grants) total += g.wait;
        EXPECT_NEAR(total, oracle::min_total_wait(arrivals, 1.0, 2.0), 1e-9);
    }
}

}  // namespace
}  // namespace prodline
