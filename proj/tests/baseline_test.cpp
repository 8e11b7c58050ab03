#include "prodline/baseline_reservation.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace prodline {
namespace {

TrajectoryQuery query(int id, double dist, double mph, double t0 = 0.0) {
    return {id, dist, Speed::mph(mph), "P", t0};
}

TEST(Conflict, SameArrivalCollides) {
    const auto c = predict_conflict(query(1, 600, 80), query(2, 600, 80), 0.5);
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(c->point_id, "P");
    EXPECT_NEAR(c->time_a, 5.11, 0.01);
}

TEST(Conflict, SeparatedArrivalsDoNot) {
    EXPECT_FALSE(predict_conflict(query(1, 600, 80), query(2, 1200, 80), 0.5).has_value());
    EXPECT_THROW(predict_conflict(query(1, 600, 80), TrajectoryQuery{2, 600, Speed::mph(80), "Q", 0}, 0.5),
                 DomainError);
}

TEST(Conflict, Symmetric) {
    Rng rng{41};
    for (int i = 0; i < 2000; ++i) {
        const auto a = query(1, rng.uniform(0, 2000), rng.uniform(20, 120), rng.uniform(0, 5));
        const auto b = query(2, rng.uniform(0, 2000), rng.uniform(20, 120), rng.uniform(0, 5));
        EXPECT_EQ(predict_conflict(a, b, 0.5).has_value(), predict_conflict(b, a, 0.5).has_value());
    }
}

TEST(Decide, EmptyReservationsAccept) {
    const auto d = decide(query(1, 600, 80), std::vector<Reservation>{}, SpeedRange{60, 80});
    EXPECT_EQ(d.verdict, Verdict::Accept);
    EXPECT_FALSE(d.adjusted_speed.has_value());
}

TEST(Decide, SecondOfTwoIdenticalVehiclesIsNotAccepted) {
    const auto first = query(1, 600, 80);
    std::vector<Reservation> res{{1, "P", first.arrival_time()}};
    const auto d = decide(query(2, 600, 80), res, SpeedRange{60, 80});
    EXPECT_NE(d.verdict, Verdict::Accept);
}

TEST(Decide, AdjustsToTheNearestClearSpeed) {
    std::vector<Reservation> res{{9, "P", 4.9}};
    const auto req = query(1, 600, 80);
    const auto d = decide(req, res, SpeedRange{60, 80});
    ASSERT_EQ(d.verdict, Verdict::AdjustSpeed);
    // grid oracle: walk down from 80 mph in 1 mph steps
    double expected = 0;
    for (int v = 79; v >= 60; --v) {
        const double t = 600.0 / oracle::mph_to_fps(v);
        if (std::abs(t - 4.9) > 0.5) {
            expected = v;
            break;
        }
    }
    EXPECT_EQ(d.adjusted_speed->in_mph(), expected);
    EXPECT_EQ(expected, 75.0);
}

TEST(Decide, StopsWhenNoSpeedClears) {
    std::vector<Reservation> res;
    for (double t = 3.0; t <= 12.0; t += 0.5) res.push_back({9, "P", t});
    EXPECT_EQ(decide(query(1, 600, 80), res, SpeedRange{60, 80}).verdict, Verdict::Stop);
}

TEST(DecideProperty, AdjustedSpeedIsClearAndInBounds) {
    Rng rng{42};
    for (int trial = 0; trial < 2000; ++trial) {
        const SpeedRange bounds{60, 80};
        const auto req = query(1, rng.uniform(100, 1200), rng.uniform(60, 80));
        std::vector<Reservation> res;
        const auto n = rng.below(6);
        for (std::uint64_t i = 0; i < n; ++i) res.push_back({static_cast<int>(i), "P", rng.uniform(0, 15)});
        const auto d = decide(req, res, bounds);
        if (d.verdict == Verdict::AdjustSpeed) {
            ASSERT_TRUE(d.adjusted_speed.has_value());
            EXPECT_TRUE(bounds.contains(d.adjusted_speed->in_mph()));
            EXPECT_EQ(count_conflicts_at(req.arrival_time_at(*d.adjusted_speed), "P", res, 0.5), 0u);
        } else if (d.verdict == Verdict::Accept) {
            EXPECT_EQ(count_conflicts_at(req.arrival_time(), "P", res, 0.5), 0u);
        }
    }
}

TEST(Run, TwoCrossingVehiclesMakeOnePair) {
    const std::vector<LaneGroup> groups{LaneGroup::A, LaneGroup::B};
    const std::vector<ApproachingVehicle> v{{1, 0, 5.0, Speed::mph(80)}, {2, 1, 5.0, Speed::mph(80)}};
    const auto out = run_reservation_baseline(v, groups, SpeedRange{60, 80});
    EXPECT_EQ(out.metrics.conflict_pairs, 1.0);
    EXPECT_EQ(out.metrics.expected_collisions_per_vehicle, 1.0);
    ASSERT_EQ(out.grants.size(), 2u);
    EXPECT_GT(std::abs(out.grants[0].granted_arrival - out.grants[1].granted_arrival), 0.5);
}

TEST(Run, SameGroupNeverConflicts) {
    const std::vector<LaneGroup> groups{LaneGroup::A, LaneGroup::A};
    const std::vector<ApproachingVehicle> v{{1, 0, 5.0, Speed::mph(80)}, {2, 1, 5.0, Speed::mph(80)}};
    const auto out = run_reservation_baseline(v, groups, SpeedRange{60, 80});
    EXPECT_EQ(out.metrics.conflict_pairs, 0.0);
    EXPECT_EQ(out.metrics.avg_wait, 0.0);
}

TEST(RunProperty, GrantedReservationsNeverConflict) {
    const std::vector<LaneGroup> groups{LaneGroup::A, LaneGroup::B};
    const DensityScenario sc;
    const BaselineParams params;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng{seed};
        const auto v = place_vehicles(200, sc, rng);
        const auto out = run_reservation_baseline(v, groups, SpeedRange{95, 105}, params);
        ASSERT_EQ(out.grants.size(), v.size());
        for (std::size_t i = 0; i < out.grants.size(); ++i) {
            for (std::size_t j = i + 1; j < out.grants.size(); ++j) {
                const auto& a = out.grants[i];
                const auto& b = out.grants[j];
                if (groups[a.lane] == groups[b.lane]) continue;
                EXPECT_GT(std::abs(a.granted_arrival - b.granted_arrival), params.decision.epsilon_s);
            }
        }
    }
}

TEST(Density, ZeroVehicles) {
    const auto m = simulate_baseline(0, DensityScenario{}, 10, 1);
    EXPECT_EQ(m.vehicles, 0);
    EXPECT_EQ(m.expected_collisions_per_vehicle, 0.0);
    EXPECT_EQ(m.avg_wait, 0.0);
}

TEST(Density, PlacementUsesDistinctSpots) {
    Rng rng{43};
    const auto v = place_vehicles(301, DensityScenario{}, rng);
    ASSERT_EQ(v.size(), 301u);
    std::set<std::pair<std::size_t, double>> seen;
    long first = 0;
    for (const auto& x : v) {
        EXPECT_TRUE(seen.insert({x.lane, x.nominal_arrival}).second);
        first += x.lane == 0 ? 1 : 0;
    }
    EXPECT_EQ(first, 151);
    EXPECT_THROW(place_vehicles(2000, DensityScenario{}, rng), DomainError);
}

TEST(Density, TrendIncreasesWithVehicleCount) {
    double prev_c = -1, prev_w = -1;
    for (long n : {50L, 200L, 300L}) {
        const auto m = simulate_baseline(n, DensityScenario{}, 20, 7);
        EXPECT_GE(m.expected_collisions_per_vehicle, prev_c);
        EXPECT_GE(m.avg_wait, prev_w);
        prev_c = m.expected_collisions_per_vehicle;
        prev_w = m.avg_wait;
    }
}

TEST(Density, BitReproducible) {
    const auto a = simulate_baseline(200, DensityScenario{}, 5, 99);
    const auto b = simulate_baseline(200, DensityScenario{}, 5, 99);
    EXPECT_EQ(a.expected_collisions_per_vehicle, b.expected_collisions_per_vehicle);
    EXPECT_EQ(a.avg_wait, b.avg_wait);
    EXPECT_EQ(a.stops, b.stops);
}

}  // namespace
}  // namespace prodline
