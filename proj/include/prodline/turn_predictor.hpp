#pragma once

// k-nearest-neighbour right-turn classifier over (day, hour, event)
// features, with incremental growth as vehicles enter the intersection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "prodline/units.hpp"

namespace prodline {

/// day: 1 (Monday) .. 5 (Friday); hour: 0..23; event: 1 if an event is
/// happening near the intersection, 0 otherwise.
struct FeatureVector {
    int day = 1;
    int hour = 0;
    int event = 0;

    FeatureVector() = default;
    FeatureVector(int day_, int hour_, int event_) : day(day_), hour(hour_), event(event_) {
        if (day < 1 || day > 5) throw DomainError("day must be in 1..5");
        if (hour < 0 || hour > 23) throw DomainError("hour must be in 0..23");
        if (event != 0 && event != 1) throw DomainError("event must be 0 or 1");
    }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class TurnClass { Right, Straight };

inline char turn_symbol(TurnClass c) { return c == TurnClass::Right ? '+' : '-'; }

inline TurnClass parse_turn_symbol(char c) {
    if (c == '+') return TurnClass::Right;
    if (c == '-') return TurnClass::Straight;
    throw DomainError(std::string("turn class must be '+' or '-', got '") + c + "'");
}

struct TrainingInstance {
    FeatureVector features;
    TurnClass turn = TurnClass::Straight;
};

/// Squared Euclidean distance; exact in integers.
inline int squared_distance(const FeatureVector& a, const FeatureVector& b) {
    const int dd = a.day - b.day;
    const int dh = a.hour - b.hour;
    const int de = a.event - b.event;
    return dd * dd + dh * dh + de * de;
}

/// Unnormalised Euclidean distance over (day, hour, event).
inline double distance(const FeatureVector& a, const FeatureVector& b) {
    return std::sqrt(static_cast<double>(squared_distance(a, b)));
}

/// Ordered training set plus the neighbour count k (odd, positive).
class PredictorState {
public:
    explicit PredictorState(std::vector<TrainingInstance> training = {}, int k = 3)
        : training_(std::move(training)), k_(k) {
        if (k_ < 1 || k_ % 2 == 0) {
            throw DomainError("k must be a positive odd integer, got " + std::to_string(k_));
        }
    }

    [[nodiscard]] int k() const noexcept { return k_; }
    [[nodiscard]] std::size_t size() const noexcept { return training_.size(); }
    [[nodiscard]] std::span<const TrainingInstance> training() const noexcept { return training_; }

    /// Majority class among the k nearest rows. Neighbours are ranked by
    /// (distance, insertion index); a tied vote resolves to Straight.
    [[nodiscard]] TurnClass classify(const FeatureVector& query) const {
        if (training_.empty()) {
            throw std::logic_error("cannot classify with an empty training set");
        }
        const auto k = static_cast<std::size_t>(k_);
        if (k > training_.size()) {
            throw std::logic_error("k exceeds the training set size");
        }

        // Bounded max-heap of the k best (squared distance, index) keys.
        using Key = std::pair<int, std::size_t>;
        std::vector<Key> best;
        best.reserve(k + 1);
        for (std::size_t i = 0; i < training_.size(); ++i) {
            const Key key{squared_distance(query, training_[i].features), i};
            if (best.size() < k) {
                best.push_back(key);
                std::push_heap(best.begin(), best.end());
            } else if (key < best.front()) {
                std::pop_heap(best.begin(), best.end());
                best.back() = key;
                std::push_heap(best.begin(), best.end());
            }
        }

        int right = 0;
        for (const auto& [d2, idx] : best) {
            if (training_[idx].turn == TurnClass::Right) ++right;
        }
        const int straight = static_cast<int>(best.size()) - right;
        return right > straight ? TurnClass::Right : TurnClass::Straight;
    }

    /// Appends one row; duplicates are kept.
    void observe(const TrainingInstance& instance) { training_.push_back(instance); }

private:
    std::vector<TrainingInstance> training_;
    int k_;
};

inline TurnClass classify(const PredictorState& state, const FeatureVector& query) {
    return state.classify(query);
}

inline PredictorState observe(PredictorState state, const TrainingInstance& instance) {
    state.observe(instance);
    return state;
}

/// Classifies each arrival in turn and feeds the predicted class back into
/// the training set before the next one.
inline std::vector<TurnClass> predict_sequence(PredictorState state,
                                               std::span<const FeatureVector> arrivals) {
    std::vector<TurnClass> out;
    out.reserve(arrivals.size());
    for (const auto& f : arrivals) {
        const TurnClass c = state.classify(f);
        state.observe({f, c});
        out.push_back(c);
    }
    return out;
}

/// The nine-row seed table the intersection starts with.
inline std::vector<TrainingInstance> initial_training_table() {
    using T = TurnClass;
    return {
        {{1, 9, 0}, T::Right},     {{3, 10, 0}, T::Right},    {{4, 8, 0}, T::Right},
        {{3, 8, 0}, T::Right},     {{4, 10, 0}, T::Right},    {{2, 20, 1}, T::Straight},
        {{5, 19, 1}, T::Straight}, {{1, 4, 1}, T::Straight},  {{2, 7, 1}, T::Straight},
    };
}

/// Feature rows of the thirty vehicles that entered lanes A1/A2 in the
/// reference one-minute run.
inline std::vector<FeatureVector> reference_instances_group_a() {
    return {
        {3, 3, 0},  {1, 5, 0},  {2, 11, 0}, {5, 10, 0}, {4, 1, 0},  {1, 23, 0},
        {2, 13, 0}, {2, 18, 1}, {3, 14, 1}, {2, 8, 1},  {4, 6, 1},  {1, 21, 1},
        {2, 3, 0},  {4, 15, 0}, {4, 22, 1}, {4, 22, 0}, {3, 8, 1},  {2, 21, 0},
        {3, 0, 1},  {1, 20, 0}, {4, 12, 0}, {1, 3, 1},  {1, 7, 1},  {1, 23, 1},
        {2, 2, 1},  {4, 6, 0},  {2, 0, 1},  {3, 16, 0}, {2, 1, 1},  {4, 11, 0},
    };
}

/// Same for lanes B1/B2.
inline std::vector<FeatureVector> reference_instances_group_b() {
    return {
        {1, 8, 0},  {4, 12, 0}, {5, 2, 1},  {4, 3, 1},  {4, 12, 0}, {2, 1, 0},
        {2, 13, 0}, {4, 20, 1}, {3, 18, 1}, {5, 16, 0}, {2, 1, 0},  {5, 3, 0},
        {5, 9, 0},  {3, 11, 1}, {4, 2, 1},  {2, 9, 0},  {2, 9, 0},  {5, 19, 1},
        {3, 11, 1}, {3, 18, 1}, {2, 16, 1}, {5, 15, 1}, {3, 11, 1}, {4, 17, 1},
        {3, 16, 1}, {3, 22, 1}, {5, 23, 0}, {2, 12, 1}, {2, 11, 0}, {5, 19, 1},
    };
}

}  // namespace prodline
