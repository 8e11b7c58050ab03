#pragma once

// Experiment description files: a JSON document naming the intersection,
// per-lane arrival patterns, vehicle speeds and features, the predictor, and
// optional baseline / density / corridor blocks. Everything is validated at
// load time and errors name the offending field.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prodline/baseline_reservation.hpp"
#include "prodline/patterns.hpp"
#include "prodline/production_line.hpp"
#include "prodline/random.hpp"
#include "prodline/turn_predictor.hpp"

namespace prodline {

/// Malformed or invalid experiment input; maps to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File system failure; maps to exit code 2.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Model { ProductionLine, Baseline };

inline const char* model_name(Model m) {
    return m == Model::ProductionLine ? "production_line" : "baseline";
}

struct PatternSource {
    enum class Kind { Matched, Worst, Random, Fixture, Explicit };
    Kind kind = Kind::Matched;
    double probability = 0.5;
    std::optional<std::uint64_t> seed;  // random only; derived from the run seed when absent
    std::string fixture;                // fixture only
    std::vector<double> times;          // explicit only
    std::size_t length = 0;             // spot count; 0 means one per second of the run
    bool align_to_gate = true;          // shift spot 0 onto the group's first opening
};

struct SpeedSource {
    double min_mph = 0.0;
    double max_mph = 0.0;  // equal to min for a fixed speed
};

struct FeatureSource {
    enum class Kind { ReferenceInstances, Random };
    Kind kind = Kind::ReferenceInstances;
    std::uint64_t seed = 0;
};

struct DensitySpec {
    std::vector<long> vehicle_counts{50, 200, 300};
    DensityScenario scenario;
    int runs = 100;
};

struct CorridorSpec {
    double zone_length_ft = 0.0;
    IntersectionConfig downstream;
};

struct ExperimentSpec {
    std::string name;
    Model model = Model::ProductionLine;
    std::uint64_t seed = 0;
    IntersectionConfig intersection = IntersectionConfig::four_lane_reference();
    std::map<std::string, PatternSource> arrivals;  // per lane id, every lane present
    SpeedSource speeds;
    FeatureSource features;
    int k = 3;
    std::vector<TrainingInstance> training = initial_training_table();
    BaselineParams baseline;
    std::optional<DensitySpec> density;
    std::optional<CorridorSpec> corridor;
    std::filesystem::path output_dir = "out";
    std::string output_basename;
};

namespace detail {

using nlohmann::json;

template <typename F>
auto field(const std::string& path, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, const std::string& path, T fallback) {
    if (!obj.contains(key)) return fallback;
    return field(path + "." + key, [&] { return obj.at(key).get<T>(); });
}

inline LaneGroup parse_group(const std::string& s) {
    if (s == "A") return LaneGroup::A;
    if (s == "B") return LaneGroup::B;
    throw ConfigError("lane group must be \"A\" or \"B\", got \"" + s + "\"");
}

inline IntersectionConfig parse_intersection(const json& j, const std::string& path) {
    const auto ref = IntersectionConfig::four_lane_reference();
    if (!j.is_object()) throw ConfigError(path + ": expected an object");

    const auto range = field(path + ".speed_range_mph", [&] {
        if (!j.contains("speed_range_mph")) return ref.speed_range;
        const auto& r = j.at("speed_range_mph");
        if (!r.is_array() || r.size() != 2) throw ConfigError("expected [s1, s2]");
        return SpeedRange{r.at(0).get<double>(), r.at(1).get<double>()};
    });

    const auto gates = field(path + ".gates", [&] {
        if (!j.contains("gates")) return ref.gates;
        const auto& g = j.at("gates");
        const std::string gp = path + ".gates";
        return GateSchedule{get_or<double>(g, "cycle_s", gp, 2.0), get_or<double>(g, "open_s", gp, 1.0),
                            get_or<double>(g, "offset_a_s", gp, 0.0),
                            get_or<double>(g, "offset_b_s", gp, 1.0)};
    });

    std::vector<Lane> lanes = ref.lanes;
    if (j.contains("lanes")) {
        lanes.clear();
        const auto& arr = j.at("lanes");
        if (!arr.is_array()) throw ConfigError(path + ".lanes: expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string lp = path + ".lanes[" + std::to_string(i) + "]";
            lanes.push_back(field(lp, [&] {
                return Lane{arr[i].at("id").get<std::string>(),
                            parse_group(arr[i].at("group").get<std::string>())};
            }));
        }
    }

    const double length = get_or<double>(j, "container_length_ft", path, ref.container_length_ft);
    const int containers = get_or<int>(j, "containers_per_lane", path, ref.containers_per_lane);
    const double run = get_or<double>(j, "run_duration_s", path, ref.run_duration_s);
    if (!(length > 0.0)) throw ConfigError(path + ".container_length_ft: must be positive");
    if (containers < 1) throw ConfigError(path + ".containers_per_lane: must be at least 1");
    if (!(run > 0.0)) throw ConfigError(path + ".run_duration_s: must be positive");
    return field(path + ".lanes",
                 [&] { return IntersectionConfig{range, length, containers, run, gates, lanes}; });
}

inline PatternSource parse_pattern(const json& j, const std::string& path) {
    PatternSource p;
    const std::string kind = field(path + ".kind", [&] { return j.at("kind").get<std::string>(); });
    if (kind == "matched") {
        p.kind = PatternSource::Kind::Matched;
    } else if (kind == "worst") {
        p.kind = PatternSource::Kind::Worst;
    } else if (kind == "random") {
        p.kind = PatternSource::Kind::Random;
        p.probability = get_or<double>(j, "p", path, 0.5);
        if (!(p.probability >= 0.0 && p.probability <= 1.0)) {
            throw ConfigError(path + ".p: probability must be in [0, 1]");
        }
        if (j.contains("seed")) p.seed = get_or<std::uint64_t>(j, "seed", path, 0);
    } else if (kind == "fixture") {
        p.kind = PatternSource::Kind::Fixture;
        p.fixture = field(path + ".name", [&] { return j.at("name").get<std::string>(); });
        if (p.fixture != "reference-random") {
            throw ConfigError(path + ".name: unknown fixture \"" + p.fixture + "\"");
        }
    } else if (kind == "explicit") {
        p.kind = PatternSource::Kind::Explicit;
        p.times = field(path + ".times", [&] { return j.at("times").get<std::vector<double>>(); });
        for (double t : p.times) {
            if (!(t >= 0.0)) throw ConfigError(path + ".times: arrival times must be non-negative");
        }
    } else {
        throw ConfigError(path + ".kind: unknown pattern kind \"" + kind + "\"");
    }
    const long len = get_or<long>(j, "length", path, 0);
    if (len < 0) throw ConfigError(path + ".length: must be non-negative");
    p.length = static_cast<std::size_t>(len);
    const std::string align = get_or<std::string>(j, "align", path, "gate");
    if (align != "gate" && align != "zero") {
        throw ConfigError(path + ".align: must be \"gate\" or \"zero\"");
    }
    p.align_to_gate = align == "gate";
    return p;
}

}  // namespace detail

/// Reads "day hour event class" rows (whitespace or comma separated). Blank
/// lines, '#' comments and a header row starting with "Day" are skipped.
inline std::vector<TrainingInstance> parse_training_table(std::istream& in) {
    std::vector<TrainingInstance> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (char& c : line) {
            if (c == ',' || c == '\t' || c == '\r') c = ' ';
        }
        const auto first = line.find_first_not_of(' ');
        if (first == std::string::npos || line[first] == '#') continue;
        if (line.compare(first, 3, "Day") == 0 || line.compare(first, 3, "day") == 0) continue;
        std::istringstream ss(line);
        int day = 0, hour = 0, event = 0;
        std::string cls, extra;
        if (!(ss >> day >> hour >> event >> cls) || (ss >> extra) || cls.size() != 1) {
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected \"day hour event +|-\"");
        }
        try {
            rows.push_back({FeatureVector{day, hour, event}, parse_turn_symbol(cls[0])});
        } catch (const DomainError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

inline std::vector<TrainingInstance> load_training_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open training table " + path.string());
    try {
        return parse_training_table(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// Reads "day hour event" query rows with the same lexical rules.
inline std::vector<FeatureVector> parse_queries(std::istream& in) {
    std::vector<FeatureVector> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (char& c : line) {
            if (c == ',' || c == '\t' || c == '\r') c = ' ';
        }
        const auto first = line.find_first_not_of(' ');
        if (first == std::string::npos || line[first] == '#') continue;
        if (line.compare(first, 3, "Day") == 0 || line.compare(first, 3, "day") == 0) continue;
        std::istringstream ss(line);
        int day = 0, hour = 0, event = 0;
        std::string extra;
        if (!(ss >> day >> hour >> event) || (ss >> extra)) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected \"day hour event\"");
        }
        try {
            out.emplace_back(day, hour, event);
        } catch (const DomainError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

/// Parses an experiment document. Relative table paths resolve against
/// `base_dir`.
inline ExperimentSpec parse_spec(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    using detail::field;
    using detail::get_or;
    if (!j.is_object()) throw ConfigError("spec: expected a JSON object");

    ExperimentSpec spec;
    spec.name = get_or<std::string>(j, "name", "spec", "experiment");
    spec.seed = get_or<std::uint64_t>(j, "seed", "spec", 0);

    const std::string model = get_or<std::string>(j, "model", "spec", "production_line");
    if (model == "production_line") {
        spec.model = Model::ProductionLine;
    } else if (model == "baseline") {
        spec.model = Model::Baseline;
    } else {
        throw ConfigError("model: must be \"production_line\" or \"baseline\"");
    }

    if (j.contains("intersection")) {
        spec.intersection = detail::parse_intersection(j.at("intersection"), "intersection");
    }

    PatternSource fallback;
    const nlohmann::json* lane_patterns = nullptr;
    if (j.contains("arrivals")) {
        const auto& a = j.at("arrivals");
        if (a.contains("default")) fallback = detail::parse_pattern(a.at("default"), "arrivals.default");
        if (a.contains("lanes")) lane_patterns = &a.at("lanes");
    }
    for (const auto& lane : spec.intersection.lanes) spec.arrivals[lane.id] = fallback;
    if (lane_patterns != nullptr) {
        for (const auto& [id, pj] : lane_patterns->items()) {
            const std::string path = "arrivals.lanes." + id;
            if (!spec.arrivals.contains(id)) throw ConfigError(path + ": unknown lane \"" + id + "\"");
            spec.arrivals[id] = detail::parse_pattern(pj, path);
        }
    }

    spec.speeds = {spec.intersection.speed_range.s1(), spec.intersection.speed_range.s2()};
    if (j.contains("vehicles")) {
        const auto& v = j.at("vehicles");
        if (v.contains("speed_mph")) {
            const auto& s = v.at("speed_mph");
            spec.speeds = field("vehicles.speed_mph", [&] {
                if (s.is_number()) return SpeedSource{s.get<double>(), s.get<double>()};
                return SpeedSource{s.at("min").get<double>(), s.at("max").get<double>()};
            });
            if (!(spec.speeds.min_mph >= 0.0) || spec.speeds.max_mph < spec.speeds.min_mph) {
                throw ConfigError("vehicles.speed_mph: need 0 <= min <= max");
            }
        }
        if (v.contains("features")) {
            const auto& f = v.at("features");
            if (f.is_string()) {
                if (f.get<std::string>() != "reference-instances") {
                    throw ConfigError("vehicles.features: unknown source \"" + f.get<std::string>() + "\"");
                }
                spec.features = {FeatureSource::Kind::ReferenceInstances, 0};
            } else {
                spec.features = {FeatureSource::Kind::Random,
                                 field("vehicles.features.random_seed",
                                       [&] { return f.at("random_seed").get<std::uint64_t>(); })};
            }
        }
    }

    if (j.contains("predictor")) {
        const auto& p = j.at("predictor");
        spec.k = get_or<int>(p, "k", "predictor", 3);
        const std::string table = get_or<std::string>(p, "table", "predictor", "initial");
        if (table != "initial") {
            std::filesystem::path tp(table);
            if (tp.is_relative()) tp = base_dir / tp;
            spec.training = field("predictor.table", [&] { return load_training_table(tp); });
        }
    }
    field("predictor.k", [&] { return PredictorState(spec.training, spec.k); });
    if (static_cast<std::size_t>(spec.k) > spec.training.size()) {
        throw ConfigError("predictor.k: exceeds the training table size");
    }

    spec.baseline = BaselineParams::matching_clearance(spec.intersection.gates);
    if (j.contains("baseline")) {
        const auto& b = j.at("baseline");
        const std::string clearance = get_or<std::string>(b, "clearance", "baseline", "match-gates");
        if (clearance == "explicit") {
            spec.baseline = BaselineParams{};
        } else if (clearance != "match-gates") {
            throw ConfigError("baseline.clearance: must be \"match-gates\" or \"explicit\"");
        }
        auto& bp = spec.baseline;
        bp.decision.epsilon_s = get_or<double>(b, "epsilon_s", "baseline", bp.decision.epsilon_s);
        bp.decision.speed_step_mph = get_or<double>(b, "speed_step_mph", "baseline", bp.decision.speed_step_mph);
        bp.request_distance_ft = get_or<double>(b, "request_distance_ft", "baseline", bp.request_distance_ft);
        bp.lane_headway_s = get_or<double>(b, "lane_headway_s", "baseline", bp.lane_headway_s);
        if (!(bp.decision.epsilon_s >= 0.0)) throw ConfigError("baseline.epsilon_s: must be non-negative");
        if (!(bp.decision.speed_step_mph > 0.0)) throw ConfigError("baseline.speed_step_mph: must be positive");
        if (!(bp.request_distance_ft >= 0.0)) throw ConfigError("baseline.request_distance_ft: must be non-negative");
        if (!(bp.lane_headway_s >= 0.0)) throw ConfigError("baseline.lane_headway_s: must be non-negative");
    }

    if (j.contains("density")) {
        const auto& d = j.at("density");
        DensitySpec ds;
        ds.vehicle_counts = get_or<std::vector<long>>(d, "vehicle_counts", "density", ds.vehicle_counts);
        auto& sc = ds.scenario;
        sc.capacity_per_side = get_or<long>(d, "capacity_per_side", "density", sc.capacity_per_side);
        sc.container_length_ft = get_or<double>(d, "container_length_ft", "density", sc.container_length_ft);
        sc.speed_mph = get_or<double>(d, "speed_mph", "density", sc.speed_mph);
        sc.speed_margin_mph = get_or<double>(d, "speed_margin_mph", "density", sc.speed_margin_mph);
        ds.runs = get_or<int>(d, "runs", "density", ds.runs);
        if (ds.runs < 1) throw ConfigError("density.runs: must be at least 1");
        if (sc.capacity_per_side < 1) throw ConfigError("density.capacity_per_side: must be at least 1");
        if (!(sc.container_length_ft > 0.0)) throw ConfigError("density.container_length_ft: must be positive");
        if (!(sc.speed_mph > 0.0)) throw ConfigError("density.speed_mph: must be positive");
        if (!(sc.speed_margin_mph >= 0.0) || sc.speed_margin_mph >= sc.speed_mph) {
            throw ConfigError("density.speed_margin_mph: must be in [0, speed_mph)");
        }
        for (long n : ds.vehicle_counts) {
            if (n < 0 || n > 2 * sc.capacity_per_side) {
                throw ConfigError("density.vehicle_counts: each count must be in [0, 2 * capacity_per_side]");
            }
        }
        spec.density = ds;
    }

    if (j.contains("corridor")) {
        const auto& c = j.at("corridor");
        const double zone = get_or<double>(c, "zone_length_ft", "corridor", 0.0);
        if (!(zone >= 0.0)) throw ConfigError("corridor.zone_length_ft: must be non-negative");
        if (!c.contains("downstream")) throw ConfigError("corridor.downstream: missing");
        auto down = detail::parse_intersection(c.at("downstream"), "corridor.downstream");
        for (const auto& lane : spec.intersection.lanes) {
            field("corridor.downstream.lanes", [&] { return down.lane(lane.id); });
        }
        const double from = average_speed(spec.intersection.speed_range).in_mph();
        const double to = average_speed(down.speed_range).in_mph();
        if (zone == 0.0 && std::abs(from - to) > 1e-6) {
            throw ConfigError("corridor.zone_length_ft: a zero-length zone cannot change speed");
        }
        spec.corridor = CorridorSpec{zone, std::move(down)};
    }

    if (j.contains("output")) {
        const auto& o = j.at("output");
        spec.output_dir = get_or<std::string>(o, "dir", "output", "out");
        spec.output_basename = get_or<std::string>(o, "basename", "output", "");
    }
    if (spec.output_basename.empty()) spec.output_basename = spec.name;
    return spec;
}

/// Loads and validates a spec file. PRODLINE_OUTPUT_DIR, when set, replaces
/// the output directory.
inline ExperimentSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open spec " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": parse error: " + e.what());
    }
    ExperimentSpec spec = parse_spec(j, path.parent_path());
    if (const char* env = std::getenv("PRODLINE_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        spec.output_dir = env;
    }
    return spec;
}

/// Arrival times of one lane before any gate alignment.
inline std::vector<double> pattern_arrivals(const PatternSource& src, std::size_t default_length,
                                            std::uint64_t derived_seed) {
    const std::size_t len = src.length == 0 ? default_length : src.length;
    switch (src.kind) {
        case PatternSource::Kind::Matched: return bits_to_arrivals(matched_pattern(len));
        case PatternSource::Kind::Worst: return bits_to_arrivals(worst_pattern(len));
        case PatternSource::Kind::Random:
            return bits_to_arrivals(random_pattern(len, src.probability, src.seed.value_or(derived_seed)));
        case PatternSource::Kind::Fixture: return reference_random_arrivals();
        case PatternSource::Kind::Explicit: {
            auto t = src.times;
            std::sort(t.begin(), t.end());
            return t;
        }
    }
    return {};
}

/// Builds the vehicle requests of a spec. Vehicle ids are
/// 1000 * (lane position + 1) + arrival rank within the lane.
inline std::vector<VehicleRequest> build_requests(const ExperimentSpec& spec) {
    const auto& cfg = spec.intersection;
    const auto spots = static_cast<std::size_t>(std::floor(cfg.run_duration_s + 1e-9));
    std::vector<VehicleRequest> out;

    for (std::size_t li = 0; li < cfg.lanes.size(); ++li) {
        const auto& lane = cfg.lanes[li];
        const auto& src = spec.arrivals.at(lane.id);
        const std::uint64_t pattern_seed = Rng::derive(spec.seed, 500 + li).next_u64();
        auto times = pattern_arrivals(src, spots, pattern_seed);
        const double shift = src.align_to_gate ? cfg.gates.offset(lane.group) : 0.0;

        Rng speed_rng = Rng::derive(spec.seed, 1000 + li);
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (times[i] + shift > cfg.run_duration_s) {
                throw ConfigError("arrivals.lanes." + lane.id + ": arrival at " +
                                  std::to_string(times[i] + shift) + " s is past run_duration_s");
            }
            VehicleRequest r;
            r.vehicle_id = static_cast<int>(1000 * (li + 1) + i);
            r.lane_id = lane.id;
            r.arrival_time = times[i] + shift;
            r.arrival_speed = Speed::mph(spec.speeds.min_mph == spec.speeds.max_mph
                                             ? spec.speeds.min_mph
                                             : speed_rng.uniform(spec.speeds.min_mph, spec.speeds.max_mph));
            out.push_back(std::move(r));
        }
    }

    if (spec.features.kind == FeatureSource::Kind::Random) {
        for (auto& r : out) {
            Rng rng = Rng::derive(spec.features.seed, static_cast<std::uint64_t>(r.vehicle_id));
            r.features = FeatureVector{static_cast<int>(1 + rng.below(5)), static_cast<int>(rng.below(24)),
                                       static_cast<int>(rng.below(2))};
        }
    } else {
        // Each group replays its reference instance table, one row per
        // distinct arrival time.
        for (LaneGroup g : {LaneGroup::A, LaneGroup::B}) {
            const auto table = g == LaneGroup::A ? reference_instances_group_a() : reference_instances_group_b();
            std::vector<VehicleRequest*> members;
            for (auto& r : out) {
                if (cfg.lane(r.lane_id).group == g) members.push_back(&r);
            }
            std::stable_sort(members.begin(), members.end(), [&](const auto* a, const auto* b) {
                if (a->arrival_time != b->arrival_time) return a->arrival_time < b->arrival_time;
                return cfg.lane_index(a->lane_id) < cfg.lane_index(b->lane_id);
            });
            // vehicles of one group arriving together share a row
            std::size_t row = 0;
            for (std::size_t i = 0; i < members.size(); ++i) {
                if (i > 0 && members[i]->arrival_time != members[i - 1]->arrival_time) ++row;
                members[i]->features = table[row % table.size()];
            }
        }
    }
    return out;
}

}  // namespace prodline
