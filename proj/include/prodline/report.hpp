#pragma once

// Runs experiments described by an ExperimentSpec and renders the results:
// per-vehicle CSV rows, key/value summaries, model comparisons and the
// density series.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "prodline/baseline_reservation.hpp"
#include "prodline/experiment.hpp"
#include "prodline/production_line.hpp"

namespace prodline {

inline constexpr const char* kCsvHeader = "vehicle_id,lane,arrival_s,slot_s,wait_s,right_turn,exit_s";

/// Fixed six-decimal rendering, independent of the C locale.
inline std::string fixed6(double v) {
    if (v == 0.0) v = 0.0;  // no "-0.000000"
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
    if (res.ec != std::errc{}) return "nan";
    std::string s(buf, res.ptr);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

struct ReportRow {
    int vehicle_id = 0;
    std::string lane;
    double arrival_s = 0.0;
    double slot_s = 0.0;
    double wait_s = 0.0;
    TurnClass right_turn = TurnClass::Straight;
    double exit_s = 0.0;
};

struct Summary {
    std::string name;
    Model model = Model::ProductionLine;
    long vehicles = 0;
    long rejected = 0;
    double avg_wait_s = 0.0;
    double max_wait_s = 0.0;
    std::optional<double> extra_space_pct;  // production line only
    double collisions_per_vehicle = 0.0;
    long occupancy_conflicts = 0;
    long stops = 0;
};

struct ExperimentResult {
    std::vector<ReportRow> rows;
    Summary summary;
    std::vector<ReportRow> downstream_rows;
    std::optional<Summary> downstream_summary;
};

inline std::vector<ReportRow> rows_from(const ScheduleResult& result) {
    std::vector<ReportRow> rows;
    rows.reserve(result.assignments.size());
    for (const auto& a : result.assignments) {
        rows.push_back({a.vehicle_id, a.lane_id, a.arrival_time, a.slot_time, a.wait, a.right_turn, a.exit_time});
    }
    return rows;
}

inline Summary summarize(const std::string& name, const ScheduleResult& result,
                         const IntersectionConfig& config) {
    Summary s;
    s.name = name;
    s.model = Model::ProductionLine;
    s.vehicles = static_cast<long>(result.assignments.size());
    s.rejected = static_cast<long>(result.rejected.size());
    s.avg_wait_s = result.avg_wait;
    s.max_wait_s = result.max_wait;
    s.extra_space_pct = result.extra_space_pct;
    s.occupancy_conflicts = static_cast<long>(occupancy_check(result, config).size());
    s.collisions_per_vehicle =
        s.vehicles > 0 ? static_cast<double>(s.occupancy_conflicts) / static_cast<double>(s.vehicles) : 0.0;
    return s;
}

/// Reservation-baseline rows. Turn classes come from one predictor per lane
/// group fed in grant order, mirroring the production-line run.
inline std::vector<ReportRow> rows_from(const BaselineOutcome& outcome, const IntersectionConfig& config,
                                        const PredictorState& predictor,
                                        std::span<const VehicleRequest> requests) {
    std::map<int, FeatureVector> features;
    for (const auto& r : requests) features.emplace(r.vehicle_id, r.features);

    std::vector<const BaselineGrant*> order;
    for (const auto& g : outcome.grants) order.push_back(&g);
    std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        if (a->granted_arrival != b->granted_arrival) return a->granted_arrival < b->granted_arrival;
        return a->lane < b->lane;
    });

    const double traverse = traversal_time(config);
    std::map<LaneGroup, PredictorState> predictors;
    std::vector<ReportRow> rows;
    for (const auto* g : order) {
        const LaneGroup group = config.lanes[g->lane].group;
        auto [it, fresh] = predictors.try_emplace(group, predictor);
        const FeatureVector& f = features.at(g->vehicle_id);
        const TurnClass c = it->second.classify(f);
        it->second.observe({f, c});
        rows.push_back({g->vehicle_id, config.lanes[g->lane].id, g->nominal_arrival, g->granted_arrival, g->wait, c,
                        g->granted_arrival + traverse});
    }
    return rows;
}

inline Summary summarize(const std::string& name, const BaselineOutcome& outcome, long rejected) {
    Summary s;
    s.name = name;
    s.model = Model::Baseline;
    s.vehicles = outcome.metrics.vehicles;
    s.rejected = rejected;
    s.avg_wait_s = outcome.metrics.avg_wait;
    s.max_wait_s = outcome.metrics.max_wait;
    s.collisions_per_vehicle = outcome.metrics.expected_collisions_per_vehicle;
    s.stops = outcome.metrics.stops;
    return s;
}

/// Executes the arrival-driven run a spec describes with the given model.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, Model model) {
    const auto requests = build_requests(spec);
    const PredictorState predictor(spec.training, spec.k);
    const auto& cfg = spec.intersection;

    ExperimentResult out;
    if (model == Model::Baseline) {
        const auto outcome = baseline_on_requests(cfg, requests, spec.baseline);
        const long rejected = static_cast<long>(requests.size()) - outcome.metrics.vehicles;
        out.rows = rows_from(outcome, cfg, predictor, requests);
        out.summary = summarize(spec.name, outcome, rejected);
        return out;
    }

    const auto result = simulate_run(cfg, requests, predictor);
    out.rows = rows_from(result);
    out.summary = summarize(spec.name, result, cfg);

    if (spec.corridor) {
        const auto& down = spec.corridor->downstream;
        const auto link = corridor_link_between(cfg, down, spec.corridor->zone_length_ft);
        std::map<int, FeatureVector> features;
        for (const auto& r : requests) features.emplace(r.vehicle_id, r.features);
        std::vector<VehicleRequest> next;
        for (const auto& a : result.assignments) {
            next.push_back(corridor_handoff(link, a, down, a.lane_id, features.at(a.vehicle_id)));
        }
        const auto downstream = simulate_run(down, next, predictor);
        out.downstream_rows = rows_from(downstream);
        out.downstream_summary = summarize(spec.name + ".downstream", downstream, down);
    }
    return out;
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec) { return run_experiment(spec, spec.model); }

inline std::string render_csv(const std::vector<ReportRow>& rows) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.vehicle_id);
        out += ',';
        out += r.lane;
        out += ',';
        out += fixed6(r.arrival_s);
        out += ',';
        out += fixed6(r.slot_s);
        out += ',';
        out += fixed6(r.wait_s);
        out += ',';
        out += turn_symbol(r.right_turn);
        out += ',';
        out += fixed6(r.exit_s);
        out += '\n';
    }
    return out;
}

inline std::string render_summary(const Summary& s) {
    std::ostringstream out;
    out << "name," << s.name << '\n'
        << "model," << model_name(s.model) << '\n'
        << "vehicles," << s.vehicles << '\n'
        << "rejected," << s.rejected << '\n'
        << "avg_wait_s," << fixed6(s.avg_wait_s) << '\n'
        << "max_wait_s," << fixed6(s.max_wait_s) << '\n'
        << "extra_space_pct," << (s.extra_space_pct ? fixed6(*s.extra_space_pct) : "na") << '\n'
        << "collisions_per_vehicle," << fixed6(s.collisions_per_vehicle) << '\n'
        << "occupancy_conflicts," << s.occupancy_conflicts << '\n'
        << "stops," << s.stops << '\n';
    return out.str();
}

struct CompareTable {
    std::vector<Summary> columns;
};

/// Side-by-side summary of two experiments; both must cover the same run
/// window.
inline CompareTable compare(const ExperimentSpec& a, const ExperimentSpec& b) {
    if (std::abs(a.intersection.run_duration_s - b.intersection.run_duration_s) > kTimeTolerance) {
        throw ConfigError("compare: run_duration_s differs between \"" + a.name + "\" and \"" + b.name + "\"");
    }
    return {{run_experiment(a).summary, run_experiment(b).summary}};
}

/// Production line against the reservation baseline on one spec's arrivals.
inline CompareTable compare_models(const ExperimentSpec& spec) {
    return {{run_experiment(spec, Model::ProductionLine).summary, run_experiment(spec, Model::Baseline).summary}};
}

inline std::string render_compare(const CompareTable& t) {
    std::ostringstream out;
    out << "metric";
    for (const auto& c : t.columns) out << ',' << c.name;
    out << '\n';
    const auto row = [&](const char* key, auto&& get) {
        out << key;
        for (const auto& c : t.columns) out << ',' << get(c);
        out << '\n';
    };
    row("model", [](const Summary& s) { return std::string(model_name(s.model)); });
    row("vehicles", [](const Summary& s) { return std::to_string(s.vehicles); });
    row("rejected", [](const Summary& s) { return std::to_string(s.rejected); });
    row("avg_wait_s", [](const Summary& s) { return fixed6(s.avg_wait_s); });
    row("max_wait_s", [](const Summary& s) { return fixed6(s.max_wait_s); });
    row("extra_space_pct",
        [](const Summary& s) { return s.extra_space_pct ? fixed6(*s.extra_space_pct) : std::string("na"); });
    row("collisions_per_vehicle", [](const Summary& s) { return fixed6(s.collisions_per_vehicle); });
    return out.str();
}

struct DensityPoint {
    long vehicle_count = 0;
    BaselineMetrics metrics;
};

inline std::vector<DensityPoint> run_density(const ExperimentSpec& spec) {
    if (!spec.density) throw ConfigError("density: block required for the baseline density experiment");
    std::vector<DensityPoint> out;
    for (long n : spec.density->vehicle_counts) {
        out.push_back({n, simulate_baseline(n, spec.density->scenario, spec.density->runs, spec.seed, spec.baseline)});
    }
    return out;
}

inline std::string render_density(const std::vector<DensityPoint>& points) {
    std::string out = "vehicles,expected_collisions_per_vehicle,avg_wait_s,max_wait_s,request_conflicts_per_vehicle\n";
    for (const auto& p : points) {
        out += std::to_string(p.vehicle_count) + ',' + fixed6(p.metrics.expected_collisions_per_vehicle) + ',' +
               fixed6(p.metrics.avg_wait) + ',' + fixed6(p.metrics.max_wait) + ',' +
               fixed6(p.metrics.request_conflicts_per_vehicle) + '\n';
    }
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

/// Writes <dir>/<basename>.csv and .summary.csv (plus the downstream pair
/// for corridor runs); returns the paths written.
inline std::vector<std::filesystem::path> write_outputs(const ExperimentSpec& spec, const ExperimentResult& r) {
    const auto base = spec.output_dir / spec.output_basename;
    std::vector<std::filesystem::path> written{base.string() + ".csv", base.string() + ".summary.csv"};
    write_text(written[0], render_csv(r.rows));
    write_text(written[1], render_summary(r.summary));
    if (r.downstream_summary) {
        written.emplace_back(base.string() + ".downstream.csv");
        written.emplace_back(base.string() + ".downstream.summary.csv");
        write_text(written[2], render_csv(r.downstream_rows));
        write_text(written[3], render_summary(*r.downstream_summary));
    }
    return written;
}

}  // namespace prodline
