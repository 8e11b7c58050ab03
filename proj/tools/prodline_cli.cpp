// prodline: command-line front end for the production-line intersection
// simulator.
//
//   prodline simulate <spec>               run the spec, write CSV + summary
//   prodline baseline <spec>               reservation-baseline density sweep
//   prodline compare <spec_a> [<spec_b>]   side-by-side summaries
//   prodline predict <table> --k N         replay KNN turn predictions
//   prodline patterns <kind> --len --p --seed
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime/IO error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prodline/experiment.hpp"
#include "prodline/patterns.hpp"
#include "prodline/report.hpp"
#include "prodline/turn_predictor.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

using namespace prodline;

int cmd_simulate(const std::string& spec_path, bool quiet) {
    const auto spec = load_spec(spec_path);
    const auto result = run_experiment(spec);
    const auto written = write_outputs(spec, result);
    if (!quiet) {
        std::cout << render_summary(result.summary);
        if (result.downstream_summary) std::cout << render_summary(*result.downstream_summary);
        for (const auto& p : written) std::cerr << "wrote " << p.string() << '\n';
    }
    return kExitOk;
}

int cmd_baseline(const std::string& spec_path, const std::string& series_path) {
    const auto spec = load_spec(spec_path);
    const auto points = run_density(spec);
    const std::string table = render_density(points);
    std::cout << table;
    const auto path = series_path.empty()
                          ? spec.output_dir / (spec.output_basename + ".density.csv")
                          : std::filesystem::path(series_path);
    write_text(path, table);
    std::cerr << "wrote " << path.string() << '\n';
    return kExitOk;
}

int cmd_compare(const std::string& a_path, const std::string& b_path) {
    const auto a = load_spec(a_path);
    const CompareTable table = b_path.empty() ? compare_models(a) : compare(a, load_spec(b_path));
    std::cout << render_compare(table);
    return kExitOk;
}

int cmd_predict(const std::string& table_path, int k, const std::vector<std::string>& inline_queries,
                const std::string& queries_path) {
    const PredictorState state(load_training_table(table_path), k);
    if (static_cast<std::size_t>(k) > state.size()) {
        throw ConfigError("--k exceeds the training table size");
    }

    std::vector<FeatureVector> queries;
    for (std::size_t i = 0; i < inline_queries.size(); ++i) {
        std::istringstream in(inline_queries[i]);
        try {
            const auto parsed = parse_queries(in);
            queries.insert(queries.end(), parsed.begin(), parsed.end());
        } catch (const ConfigError& e) {
            throw ConfigError("--query #" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    if (!queries_path.empty()) {
        std::ifstream in(queries_path);
        if (!in) throw ConfigError("cannot open queries file " + queries_path);
        try {
            const auto parsed = parse_queries(in);
            queries.insert(queries.end(), parsed.begin(), parsed.end());
        } catch (const ConfigError& e) {
            throw ConfigError(queries_path + ": " + e.what());
        }
    }

    for (TurnClass c : predict_sequence(state, queries)) std::cout << turn_symbol(c) << '\n';
    return kExitOk;
}

int cmd_patterns(const std::string& kind, std::size_t length, double p, std::uint64_t seed) {
    RequestPattern pattern;
    if (kind == "matched") {
        pattern = matched_pattern(length);
    } else if (kind == "worst") {
        pattern = worst_pattern(length);
    } else if (kind == "random") {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("--p must be in [0, 1]");
        pattern = random_pattern(length, p, seed);
    } else if (kind == "reference-random") {
        pattern.bits.assign(60, 0);
        for (double t : reference_random_arrivals()) pattern.bits[static_cast<std::size_t>(t)] = 1;
    } else {
        throw ConfigError("unknown pattern kind \"" + kind + "\" (matched|worst|random|reference-random)");
    }

    std::cout << "bits:";
    for (auto b : pattern.bits) std::cout << ' ' << static_cast<int>(b);
    std::cout << "\narrivals:";
    for (double t : bits_to_arrivals(pattern)) std::cout << ' ' << static_cast<long>(t);
    std::cout << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Production-line intersection scheduling simulator"};
    app.require_subcommand(1);

    std::string spec_a, spec_b, series, table, queries_file, kind;
    bool quiet = false;
    int k = 3;
    std::vector<std::string> queries;
    std::size_t length = 60;
    double probability = 0.5;
    std::uint64_t seed = 0;

    auto* simulate = app.add_subcommand("simulate", "Run an experiment spec and write CSV + summary");
    simulate->add_option("spec", spec_a, "Experiment spec (JSON)")->required();
    simulate->add_flag("-q,--quiet", quiet, "Write files only");

    auto* baseline = app.add_subcommand("baseline", "Reservation-baseline density sweep");
    baseline->add_option("spec", spec_a, "Experiment spec with a density block")->required();
    baseline->add_option("--series", series, "Where to write the plot series CSV");

    auto* cmp = app.add_subcommand("compare", "Compare two specs, or both models on one spec");
    cmp->add_option("spec_a", spec_a, "First spec")->required();
    cmp->add_option("spec_b", spec_b, "Second spec (omit to compare models on spec_a)");

    auto* predict = app.add_subcommand("predict", "Replay KNN right-turn predictions");
    predict->add_option("table", table, "Training table: day hour event +|-")->required();
    predict->add_option("--k", k, "Neighbour count (odd)")->default_val(3);
    predict->add_option("-q,--query", queries, "Query \"day,hour,event\" (repeatable)");
    predict->add_option("--queries", queries_file, "File of \"day hour event\" rows");

    auto* patterns = app.add_subcommand("patterns", "Print an arrival pattern");
    patterns->add_option("kind", kind, "matched | worst | random | reference-random")->required();
    patterns->add_option("--len", length, "Spot count")->default_val(60);
    patterns->add_option("--p", probability, "Request probability (random)")->default_val(0.5);
    patterns->add_option("--seed", seed, "Generator seed (random)")->default_val(0);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*simulate) return cmd_simulate(spec_a, quiet);
        if (*baseline) return cmd_baseline(spec_a, series);
        if (*cmp) return cmd_compare(spec_a, spec_b);
        if (*predict) return cmd_predict(table, k, queries, queries_file);
        if (*patterns) return cmd_patterns(kind, length, probability, seed);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}
