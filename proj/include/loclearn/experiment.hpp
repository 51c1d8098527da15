#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "loclearn/estimation.hpp"
#include "loclearn/nw.hpp"

namespace loclearn {

struct ExperimentConfig {
    enum class Mode { kLocalQuery, kErrorEst, kNwEst, kPropertySuite };

    Mode mode = Mode::kErrorEst;
    Real lipschitz = 10.0;
    Real epsilon = 0.5;
    std::size_t dims = 1;
    std::vector<std::uint64_t> seeds{1};
    Constants constants;
    std::optional<SyntheticDistribution> distribution;
    std::string data_csv;
    Real delta = 0.1;
    KdeMode kde_mode;
    std::size_t eval_points = 1000;        // LOCAL_QUERY comparison draws
    std::size_t oracle_points = 10000;     // ERROR_EST baseline draw size
    std::size_t dataset_size = 200;        // NW synthetic dataset size
    bool nw_oracle = false;                // compute the exact-net baseline per seed
    std::size_t nw_oracle_points = 10000;
    std::string out_path;

    void validate() const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

struct ResultRow {
    std::uint64_t seed = 0;
    Real estimate = 0.0;
    Real baseline = 0.0;
    Real gap = 0.0;
    std::size_t n_fresh_labels = 0;
    std::size_t n_pool_labels = 0;
};

struct ResultTable {
    ExperimentConfig::Mode mode = ExperimentConfig::Mode::kErrorEst;
    std::vector<ResultRow> rows;
    Real success_threshold = 0.0;
    std::size_t successes = 0;
    bool all_passed = true;                // property-suite verdict
    std::vector<nlohmann::json> extra;     // per-seed JSON payloads (NW estimates)

    // Deterministic for a fixed (config, seed list); wall times go to the log,
    // not the table, so reruns stay byte-identical.
    std::string to_csv(const Constants& constants) const;
};

ResultTable run_experiment(const ExperimentConfig& config);

struct PropertyCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Invariant sweep behind the `properties` subcommand and PROPERTY_SUITE mode.
std::vector<PropertyCheck> run_property_suite(std::uint64_t seed);

}  // namespace loclearn
