#pragma once

#include <cstdint>

#include <json.hpp>

#include "loclearn/distributions.hpp"
#include "loclearn/learner.hpp"

namespace loclearn {

// Multipliers on the rate-formula budgets; every default is 1 and every result
// records the values actually used.
struct Constants {
    Real pool_size = 1.0;
    Real sample_cap = 1.0;
    Real fresh_draws = 1.0;

    nlohmann::json to_json() const;
    static Constants from_json(const nlohmann::json& j);
};

struct ErrorEstimate {
    Real value = 0.0;
    Real epsilon = 0.0;
    std::size_t n_fresh_labels = 0;
    std::size_t n_pool_labels = 0;
    std::uint64_t trial_seed = 0;

    nlohmann::json to_json() const;
};

// Per-index label streams derived from the session seed; rebuildable after a
// checkpoint restore.
LabelSource synthetic_label_source(const SyntheticDistribution& dist, std::uint64_t seed);

// Builds the preprocess output for a synthetic distribution: partition from
// the "partition" child stream, pool from "pool", per-index label streams
// from "labels".
QuerySession make_synthetic_session(Real lipschitz, Real epsilon, std::size_t dims,
                                    const SyntheticDistribution& dist, std::uint64_t seed,
                                    const Constants& constants = {});

std::size_t fresh_draw_count(Real epsilon, const Constants& constants = {});

// Runs preprocess, draws ceil(1/eps^2) labeled pairs from the "eval" stream
// and averages |query(x) - y|.
ErrorEstimate estimate_error(Real lipschitz, Real epsilon, std::size_t dims,
                             const SyntheticDistribution& dist, std::uint64_t seed,
                             const Constants& constants = {});

// All-labels baseline: one global ERM over the dataset, mean absolute
// training error.
Real oracle_error(Real lipschitz, std::size_t dims, const std::vector<Point>& xs,
                  const std::vector<Real>& ys);

}  // namespace loclearn
