#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "loclearn/common.hpp"
#include "loclearn/lipschitz.hpp"
#include "loclearn/rng.hpp"

namespace loclearn {

// Synthetic data source: a marginal over [0,1]^d plus a label rule.
// BernoulliNoise emits, with probability noise_rate, a 0/1 coin with mean
// base(x); otherwise the base value itself. Threshold gives the deterministic
// {0,1} labels used by the Nadaraya-Watson experiments.
struct SyntheticDistribution {
    enum class Marginal { kUniform, kMixture, kPointSet };
    enum class Target { kLipschitzGt, kConstant, kBernoulliNoise, kThreshold, kPointLabels };

    Marginal marginal = Marginal::kUniform;
    std::size_t dims = 1;
    std::vector<Box> boxes;
    std::vector<Real> weights;
    std::vector<Point> point_set;
    std::vector<Real> point_labels;  // kPointLabels: label of each point_set row

    Target target = Target::kConstant;
    std::shared_ptr<const AnchoredLipschitzFn> base;
    Real constant = 0.5;
    Real noise_rate = 1.0;
    Real threshold_level = 0.5;

    Point sample_x(Rng& rng) const;
    Real base_value(std::span<const Real> x) const;
    Real label(std::span<const Real> x, Rng& rng) const;
    bool binary_labels() const {
        return target == Target::kThreshold ||
               (target == Target::kBernoulliNoise && noise_rate >= 1.0) ||
               target == Target::kPointLabels;
    }

    void validate() const;

    nlohmann::json to_json() const;
    static SyntheticDistribution from_json(const nlohmann::json& j);

    static SyntheticDistribution uniform_constant(std::size_t dims, Real c);
    static SyntheticDistribution uniform_gt(std::shared_ptr<const AnchoredLipschitzFn> gt);
    static SyntheticDistribution uniform_noise(std::size_t dims, Real base, Real rate);
};

std::pair<Point, Real> sample_pair(const SyntheticDistribution& dist, Rng& rng);

// Random member of the L-Lipschitz class: anchors drawn uniformly, values
// chosen greedily inside the feasible band so the result is always consistent.
AnchoredLipschitzFn random_lipschitz_fn(std::size_t dims, Real lipschitz, std::size_t n_anchors,
                                        Rng& rng);

}  // namespace loclearn
