#include "loclearn/estimation.hpp"

#include <cmath>

#include <json.hpp>

namespace loclearn {

nlohmann::json Constants::to_json() const {
    return {{"pool_size", pool_size}, {"sample_cap", sample_cap}, {"fresh_draws", fresh_draws}};
}

Constants Constants::from_json(const nlohmann::json& j) {
    Constants c;
    c.pool_size = j.value("pool_size", 1.0);
    c.sample_cap = j.value("sample_cap", 1.0);
    c.fresh_draws = j.value("fresh_draws", 1.0);
    if (c.pool_size <= 0.0 || c.sample_cap <= 0.0 || c.fresh_draws <= 0.0)
        throw ConfigError("constants multipliers must be positive");
    return c;
}

nlohmann::json ErrorEstimate::to_json() const {
    return {{"estimate", value},
            {"epsilon", epsilon},
            {"n_fresh_labels", n_fresh_labels},
            {"n_pool_labels", n_pool_labels},
            {"seed", trial_seed}};
}

LabelSource synthetic_label_source(const SyntheticDistribution& dist, std::uint64_t seed) {
    const Rng labels_root = Rng(seed).child("labels");
    return [dist, labels_root](std::size_t index, std::span<const Real> x) {
        Rng r = labels_root.child_index(index);
        return dist.label(x, r);
    };
}

QuerySession make_synthetic_session(Real lipschitz, Real epsilon, std::size_t dims,
                                    const SyntheticDistribution& dist, std::uint64_t seed,
                                    const Constants& constants) {
    dist.validate();
    if (dist.dims != dims) throw DimensionMismatch("distribution dims != session dims");
    const Rng root(seed);
    Partition partition =
        Partition::preprocess(lipschitz, epsilon, dims, root.child("partition").next_u64());

    const std::size_t pool_n = default_pool_size(lipschitz, epsilon, dims, constants.pool_size);
    UnlabeledPool pool;
    pool.points = SoaPoints(dims, pool_n);
    Rng pool_rng = root.child("pool");
    for (std::size_t i = 0; i < pool_n; ++i) {
        const Point x = dist.sample_x(pool_rng);
        for (std::size_t k = 0; k < dims; ++k) pool.points.coord(k, i) = x[k];
    }
    pool.provenance_seed = seed;
    pool.sampler_id = "synthetic";

    const std::size_t cap = default_sample_cap(epsilon, dims, constants.sample_cap);
    return new_session(std::move(partition), std::move(pool),
                       synthetic_label_source(dist, seed), cap);
}

std::size_t fresh_draw_count(Real epsilon, const Constants& constants) {
    if (!(epsilon > 0.0) || epsilon > 1.0) throw InvalidEpsilon("epsilon must lie in (0,1]");
    return static_cast<std::size_t>(
        std::max(1.0, std::ceil(constants.fresh_draws / (epsilon * epsilon))));
}

ErrorEstimate estimate_error(Real lipschitz, Real epsilon, std::size_t dims,
                             const SyntheticDistribution& dist, std::uint64_t seed,
                             const Constants& constants) {
    QuerySession session = make_synthetic_session(lipschitz, epsilon, dims, dist, seed, constants);
    const std::size_t n = fresh_draw_count(epsilon, constants);
    Rng eval_rng = Rng(seed).child("eval");
    Real total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [x, y] = sample_pair(dist, eval_rng);
        total += std::abs(session.query(x) - y);
    }
    ErrorEstimate out;
    out.value = total / static_cast<Real>(n);
    out.epsilon = epsilon;
    out.n_fresh_labels = n;
    out.n_pool_labels = session.budget_report().distinct_labels;
    out.trial_seed = seed;
    return out;
}

Real oracle_error(Real lipschitz, std::size_t dims, const std::vector<Point>& xs,
                  const std::vector<Real>& ys) {
    if (xs.empty()) throw EmptyInput("oracle_error needs a nonempty dataset");
    ErmProblem problem{xs, ys, lipschitz, Box::unit(dims)};
    const AnchoredLipschitzFn fit = erm_fit(problem);
    return erm_objective(problem, fit) / static_cast<Real>(xs.size());
}

}  // namespace loclearn
