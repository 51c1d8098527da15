#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "loclearn/common.hpp"
#include "loclearn/distributions.hpp"
#include "loclearn/rng.hpp"

namespace loclearn {

// Diagonal linear transform A with eigenvalues in [1,2] (wider ranges are
// accepted but the stability guarantees are stated for [1,2] only; the
// importance-ratio bound becomes (hi/lo)^4).
struct DiagonalTransform {
    std::vector<Real> eigenvalues;

    static DiagonalTransform identity(std::size_t dims) {
        return {std::vector<Real>(dims, 1.0)};
    }
};

using NwLabelSource = std::function<int(std::size_t index, std::span<const Real> x)>;

// Unlabeled pointset with lazily fetched {0,1} labels, memoized per index.
class NwDataset {
public:
    NwDataset(SoaPoints points, NwLabelSource source);
    static NwDataset with_labels(SoaPoints points, std::vector<int> labels);

    std::size_t size() const { return points_.size(); }
    std::size_t dims() const { return points_.dims(); }
    const SoaPoints& points() const { return points_; }

    int label(std::size_t index) const;
    std::size_t labels_fetched() const { return memo_.size(); }
    void materialize() const;

private:
    SoaPoints points_;
    NwLabelSource source_;
    mutable std::map<std::size_t, int> memo_;
};

struct NwEvalSet {
    std::vector<Point> points;
    std::vector<int> labels;
};

// K_A(x,y) = 1 / (1 + ||A(x-y)||_2^2)
Real nw_kernel(const DiagonalTransform& a, std::span<const Real> x, std::span<const Real> y);

// p_i = K_A(q, x_i) / sum_j K_A(q, x_j); positive, sums to one
std::vector<Real> prediction_probs(const DiagonalTransform& a, const SoaPoints& points,
                                   std::span<const Real> q);

// Per-dimension geometric grid {lo, lo(1+eps), ...} capped at hi, as a full
// product net over the dimensions.
std::vector<Real> eigenvalue_grid(Real epsilon, Real lo = 1.0, Real hi = 2.0);
std::vector<DiagonalTransform> epsilon_net(std::size_t dims, Real epsilon, Real lo = 1.0,
                                           Real hi = 2.0);

// Mean over the eval set of sum_i p_i |f(x_i) - y|; the expensive all-labels
// baseline.
Real exact_nw_loss(const DiagonalTransform& a, const NwDataset& dataset, const NwEvalSet& eval);

struct KdeMode {
    enum class Kind { kExact, kSubsample };
    Kind kind = Kind::kExact;
    std::size_t subsample = 0;

    static KdeMode exact() { return {}; }
    static KdeMode subsample_m(std::size_t m) { return {Kind::kSubsample, m}; }
    std::string name() const;
    static KdeMode parse(const std::string& text);
};

struct NwEstimate {
    Real value = 0.0;
    DiagonalTransform argmin;
    std::size_t n_labels = 0;
    std::size_t net_size = 0;
    std::uint64_t seed = 0;
    std::string kde_mode;
    Real max_summand = 0.0;  // diagnostic: importance-weighted summands stay in [0, 16(1+eps_kde)]

    nlohmann::json to_json() const;
};

// Importance-sampling estimator of min_A L_{S,K_A} over the epsilon net: M
// labeled draws, one companion point each from the exact p_{S,I} categorical
// (prefix-sum inversion), every net transform reweighted from the same pairs.
// Fetches at most 2M labels regardless of the dataset size.
NwEstimate nw_error(const NwDataset& dataset, const SyntheticDistribution& dist, Real epsilon,
                    Real delta, std::uint64_t seed, const KdeMode& mode = {});

std::size_t nw_pair_count(Real epsilon, Real delta, std::size_t dims);

// Pointset drawn from the marginal with lazily fetched labels; label streams
// are keyed by point index so fetch order never matters.
NwDataset make_nw_dataset(const SyntheticDistribution& dist, std::size_t n, std::uint64_t seed);

// Fresh labeled evaluation pairs for the exact-loss baseline.
NwEvalSet make_nw_eval_set(const SyntheticDistribution& dist, std::size_t n, std::uint64_t seed);

struct KernelStability {
    Real ratio = 1.0;
    Real bound = 1.0;
};

// Realized ratio p_{S,A1}(point, query) / p_{S,A2}(point, query) together with
// the (1+eps)^4 sandwich bound for the entrywise eigenvalue deviation.
KernelStability check_kernel_stability(const SoaPoints& points, const DiagonalTransform& a1,
                                       const DiagonalTransform& a2, std::span<const Real> point,
                                       std::span<const Real> query);

struct NetSufficiency {
    Real coarse_min = 0.0;
    Real fine_min = 0.0;
    Real gap = 0.0;
};

// Coarse net at eps against a refined net at eps/4 (union with the coarse grid
// so the gap is nonnegative by construction).
NetSufficiency check_net_sufficiency(const NwDataset& dataset, const NwEvalSet& eval,
                                     Real epsilon);

}  // namespace loclearn
