#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "loclearn/common.hpp"

namespace loclearn {

enum class ExtensionRule { kUpperMcshane, kLowerMcshane, kMidpoint };

// A bounded L-Lipschitz function represented by anchor points with values,
// total on [0,1]^d through one of the McShane extension rules. Values are
// clamped to [0,1]; immutable after construction and safe to share across
// threads.
class AnchoredLipschitzFn {
public:
    AnchoredLipschitzFn(std::vector<Point> points, std::vector<Real> values, Real lipschitz,
                        ExtensionRule rule = ExtensionRule::kMidpoint);

    // empty anchor set of the given dimension (upper rule gives 1, lower 0, midpoint 1/2)
    AnchoredLipschitzFn(std::size_t dims, Real lipschitz, ExtensionRule rule);

    Real evaluate(std::span<const Real> x) const;
    Real evaluate(std::span<const Real> x, ExtensionRule rule) const;
    Real operator()(std::span<const Real> x) const { return evaluate(x); }

    std::size_t dims() const { return anchors_.dims(); }
    std::size_t anchor_count() const { return anchors_.size(); }
    const SoaPoints& anchors() const { return anchors_; }
    const std::vector<Real>& values() const { return values_; }
    Real lipschitz_constant() const { return lipschitz_; }
    ExtensionRule rule() const { return rule_; }

    AnchoredLipschitzFn with_rule(ExtensionRule rule) const {
        AnchoredLipschitzFn copy = *this;
        copy.rule_ = rule;
        return copy;
    }

private:
    void validate() const;

    SoaPoints anchors_;
    std::vector<Real> values_;
    Real lipschitz_ = 0.0;
    ExtensionRule rule_ = ExtensionRule::kMidpoint;
};

struct ErmProblem {
    std::vector<Point> samples;
    std::vector<Real> labels;
    Real lipschitz = 0.0;
    Box domain;
};

// L1 empirical risk minimizer over the L-Lipschitz class (sup-norm metric).
// Anchors sit at exactly the sample points; the objective is optimal to 1e-6.
// 1D solves the sorted-adjacent chain by dynamic programming over convex
// piecewise-linear prefix costs; higher dimensions run constraint generation
// around a dense simplex, which is exact at termination because the final
// iterate is feasible for all pairs and optimal for a relaxation.
AnchoredLipschitzFn erm_fit(const ErmProblem& problem);

Real erm_objective(const ErmProblem& problem, const AnchoredLipschitzFn& fit);

using DistanceFn = std::function<Real(std::span<const Real>)>;

// Upper McShane extension of anchor values combined with a value constraint on
// the zero set of constraint_distance:
//   g(x) = clamp(min(min_j v_j + L*d(x, x_j), cv + L*constraint_distance(x)))
// g equals cv exactly wherever constraint_distance(x) == 0 and reproduces
// anchor values exactly at anchor points.
class ConstrainedExtension {
public:
    ConstrainedExtension(std::shared_ptr<const AnchoredLipschitzFn> anchors,
                         DistanceFn constraint_distance, Real constraint_value);

    Real evaluate(std::span<const Real> x) const;
    Real operator()(std::span<const Real> x) const { return evaluate(x); }

    const AnchoredLipschitzFn& anchors() const { return *anchors_; }
    Real constraint_value() const { return constraint_value_; }

private:
    std::shared_ptr<const AnchoredLipschitzFn> anchors_;
    DistanceFn constraint_distance_;
    Real constraint_value_;
};

// Throws InconsistentConstraints when some anchor value cannot coexist with
// the constraint under Lipschitz constant L.
ConstrainedExtension mcshane_extend_constrained(std::vector<Point> points,
                                                std::vector<Real> values, Real lipschitz,
                                                DistanceFn constraint_distance,
                                                Real constraint_value);

// Max over sampled pairs of |g(x)-g(y)| - L*||x-y||_inf; <= 0 means no
// violation was observed. Deterministic given the seed.
Real lipschitz_audit(const std::function<Real(std::span<const Real>)>& fn, Real lipschitz,
                     const Box& domain, std::size_t n_pairs, std::uint64_t rng_seed);

}  // namespace loclearn
