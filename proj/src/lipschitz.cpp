#include "loclearn/lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <utility>

#include "loclearn/kernels.hpp"
#include "loclearn/rng.hpp"
#include "loclearn/simplex.hpp"

namespace loclearn {

namespace {

Real rule_value(const kernels::McshaneScan& scan, ExtensionRule rule) {
    const Real upper = clamp01(scan.min_upper);
    const Real lower = clamp01(scan.max_lower);
    switch (rule) {
        case ExtensionRule::kUpperMcshane:
            return upper;
        case ExtensionRule::kLowerMcshane:
            return lower;
        case ExtensionRule::kMidpoint:
            return 0.5 * (upper + lower);
    }
    return 0.5 * (upper + lower);
}

}  // namespace

AnchoredLipschitzFn::AnchoredLipschitzFn(std::vector<Point> points, std::vector<Real> values,
                                         Real lipschitz, ExtensionRule rule)
    : values_(std::move(values)), lipschitz_(lipschitz), rule_(rule) {
    if (points.size() != values_.size())
        throw DimensionMismatch("anchor point/value count mismatch");
    const std::size_t d = points.empty() ? 0 : points.front().size();
    anchors_ = SoaPoints::from_rows(points, d);
    validate();
}

AnchoredLipschitzFn::AnchoredLipschitzFn(std::size_t dims, Real lipschitz, ExtensionRule rule)
    : anchors_(dims, 0), lipschitz_(lipschitz), rule_(rule) {}

void AnchoredLipschitzFn::validate() const {
    if (lipschitz_ < 0.0) throw PreconditionViolated("negative Lipschitz constant");
    const std::size_t n = anchors_.size();
    for (std::size_t j = 0; j < n; ++j) {
        if (values_[j] < -1e-12 || values_[j] > 1.0 + 1e-12)
            throw PreconditionViolated("anchor value outside [0,1]");
    }
    auto check_pair = [&](std::size_t i, std::size_t j) {
        Real dist = 0.0;
        for (std::size_t k = 0; k < anchors_.dims(); ++k)
            dist = std::max(dist, std::abs(anchors_.coord(k, i) - anchors_.coord(k, j)));
        const Real gap = std::abs(values_[i] - values_[j]);
        if (gap > lipschitz_ * dist + kLipschitzTol) {
            if (dist == 0.0)
                throw InconsistentConstraints("duplicate anchor points with unequal values");
            throw InconsistentConstraints("anchor pair violates the Lipschitz constraint");
        }
    };
    if (anchors_.dims() == 1) {
        // sorted-adjacent pairs imply all pairs in one dimension
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return anchors_.coord(0, a) < anchors_.coord(0, b);
        });
        for (std::size_t i = 1; i < n; ++i) check_pair(order[i - 1], order[i]);
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) check_pair(i, j);
    }
}

Real AnchoredLipschitzFn::evaluate(std::span<const Real> x) const { return evaluate(x, rule_); }

Real AnchoredLipschitzFn::evaluate(std::span<const Real> x, ExtensionRule rule) const {
    if (anchors_.dims() != 0 && x.size() != anchors_.dims())
        throw DimensionMismatch("query dimension mismatch");
    const auto scan = kernels::active().mcshane_scan(
        anchors_.dim_begin(0), anchors_.size(), anchors_.dims(), values_.data(), lipschitz_,
        x.data());
    if (scan.first_exact != kernels::npos) return clamp01(values_[scan.first_exact]);
    return rule_value(scan, rule);
}

// ---------------------------------------------------------------------------
// 1D chain ERM: dynamic programming over convex piecewise-linear prefix costs
// kept as two breakpoint heaps with lazy shifts. Exact optimum in O(n log n).
// ---------------------------------------------------------------------------

namespace {

struct ChainResult {
    std::vector<Real> values;
    Real objective = 0.0;
};

ChainResult solve_chain_l1(const std::vector<Real>& y, const std::vector<Real>& gaps) {
    const std::size_t n = y.size();
    std::priority_queue<Real> left;  // breakpoints below the minimizer interval
    std::priority_queue<Real, std::vector<Real>, std::greater<>> right;
    Real add_left = 0.0, add_right = 0.0;
    std::vector<std::pair<Real, Real>> argmin(n);

    for (std::size_t j = 0; j < n; ++j) {
        if (j > 0) {
            // sliding-window min over |v - v'| <= gap widens the flat region
            add_left -= gaps[j - 1];
            add_right += gaps[j - 1];
        }
        left.push(y[j] - add_left);
        right.push(y[j] - add_right);
        const Real lo = left.top() + add_left;
        const Real hi = right.top() + add_right;
        if (lo > hi) {
            left.pop();
            right.pop();
            left.push(hi - add_left);
            right.push(lo - add_right);
        }
        argmin[j] = {left.top() + add_left, right.top() + add_right};
    }

    ChainResult out;
    out.values.assign(n, 0.0);
    {
        const auto [lo, hi] = argmin[n - 1];
        out.values[n - 1] = std::clamp(0.5 * (lo + hi), lo, hi);
    }
    for (std::size_t j = n - 1; j-- > 0;) {
        const Real wlo = out.values[j + 1] - gaps[j];
        const Real whi = out.values[j + 1] + gaps[j];
        const auto [lo, hi] = argmin[j];
        const Real a = std::max(wlo, lo);
        const Real b = std::min(whi, hi);
        if (a <= b)
            out.values[j] = std::clamp(out.values[j + 1], a, b);
        else if (hi < wlo)
            out.values[j] = wlo;
        else
            out.values[j] = whi;
    }
    // Clamping the whole trajectory into [0,1] keeps feasibility (clamp is a
    // contraction) and cannot increase any |y - v| term since y is in [0,1].
    for (auto& v : out.values) v = clamp01(v);
    for (std::size_t j = 0; j < n; ++j) out.objective += std::abs(y[j] - out.values[j]);
    return out;
}

// ---------------------------------------------------------------------------
// d-dim ERM: constraint generation over violated anchor pairs. The final
// iterate is feasible for every pair and optimal for the generated relaxation,
// hence optimal for the full problem.
// ---------------------------------------------------------------------------

struct PairKey {
    std::size_t i, j;
    bool operator<(const PairKey& o) const { return i < o.i || (i == o.i && j < o.j); }
};

ChainResult solve_pairs_l1(const SoaPoints& pts, const std::vector<Real>& y, Real lipschitz) {
    const std::size_t n = pts.size();
    const std::size_t d = pts.dims();

    auto pair_bound = [&](std::size_t i, std::size_t j) {
        Real dist = 0.0;
        for (std::size_t k = 0; k < d; ++k)
            dist = std::max(dist, std::abs(pts.coord(k, i) - pts.coord(k, j)));
        return lipschitz * dist;
    };

    ChainResult out;
    out.values = y;

    // All-coincident (or L == 0) instances collapse to a single median.
    bool all_zero_bound = true;
    for (std::size_t i = 1; i < n && all_zero_bound; ++i)
        all_zero_bound = pair_bound(0, i) == 0.0;
    if (all_zero_bound && n > 1) {
        std::vector<Real> sorted = y;
        std::sort(sorted.begin(), sorted.end());
        const Real med = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        out.values.assign(n, clamp01(med));
        out.objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) out.objective += std::abs(y[i] - out.values[i]);
        return out;
    }

    // Working-set loop over directed rows: only the violated side of a pair
    // enters the program (the other side is caught by a later global scan if
    // the optimum ever flips it). Rows that went slack are dropped once the
    // set grows past the memory guard; the final iterate is still optimal
    // for a relaxation and feasible for every pair, which certifies global
    // optimality.
    std::map<PairKey, unsigned> working;  // bit 1: v_i - v_j <= c, bit 2: v_j - v_i <= c
    const std::size_t max_rounds = 2 * n * n + 8;
    const std::size_t prune_threshold = 4096;
    for (std::size_t round = 0; round < max_rounds; ++round) {
        std::vector<std::pair<Real, std::pair<PairKey, unsigned>>> fresh;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const Real gap = out.values[i] - out.values[j];
                const Real excess = std::abs(gap) - pair_bound(i, j);
                if (excess <= 1e-10) continue;
                const unsigned dir = gap > 0.0 ? 1u : 2u;
                const auto it = working.find({i, j});
                if (it == working.end() || (it->second & dir) == 0)
                    fresh.push_back({excess, {{i, j}, dir}});
            }
        }
        if (fresh.empty()) break;
        // pruning is disabled late in the solve so the endgame adds rows
        // monotonically and must terminate
        if (working.size() > prune_threshold && round < 200) {
            for (auto it = working.begin(); it != working.end();) {
                const Real slack = pair_bound(it->first.i, it->first.j) -
                                   std::abs(out.values[it->first.i] - out.values[it->first.j]);
                it = slack > 1e-7 ? working.erase(it) : std::next(it);
            }
        }
        std::sort(fresh.begin(), fresh.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        const std::size_t batch = std::min<std::size_t>(fresh.size(), 1024);
        for (std::size_t t = 0; t < batch; ++t)
            working[fresh[t].second.first] |= fresh[t].second.second;

        // connected components of the working set are independent programs
        std::vector<std::size_t> root(n);
        std::iota(root.begin(), root.end(), 0);
        auto find = [&root](std::size_t a) {
            while (root[a] != a) a = root[a] = root[root[a]];
            return a;
        };
        for (const auto& [pk, dir] : working) root[find(pk.i)] = find(pk.j);
        std::map<std::size_t, std::vector<std::pair<PairKey, unsigned>>> components;
        for (const auto& [pk, dir] : working) components[find(pk.i)].push_back({pk, dir});

        out.values = y;
        for (const auto& [root_idx, pairs] : components) {
            (void)root_idx;
            // variables p_i, q_i >= 0 for the component's points; v = y + p - q
            std::vector<std::size_t> var_of(n, kernels::npos);
            std::vector<std::size_t> points;
            for (const auto& [pk, dir] : pairs) {
                for (std::size_t idx : {pk.i, pk.j}) {
                    if (var_of[idx] == kernels::npos) {
                        var_of[idx] = points.size();
                        points.push_back(idx);
                    }
                }
            }
            const std::size_t nv = 2 * points.size();
            std::vector<std::vector<Real>> rows;
            std::vector<Real> rhs;
            rows.reserve(pairs.size());
            for (const auto& [pk, dir] : pairs) {
                const std::size_t pi = var_of[pk.i], pj = var_of[pk.j];
                const Real bound = pair_bound(pk.i, pk.j);
                const Real diff = y[pk.i] - y[pk.j];
                if (dir & 1u) {
                    std::vector<Real> row(nv, 0.0);
                    row[2 * pi] = 1.0;
                    row[2 * pi + 1] = -1.0;
                    row[2 * pj] = -1.0;
                    row[2 * pj + 1] = 1.0;
                    rows.push_back(std::move(row));
                    rhs.push_back(bound - diff);
                }
                if (dir & 2u) {
                    std::vector<Real> row(nv, 0.0);
                    row[2 * pi] = -1.0;
                    row[2 * pi + 1] = 1.0;
                    row[2 * pj] = 1.0;
                    row[2 * pj + 1] = -1.0;
                    rows.push_back(std::move(row));
                    rhs.push_back(bound + diff);
                }
            }
            const std::vector<Real> cost(nv, 1.0);
            const LpResult lp = solve_lp(rows, rhs, cost);
            if (lp.status != LpResult::Status::kOptimal)
                throw PreconditionViolated("ERM relaxation did not solve to optimality");
            for (std::size_t t = 0; t < points.size(); ++t)
                out.values[points[t]] = y[points[t]] + lp.x[2 * t] - lp.x[2 * t + 1];
        }
    }

    // Feasibility polish for simplex round-off: split any residual excess
    // evenly across the offending pair. Adjustments are O(1e-10) and leave
    // the objective within the contract tolerance.
    for (int pass = 0; pass < 4; ++pass) {
        Real worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const Real bound = pair_bound(i, j);
                const Real excess = std::abs(out.values[i] - out.values[j]) - bound;
                if (excess > 0.0) {
                    worst = std::max(worst, excess);
                    const Real shift = 0.5 * excess * (1.0 + 1e-12);
                    if (out.values[i] > out.values[j]) {
                        out.values[i] -= shift;
                        out.values[j] += shift;
                    } else {
                        out.values[i] += shift;
                        out.values[j] -= shift;
                    }
                }
            }
        }
        if (worst <= 0.0) break;
    }

    for (auto& v : out.values) v = clamp01(v);
    out.objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) out.objective += std::abs(y[i] - out.values[i]);
    return out;
}

}  // namespace

AnchoredLipschitzFn erm_fit(const ErmProblem& problem) {
    const std::size_t n = problem.samples.size();
    if (n == 0) throw EmptyInput("erm_fit needs at least one sample");
    if (problem.lipschitz < 0.0) throw PreconditionViolated("negative Lipschitz constant");
    const std::size_t d = problem.samples.front().size();
    if (problem.labels.size() != n) throw DimensionMismatch("sample/label count mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (problem.samples[i].size() != d) throw DimensionMismatch("sample dimension mismatch");
        if (problem.labels[i] < 0.0 || problem.labels[i] > 1.0)
            throw PreconditionViolated("label outside [0,1]");
        if (problem.domain.dims() == d && !problem.domain.contains(problem.samples[i]))
            throw OutOfDomain("sample outside the domain box");
    }

    std::vector<Real> fitted(n, 0.0);
    if (d == 1) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return problem.samples[a][0] < problem.samples[b][0];
        });
        std::vector<Real> ys(n), gaps(n > 0 ? n - 1 : 0);
        for (std::size_t t = 0; t < n; ++t) ys[t] = problem.labels[order[t]];
        for (std::size_t t = 0; t + 1 < n; ++t)
            gaps[t] =
                problem.lipschitz * (problem.samples[order[t + 1]][0] - problem.samples[order[t]][0]);
        const ChainResult chain = solve_chain_l1(ys, gaps);
        for (std::size_t t = 0; t < n; ++t) fitted[order[t]] = chain.values[t];
    } else {
        const SoaPoints pts = SoaPoints::from_rows(problem.samples, d);
        const ChainResult res = solve_pairs_l1(pts, problem.labels, problem.lipschitz);
        fitted = res.values;
    }
    return AnchoredLipschitzFn(problem.samples, std::move(fitted), problem.lipschitz,
                               ExtensionRule::kMidpoint);
}

Real erm_objective(const ErmProblem& problem, const AnchoredLipschitzFn& fit) {
    Real total = 0.0;
    for (std::size_t i = 0; i < problem.samples.size(); ++i)
        total += std::abs(problem.labels[i] - fit.evaluate(problem.samples[i]));
    return total;
}

ConstrainedExtension::ConstrainedExtension(std::shared_ptr<const AnchoredLipschitzFn> anchors,
                                           DistanceFn constraint_distance, Real constraint_value)
    : anchors_(std::move(anchors)),
      constraint_distance_(std::move(constraint_distance)),
      constraint_value_(constraint_value) {}

Real ConstrainedExtension::evaluate(std::span<const Real> x) const {
    const Real cd = constraint_distance_(x);
    if (cd == 0.0) return constraint_value_;
    const auto& fn = *anchors_;
    const auto scan = kernels::active().mcshane_scan(
        fn.anchors().dim_begin(0), fn.anchor_count(), fn.anchors().dims(), fn.values().data(),
        fn.lipschitz_constant(), x.data());
    if (scan.first_exact != kernels::npos) return clamp01(fn.values()[scan.first_exact]);
    Real v = scan.min_upper;
    if (cd != kInf) v = std::min(v, constraint_value_ + fn.lipschitz_constant() * cd);
    return clamp01(v);
}

ConstrainedExtension mcshane_extend_constrained(std::vector<Point> points,
                                                std::vector<Real> values, Real lipschitz,
                                                DistanceFn constraint_distance,
                                                Real constraint_value) {
    for (std::size_t j = 0; j < points.size(); ++j) {
        const Real cd = constraint_distance(points[j]);
        if (std::abs(values[j] - constraint_value) > lipschitz * cd + kLipschitzTol)
            throw InconsistentConstraints(
                "anchor value conflicts with the constraint set under the Lipschitz bound");
    }
    const std::size_t d = points.empty() ? 0 : points.front().size();
    auto fn = points.empty()
                  ? std::make_shared<const AnchoredLipschitzFn>(d, lipschitz,
                                                                ExtensionRule::kUpperMcshane)
                  : std::make_shared<const AnchoredLipschitzFn>(std::move(points), std::move(values),
                                                                lipschitz,
                                                                ExtensionRule::kUpperMcshane);
    return ConstrainedExtension(fn, std::move(constraint_distance), constraint_value);
}

Real lipschitz_audit(const std::function<Real(std::span<const Real>)>& fn, Real lipschitz,
                     const Box& domain, std::size_t n_pairs, std::uint64_t rng_seed) {
    if (n_pairs == 0) throw PreconditionViolated("lipschitz_audit needs at least one pair");
    Rng rng(rng_seed);
    const std::size_t d = domain.dims();
    Point a(d), b(d);
    Real worst = -kInf;
    for (std::size_t t = 0; t < n_pairs; ++t) {
        for (std::size_t k = 0; k < d; ++k) {
            a[k] = rng.uniform(domain.lo[k], domain.hi[k]);
            b[k] = rng.uniform(domain.lo[k], domain.hi[k]);
        }
        const Real gap = std::abs(fn(a) - fn(b));
        worst = std::max(worst, gap - lipschitz * sup_dist(a, b));
    }
    return worst;
}

}  // namespace loclearn
