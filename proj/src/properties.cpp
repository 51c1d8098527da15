#include <cmath>
#include <sstream>

#include "loclearn/experiment.hpp"

namespace loclearn {

namespace {

std::function<Point(Rng&)> uniform_sampler(std::size_t dims) {
    return [dims](Rng& rng) { return rng.uniform_point(dims); };
}

bool check_tiling(std::uint64_t seed, std::string& detail) {
    Rng rng(seed);
    for (int t = 0; t < 30; ++t) {
        const std::size_t dims = 1 + rng.next_below(3);
        const Real L = 20.0 + 180.0 * rng.next_double();
        const Real eps = 0.1 + 0.4 * rng.next_double();
        const Partition p = Partition::preprocess(L, eps, dims, rng.next_u64());
        for (std::size_t k = 0; k < dims; ++k) {
            Real total = 0.0;
            Real prev = 0.0;
            for (const auto& iv : p.intervals(k)) {
                if (iv.lo != prev) {
                    detail = "interval chain broken";
                    return false;
                }
                total += iv.hi - iv.lo;
                prev = iv.hi;
            }
            if (std::abs(total - 1.0) > 1e-12 || prev != 1.0) {
                std::ostringstream os;
                os << "lengths sum to " << total;
                detail = os.str();
                return false;
            }
        }
    }
    return true;
}

bool check_locate(std::uint64_t seed, std::string& detail) {
    Rng rng(seed);
    const Partition p = Partition::preprocess(50.0, 0.25, 2, rng.next_u64());
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& axis = p.intervals(k);
        for (std::size_t i = 0; i + 1 < axis.size(); ++i) {
            Point x{0.5, 0.5};
            x[k] = axis[i].hi;  // shared boundary
            const CellId cell = p.locate(x);
            if (cell.index[k] != i + 1) {
                detail = "boundary point not assigned to the right interval";
                return false;
            }
        }
    }
    Point one{1.0, 1.0};
    const CellId last = p.locate(one);
    for (std::size_t k = 0; k < 2; ++k) {
        if (last.index[k] + 1 != p.intervals(k).size()) {
            detail = "x=1 not in the last interval";
            return false;
        }
    }
    return true;
}

bool check_extension_box(std::uint64_t seed, std::string& detail) {
    Rng rng(seed);
    for (int t = 0; t < 20; ++t) {
        const Partition p = Partition::preprocess(40.0 + 40.0 * rng.next_double(), 0.4, 2,
                                                  rng.next_u64());
        const Point x = rng.uniform_point(2);
        const CellId cell = p.locate(x);
        if (cell.kind != CellKind::kLongBox) continue;
        const Box inner = p.cell_box(cell);
        const Box outer = p.extension_box(cell);
        for (std::size_t k = 0; k < 2; ++k) {
            const Real shell = 1.0 / p.lipschitz();
            const Real lo_gap = inner.lo[k] - outer.lo[k];
            const Real hi_gap = outer.hi[k] - inner.hi[k];
            const bool lo_ok = outer.lo[k] == 0.0 ? lo_gap <= shell + 1e-12
                                                  : std::abs(lo_gap - shell) <= 1e-12;
            const bool hi_ok = outer.hi[k] == 1.0 ? hi_gap <= shell + 1e-12
                                                  : std::abs(hi_gap - shell) <= 1e-12;
            if (!lo_ok || !hi_ok) {
                detail = "extension box inflation is not exactly 1/L";
                return false;
            }
        }
    }
    return true;
}

bool check_short_mass(std::uint64_t seed, std::string& detail) {
    Rng rng(seed);
    for (const std::size_t dims : {std::size_t{1}, std::size_t{2}}) {
        const Real eps = 0.25;
        const Real L = 160.0;
        Real mean = 0.0;
        const int offsets = 40;
        for (int t = 0; t < offsets; ++t) {
            const Partition p = Partition::preprocess(L, eps, dims, rng.next_u64());
            mean += short_mass(p, uniform_sampler(dims), 4000, rng.next_u64());
        }
        mean /= offsets;
        const Real bound = dims == 1 ? eps : 2 * eps;
        if (mean > bound) {
            std::ostringstream os;
            os << "mean short mass " << mean << " exceeds " << bound;
            detail = os.str();
            return false;
        }
    }
    return true;
}

bool check_erm(std::uint64_t seed, std::string& detail) {
    Rng rng(seed);
    for (int t = 0; t < 25; ++t) {
        const std::size_t dims = 1 + rng.next_below(2);
        const std::size_t n = 2 + rng.next_below(12);
        ErmProblem problem;
        problem.lipschitz = 0.5 + 4.0 * rng.next_double();
        problem.domain = Box::unit(dims);
        for (std::size_t i = 0; i < n; ++i) {
            problem.samples.push_back(rng.uniform_point(dims));
            problem.labels.push_back(rng.next_double());
        }
        const AnchoredLipschitzFn lo_fit = erm_fit(problem);  // ctor revalidates anchors
        const Real obj_lo = erm_objective(problem, lo_fit);
        ErmProblem looser = problem;
        looser.lipschitz = problem.lipschitz * 2.0;
        const Real obj_hi = erm_objective(looser, erm_fit(looser));
        if (obj_hi > obj_lo + 1e-7) {
            detail = "objective not monotone in L";
            return false;
        }
    }
    return true;
}

bool check_mcshane(std::uint64_t seed, std::string& detail) {
    Rng rng(seed);
    for (int t = 0; t < 10; ++t) {
        const std::size_t dims = 1 + rng.next_below(2);
        const Real L = 1.0 + 3.0 * rng.next_double();
        const AnchoredLipschitzFn fn = random_lipschitz_fn(dims, L, 6, rng);
        for (int q = 0; q < 50; ++q) {
            const Point x = rng.uniform_point(dims);
            const Real up = fn.evaluate(x, ExtensionRule::kUpperMcshane);
            const Real lo = fn.evaluate(x, ExtensionRule::kLowerMcshane);
            if (up < lo - 1e-12) {
                detail = "upper rule fell below lower rule";
                return false;
            }
        }
        for (std::size_t a = 0; a < fn.anchor_count(); ++a) {
            const Point x = fn.anchors().row(a);
            for (const auto rule : {ExtensionRule::kUpperMcshane, ExtensionRule::kLowerMcshane,
                                    ExtensionRule::kMidpoint}) {
                if (std::abs(fn.evaluate(x, rule) - fn.values()[a]) != 0.0) {
                    detail = "anchor value not reproduced";
                    return false;
                }
            }
        }
        for (const auto rule : {ExtensionRule::kUpperMcshane, ExtensionRule::kLowerMcshane,
                                ExtensionRule::kMidpoint}) {
            const Real viol = lipschitz_audit(
                [&](std::span<const Real> x) { return fn.evaluate(x, rule); }, L,
                Box::unit(dims), 10000, rng.next_u64());
            if (viol > 1e-9) {
                detail = "extension rule failed the Lipschitz audit";
                return false;
            }
        }
    }
    return true;
}

bool check_session_lipschitz(std::uint64_t seed, std::string& detail) {
    Rng rng(seed);
    for (const std::size_t dims : {std::size_t{1}, std::size_t{2}}) {
        const Real L = dims == 1 ? 25.0 : 15.0;
        const Real eps = dims == 1 ? 0.25 : 0.5;
        auto gt = std::make_shared<const AnchoredLipschitzFn>(
            random_lipschitz_fn(dims, L, 30, rng));
        const auto dist = SyntheticDistribution::uniform_gt(gt);
        Constants constants;
        constants.pool_size = 0.05;  // small-scale smoke; acceptance runs the full budget
        QuerySession session =
            make_synthetic_session(L, eps, dims, dist, rng.next_u64(), constants);
        const Real viol = lipschitz_audit(
            [&](std::span<const Real> x) { return session.query(x); }, L, Box::unit(dims), 4000,
            rng.next_u64());
        if (viol > 1e-6) {
            std::ostringstream os;
            os << "session audit violation " << viol << " in " << dims << "d";
            detail = os.str();
            return false;
        }
    }
    return true;
}

bool check_budget(std::uint64_t seed, std::string& detail) {
    Rng rng(seed);
    const Real L = 25.0, eps = 0.25;
    auto gt = std::make_shared<const AnchoredLipschitzFn>(random_lipschitz_fn(1, L, 10, rng));
    Constants constants;
    constants.pool_size = 0.2;
    QuerySession session = make_synthetic_session(L, eps, 1, SyntheticDistribution::uniform_gt(gt),
                                                  rng.next_u64(), constants);
    const std::size_t cap = session.sample_cap();
    std::size_t before = 0;
    for (int q = 0; q < 200; ++q) {
        const Point x = rng.uniform_point(1);
        session.query(x);
        const std::size_t after = session.budget_report().distinct_labels;
        if (after - before > 2 * cap) {
            detail = "a query fetched more than 2x the per-cell cap";
            return false;
        }
        before = after;
    }
    return true;
}

bool check_nw(std::uint64_t seed, std::string& detail) {
    Rng rng(seed);
    for (int t = 0; t < 50; ++t) {
        const std::size_t dims = 1 + rng.next_below(3);
        const std::size_t n = 2 + rng.next_below(10);
        SoaPoints pts(dims, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < dims; ++k) pts.coord(k, i) = rng.next_double();
        DiagonalTransform a;
        for (std::size_t k = 0; k < dims; ++k)
            a.eigenvalues.push_back(1.0 + rng.next_double());
        const Point q = rng.uniform_point(dims);
        const auto p = prediction_probs(a, pts, q);
        Real total = 0.0;
        for (Real v : p) {
            if (v <= 0.0) {
                detail = "nonpositive probability";
                return false;
            }
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-12) {
            detail = "probabilities do not sum to 1";
            return false;
        }
    }
    for (int t = 0; t < 200; ++t) {
        const std::size_t dims = 1 + rng.next_below(2);
        const std::size_t n = 2 + rng.next_below(10);
        SoaPoints pts(dims, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < dims; ++k) pts.coord(k, i) = rng.next_double();
        DiagonalTransform a2;
        for (std::size_t k = 0; k < dims; ++k) a2.eigenvalues.push_back(1.0 + rng.next_double());
        const Real eps = 0.3 * rng.next_double();
        DiagonalTransform a1 = a2;
        for (auto& e : a1.eigenvalues)
            e *= 1.0 + eps * (2.0 * rng.next_double() - 1.0);
        const Point q = rng.uniform_point(dims);
        const Point x = pts.row(rng.next_below(n));
        const auto st = check_kernel_stability(pts, a1, a2, x, q);
        if (st.ratio > st.bound * (1 + 1e-9) || st.ratio < 1.0 / st.bound * (1 - 1e-9)) {
            detail = "kernel stability sandwich violated";
            return false;
        }
    }
    return true;
}

bool check_estimate_determinism(std::uint64_t seed, std::string& detail) {
    Rng rng(seed);
    auto gt = std::make_shared<const AnchoredLipschitzFn>(random_lipschitz_fn(1, 20.0, 10, rng));
    const auto dist = SyntheticDistribution::uniform_gt(gt);
    Constants constants;
    constants.pool_size = 0.1;
    const auto a = estimate_error(20.0, 0.4, 1, dist, 77, constants);
    const auto b = estimate_error(20.0, 0.4, 1, dist, 77, constants);
    if (a.value != b.value || a.n_pool_labels != b.n_pool_labels) {
        detail = "estimate not reproducible for a fixed seed";
        return false;
    }
    return true;
}

}  // namespace

std::vector<PropertyCheck> run_property_suite(std::uint64_t seed) {
    std::vector<PropertyCheck> checks;
    auto run = [&](const std::string& name, bool (*fn)(std::uint64_t, std::string&)) {
        PropertyCheck check;
        check.name = name;
        try {
            check.passed = fn(seed, check.detail);
        } catch (const std::exception& e) {
            check.passed = false;
            check.detail = e.what();
        }
        checks.push_back(std::move(check));
    };
    run("partition-tiling", &check_tiling);
    run("partition-locate-tiebreak", &check_locate);
    run("extension-box-inflation", &check_extension_box);
    run("short-mass-mean", &check_short_mass);
    run("erm-consistency-monotone", &check_erm);
    run("mcshane-rules", &check_mcshane);
    run("session-lipschitz", &check_session_lipschitz);
    run("session-budget-cap", &check_budget);
    run("nw-probs-stability", &check_nw);
    run("estimate-determinism", &check_estimate_determinism);
    return checks;
}

}  // namespace loclearn
