#include <doctest.h>

#include <cmath>

#include "loclearn/distributions.hpp"
#include "loclearn/lipschitz.hpp"
#include "loclearn/rng.hpp"
#include "oracles.hpp"

using namespace loclearn;

namespace {

ErmProblem make_problem(std::vector<Point> pts, std::vector<Real> labels, Real L) {
    const std::size_t d = pts.front().size();
    return ErmProblem{std::move(pts), std::move(labels), L, Box::unit(d)};
}

}  // namespace

TEST_CASE("erm_fit: single sample is unconstrained") {
    const auto fit = erm_fit(make_problem({{0.5}}, {0.7}, 3.0));
    CHECK(fit.anchor_count() == 1);
    CHECK(fit.values()[0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(erm_objective(make_problem({{0.5}}, {0.7}, 3.0), fit) == doctest::Approx(0.0));
}

TEST_CASE("erm_fit: already-Lipschitz labels are reproduced") {
    const auto problem = make_problem({{0.0}, {1.0}}, {0.0, 1.0}, 1.0);
    const auto fit = erm_fit(problem);
    CHECK(erm_objective(problem, fit) == doctest::Approx(0.0).scale(1).epsilon(1e-9));
    CHECK(fit.values()[0] == doctest::Approx(0.0));
    CHECK(fit.values()[1] == doctest::Approx(1.0));
}

TEST_CASE("erm_fit: tight pair pays the constrained slack") {
    const auto problem = make_problem({{0.0}, {0.1}}, {0.0, 1.0}, 2.0);
    const auto fit = erm_fit(problem);
    CHECK(erm_objective(problem, fit) == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(std::abs(fit.values()[1] - fit.values()[0]) <= 0.2 + 1e-9);
}

TEST_CASE("erm_fit: empty input throws") {
    ErmProblem empty;
    empty.lipschitz = 1.0;
    CHECK_THROWS_AS(erm_fit(empty), EmptyInput);
}

TEST_CASE("erm_fit matches the value-grid search on small instances") {
    Rng rng(101);
    for (int t = 0; t < 30; ++t) {
        const std::size_t dims = (t % 2) + 1;
        const std::size_t n = 2 + rng.next_below(4);
        std::vector<Point> pts;
        std::vector<Real> labels;
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back(rng.uniform_point(dims));
            labels.push_back(rng.next_double());
        }
        const Real L = (t % 3 == 0) ? 4.0 : 0.5 + 3.0 * rng.next_double();
        const auto problem = make_problem(pts, labels, L);
        const Real objective = erm_objective(problem, erm_fit(problem));
        const Real grid = oracles::erm_grid_search(pts, labels, L);
        // the grid search relaxes constraints by one step, so it may land a
        // shade below the exact optimum as well as above it
        CHECK(std::abs(objective - grid) <= 0.05);
    }
}

TEST_CASE("erm_fit objective is monotone in the Lipschitz constant") {
    Rng rng(7);
    for (int t = 0; t < 10; ++t) {
        const std::size_t dims = (t % 2) + 1;
        std::vector<Point> pts;
        std::vector<Real> labels;
        for (int i = 0; i < 12; ++i) {
            pts.push_back(rng.uniform_point(dims));
            labels.push_back(rng.next_double());
        }
        Real prev = kInf;
        for (const Real L : {0.25, 1.0, 4.0, 16.0}) {
            const auto problem = make_problem(pts, labels, L);
            const Real obj = erm_objective(problem, erm_fit(problem));
            CHECK(obj <= prev + 1e-7);
            prev = obj;
        }
    }
}

TEST_CASE("1d and multi-dim solver routes agree") {
    Rng rng(55);
    for (int t = 0; t < 12; ++t) {
        const std::size_t n = 2 + rng.next_below(30);
        std::vector<Point> pts1, pts2;
        std::vector<Real> labels;
        for (std::size_t i = 0; i < n; ++i) {
            const Real x = rng.next_double();
            pts1.push_back({x});
            pts2.push_back({x, 0.25});  // constant extra coordinate keeps sup-norm distances
            labels.push_back(rng.next_double());
        }
        const Real L = 0.5 + 4.0 * rng.next_double();
        const Real chain = erm_objective(make_problem(pts1, labels, L),
                                         erm_fit(make_problem(pts1, labels, L)));
        const Real pairs = erm_objective(make_problem(pts2, labels, L),
                                         erm_fit(make_problem(pts2, labels, L)));
        CHECK(chain == doctest::Approx(pairs).epsilon(1e-8));
    }
}

TEST_CASE("multi-dim erm beats independently generated feasible competitors") {
    Rng rng(909);
    for (int instance = 0; instance < 15; ++instance) {
        const std::size_t n = 15 + rng.next_below(16);
        const bool coin_labels = instance % 3 == 0;  // denser conflict graphs
        std::vector<Point> pts;
        std::vector<Real> labels;
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back(rng.uniform_point(2));
            labels.push_back(coin_labels ? (rng.bernoulli(0.5) ? 1.0 : 0.0) : rng.next_double());
        }
        const Real L = 0.4 + 2.0 * rng.next_double();
        const auto problem = make_problem(pts, labels, L);
        const Real objective = erm_objective(problem, erm_fit(problem));

        auto bound = [&](std::size_t i, std::size_t j) {
            return L * sup_dist(pts[i], pts[j]);
        };
        // feasible competitors via cyclic pairwise projections from random starts
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<Real> v(n);
            for (auto& value : v) value = rng.next_double();
            for (int sweep = 0; sweep < 300; ++sweep) {
                Real worst = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = i + 1; j < n; ++j) {
                        const Real excess = std::abs(v[i] - v[j]) - bound(i, j);
                        if (excess > 0.0) {
                            worst = std::max(worst, excess);
                            const Real shift = 0.5 * excess;
                            if (v[i] > v[j]) {
                                v[i] -= shift;
                                v[j] += shift;
                            } else {
                                v[i] += shift;
                                v[j] -= shift;
                            }
                        }
                    }
                }
                if (worst < 1e-13) break;
            }
            Real competitor = 0.0;
            bool feasible = true;
            for (std::size_t i = 0; i < n && feasible; ++i) {
                competitor += std::abs(labels[i] - clamp01(v[i]));
                for (std::size_t j = i + 1; j < n; ++j)
                    feasible = feasible &&
                               std::abs(clamp01(v[i]) - clamp01(v[j])) <= bound(i, j) + 1e-9;
            }
            if (!feasible) continue;
            CHECK(objective <= competitor + 1e-7);
        }
    }
}

TEST_CASE("evaluate: single-anchor upper rule") {
    const AnchoredLipschitzFn fn({{0.0}}, {0.0}, 1.0, ExtensionRule::kUpperMcshane);
    const Point x{0.3};
    CHECK(fn.evaluate(x) == doctest::Approx(0.3));
}

TEST_CASE("evaluate: flat midpoint between equal anchors") {
    const AnchoredLipschitzFn fn({{0.0}, {1.0}}, {0.5, 0.5}, 1.0, ExtensionRule::kMidpoint);
    const Point x{0.5};
    CHECK(fn.evaluate(x) == doctest::Approx(0.5));
}

TEST_CASE("evaluate: three rules at the tent midpoint") {
    const AnchoredLipschitzFn fn({{0.0}, {1.0}}, {0.0, 0.0}, 1.0);
    const Point x{0.5};
    CHECK(fn.evaluate(x, ExtensionRule::kUpperMcshane) == doctest::Approx(0.5));
    CHECK(fn.evaluate(x, ExtensionRule::kLowerMcshane) == doctest::Approx(0.0));
    CHECK(fn.evaluate(x, ExtensionRule::kMidpoint) == doctest::Approx(0.25));
}

TEST_CASE("evaluate returns anchor values exactly under every rule") {
    Rng rng(3);
    const auto fn = random_lipschitz_fn(2, 2.5, 12, rng);
    for (std::size_t i = 0; i < fn.anchor_count(); ++i) {
        const Point x = fn.anchors().row(i);
        for (const auto rule : {ExtensionRule::kUpperMcshane, ExtensionRule::kLowerMcshane,
                                ExtensionRule::kMidpoint})
            CHECK(fn.evaluate(x, rule) == fn.values()[i]);
    }
}

TEST_CASE("upper rule dominates lower rule pointwise") {
    Rng rng(17);
    const auto fn = random_lipschitz_fn(2, 3.0, 8, rng);
    for (int t = 0; t < 200; ++t) {
        const Point x = rng.uniform_point(2);
        CHECK(fn.evaluate(x, ExtensionRule::kUpperMcshane) >=
              fn.evaluate(x, ExtensionRule::kLowerMcshane) - 1e-12);
    }
}

TEST_CASE("anchored function rejects inconsistent anchors") {
    CHECK_THROWS_AS(AnchoredLipschitzFn({{0.0}, {0.1}}, {0.0, 1.0}, 1.0), InconsistentConstraints);
    CHECK_THROWS_AS(AnchoredLipschitzFn({{0.2, 0.2}, {0.2, 0.2}}, {0.1, 0.9}, 5.0),
                    InconsistentConstraints);
}

TEST_CASE("constrained extension: no anchors gives the constant 1") {
    auto cd = [](std::span<const Real> x) { return std::abs(x[0] - 0.4); };
    const auto g = mcshane_extend_constrained({}, {}, 2.0, cd, 1.0);
    const Point at{0.4};
    CHECK(g(at) == 1.0);
    const Point near{0.9};
    CHECK(g(near) == 1.0);  // clamped 1 + L*d
}

TEST_CASE("constrained extension: anchored box center against a unit shell") {
    // anchor at the center with value 0; constraint exactly 1/L beyond the box
    const Real L = 5.0;
    auto cd = [L](std::span<const Real> x) {
        return std::abs(x[0] - (0.75 + 1.0 / L));  // box [0.25, 0.75] plus the shell
    };
    const auto g = mcshane_extend_constrained({{0.5, 0.5}}, {0.0}, L,
                                              [cd](std::span<const Real> x) { return cd(x); }, 1.0);
    const Point center{0.5, 0.5};
    CHECK(g(center) == 0.0);
    const Point wall{0.75 + 1.0 / L, 0.5};
    CHECK(g(wall) == 1.0);
}

TEST_CASE("constrained extension: interpolates and stays Lipschitz") {
    auto cd = [](std::span<const Real> x) { return std::abs(x[0] - 0.9); };
    const auto g = mcshane_extend_constrained({{0.5}}, {0.4}, 2.0, cd, 1.0);
    const Point wall{0.9};
    CHECK(g(wall) == 1.0);
    const Point anchor{0.5};
    CHECK(g(anchor) == 0.4);
    const Real viol = lipschitz_audit([&](std::span<const Real> x) { return g(x); }, 2.0,
                                      Box::unit(1), 1000, 99);
    CHECK(viol <= 1e-9);
}

TEST_CASE("constrained extension rejects anchors that contradict the constraint") {
    auto cd = [](std::span<const Real> x) { return std::abs(x[0] - 0.55); };
    CHECK_THROWS_AS(mcshane_extend_constrained({{0.5}}, {0.0}, 2.0, cd, 1.0),
                    InconsistentConstraints);
}

TEST_CASE("lipschitz_audit: constants, exact slopes, violators") {
    const auto constant = [](std::span<const Real>) { return 0.5; };
    CHECK(lipschitz_audit(constant, 1.0, Box::unit(2), 500, 1) <= 0.0);

    const auto linear = [](std::span<const Real> x) { return x[0]; };
    CHECK(lipschitz_audit(linear, 1.0, Box::unit(1), 1000, 2) <= 1e-9);

    const auto steep = [](std::span<const Real> x) { return 2.0 * x[0]; };
    CHECK(lipschitz_audit(steep, 1.0, Box::unit(1), 10000, 3) > 0.0);
}

TEST_CASE("lipschitz_audit is deterministic in the seed") {
    const auto fn = [](std::span<const Real> x) { return 0.5 * x[0]; };
    const Real a = lipschitz_audit(fn, 1.0, Box::unit(1), 1000, 42);
    const Real b = lipschitz_audit(fn, 1.0, Box::unit(1), 1000, 42);
    CHECK(a == b);
}
