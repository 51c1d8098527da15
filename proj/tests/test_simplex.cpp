#include <doctest.h>

#include <cmath>
#include <limits>

#include "loclearn/rng.hpp"
#include "loclearn/simplex.hpp"

using namespace loclearn;

namespace {

// reference for 2-variable LPs: enumerate all vertices of the feasible region
// (constraint/constraint and constraint/axis intersections plus the origin)
double two_var_reference(const std::vector<std::vector<Real>>& rows, const std::vector<Real>& rhs,
                         const std::vector<Real>& cost) {
    std::vector<std::pair<Real, Real>> candidates{{0.0, 0.0}};
    const std::size_t m = rows.size();
    auto add_if_valid = [&](Real x, Real y) {
        if (std::isfinite(x) && std::isfinite(y)) candidates.push_back({x, y});
    };
    for (std::size_t i = 0; i < m; ++i) {
        // against the axes
        if (rows[i][0] != 0.0) add_if_valid(rhs[i] / rows[i][0], 0.0);
        if (rows[i][1] != 0.0) add_if_valid(0.0, rhs[i] / rows[i][1]);
        for (std::size_t j = i + 1; j < m; ++j) {
            const Real det = rows[i][0] * rows[j][1] - rows[i][1] * rows[j][0];
            if (std::abs(det) < 1e-12) continue;
            add_if_valid((rhs[i] * rows[j][1] - rows[i][1] * rhs[j]) / det,
                         (rows[i][0] * rhs[j] - rhs[i] * rows[j][0]) / det);
        }
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [x, y] : candidates) {
        if (x < -1e-9 || y < -1e-9) continue;
        bool ok = true;
        for (std::size_t i = 0; i < m && ok; ++i)
            ok = rows[i][0] * x + rows[i][1] * y <= rhs[i] + 1e-9;
        if (ok) best = std::min(best, cost[0] * x + cost[1] * y);
    }
    return best;
}

}  // namespace

TEST_CASE("simplex solves a textbook instance") {
    // max x + y over x + 2y <= 4, 3x + y <= 6, i.e. min -(x+y); optimum at (1.6, 1.2)
    const LpResult r = solve_lp({{1, 2}, {3, 1}}, {4, 6}, {-1, -1});
    REQUIRE(r.status == LpResult::Status::kOptimal);
    CHECK(r.objective == doctest::Approx(-2.8));
    CHECK(r.x[0] == doctest::Approx(1.6));
    CHECK(r.x[1] == doctest::Approx(1.2));
}

TEST_CASE("simplex handles negative rhs through phase one") {
    // min x + y  s.t. -x <= -2 (x >= 2), y - x <= -1 (y <= x - 1, so y >= 0 binds)
    const LpResult r = solve_lp({{-1, 0}, {-1, 1}}, {-2, -1}, {1, 1});
    REQUIRE(r.status == LpResult::Status::kOptimal);
    CHECK(r.x[0] == doctest::Approx(2.0));
    CHECK(r.x[1] == doctest::Approx(0.0));
    CHECK(r.objective == doctest::Approx(2.0));
}

TEST_CASE("simplex reports infeasible systems") {
    // x <= 1 and -x <= -3 cannot both hold
    const LpResult r = solve_lp({{1}, {-1}}, {1, -3}, {1});
    CHECK(r.status == LpResult::Status::kInfeasible);
}

TEST_CASE("simplex reports unbounded directions") {
    // min -x with only x - y <= 1: grow x and y together forever
    const LpResult r = solve_lp({{1, -1}}, {1}, {-1, 0});
    CHECK(r.status == LpResult::Status::kUnbounded);
}

TEST_CASE("simplex handles a degenerate tie") {
    const LpResult r = solve_lp({{1, 1}, {1, 1}, {1, 0}}, {1, 1, 1}, {-1, -1});
    REQUIRE(r.status == LpResult::Status::kOptimal);
    CHECK(r.objective == doctest::Approx(-1.0));
}

TEST_CASE("simplex agrees with vertex enumeration on random 2-variable programs") {
    Rng rng(1234);
    int solved = 0;
    for (int t = 0; t < 120; ++t) {
        const std::size_t m = 2 + rng.next_below(5);
        std::vector<std::vector<Real>> rows(m, std::vector<Real>(2));
        std::vector<Real> rhs(m);
        for (std::size_t i = 0; i < m; ++i) {
            rows[i][0] = 2.0 * rng.next_double() - 1.0;
            rows[i][1] = 2.0 * rng.next_double() - 1.0;
            rhs[i] = 2.0 * rng.next_double() - 0.5;  // sometimes negative
        }
        // cap the region so the instance is never unbounded
        rows.push_back({1.0, 0.0});
        rhs.push_back(10.0);
        rows.push_back({0.0, 1.0});
        rhs.push_back(10.0);
        const std::vector<Real> cost{2.0 * rng.next_double() - 1.0,
                                     2.0 * rng.next_double() - 1.0};
        const double reference = two_var_reference(rows, rhs, cost);
        const LpResult r = solve_lp(rows, rhs, cost);
        if (!std::isfinite(reference)) {
            CHECK(r.status == LpResult::Status::kInfeasible);
            continue;
        }
        REQUIRE(r.status == LpResult::Status::kOptimal);
        CHECK(r.objective == doctest::Approx(reference).epsilon(1e-7).scale(1.0));
        ++solved;
    }
    CHECK(solved > 60);  // most random instances are feasible
}
