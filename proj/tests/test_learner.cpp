#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include <json.hpp>

#include "loclearn/estimation.hpp"
#include "loclearn/learner.hpp"

using namespace loclearn;

namespace {

UnlabeledPool pool_from_rows(const std::vector<Point>& rows, std::size_t dims) {
    UnlabeledPool pool;
    pool.points = SoaPoints::from_rows(rows, dims);
    pool.sampler_id = "test";
    return pool;
}

UnlabeledPool uniform_pool(std::size_t dims, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Point> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) rows.push_back(rng.uniform_point(dims));
    UnlabeledPool pool = pool_from_rows(rows, dims);
    pool.provenance_seed = seed;
    return pool;
}

LabelSource constant_source(Real c) {
    return [c](std::size_t, std::span<const Real>) { return c; };
}

LabelSource gt_source(std::shared_ptr<const AnchoredLipschitzFn> gt) {
    return [gt](std::size_t, std::span<const Real> x) { return gt->evaluate(x); };
}

}  // namespace

TEST_CASE("new_session: empty pool is valid and unlabeled") {
    Partition p = Partition::build(10.0, 0.5, 1, {0.2}, PartitionScheme::kOneDim);
    QuerySession s = new_session(std::move(p), UnlabeledPool{}, constant_source(0.3), 10);
    CHECK(s.budget_report().distinct_labels == 0);
    CHECK(s.query_1d(0.35) == 0.5);  // every cell resolves through the empty-anchor path
}

TEST_CASE("new_session: buckets cover the pool and dimensions must match") {
    Partition p = Partition::preprocess(20.0, 0.5, 1, 3);
    QuerySession s = new_session(p, uniform_pool(1, 1000, 5), constant_source(0.5), 50);
    std::size_t total = 0;
    for (std::size_t k = 0; k < p.intervals(0).size(); ++k) {
        CellId cell{{static_cast<std::uint32_t>(k)},
                    p.intervals(0)[k].long_slot ? CellKind::kLongBox : CellKind::kShortBox};
        total += s.bucket_size(cell);
    }
    CHECK(total == 1000);
    CHECK_THROWS_AS(new_session(p, uniform_pool(2, 10, 5), constant_source(0.5), 50),
                    DimensionMismatch);
}

TEST_CASE("sample cap keeps the first points in pool order") {
    Partition p = Partition::build(10.0, 0.5, 1, {0.2}, PartitionScheme::kOneDim);
    // ten points in the long interval [0.3, 0.5]
    std::vector<Point> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({0.31 + 0.018 * i});
    // labels: index/10, so the fitted values reveal which points were used
    LabelSource by_index = [](std::size_t idx, std::span<const Real>) {
        return static_cast<Real>(idx) / 10.0;
    };
    QuerySession s = new_session(p, pool_from_rows(rows, 1), by_index, 3);
    const Point probe{0.35};
    const CellId cell = s.partition().locate(probe);
    auto fit = s.cell_fit(cell);
    REQUIRE(fit->anchor_count() == 3);
    CHECK(fit->anchors().coord(0, 0) == doctest::Approx(0.31));
    CHECK(fit->anchors().coord(0, 2) == doctest::Approx(0.31 + 0.036));
    CHECK(s.budget_report().distinct_labels == 3);
}

TEST_CASE("query_1d: constant labels give constant answers everywhere") {
    Partition p = Partition::preprocess(25.0, 0.25, 1, 11);
    QuerySession s = new_session(p, uniform_pool(1, 2000, 7), constant_source(0.37), 200);
    Rng rng(9);
    for (int t = 0; t < 200; ++t) {
        const Real x = rng.next_double();
        CHECK(s.query_1d(x) == doctest::Approx(0.37).epsilon(1e-12));
    }
}

TEST_CASE("query_1d: repeat queries hit the caches") {
    Partition p = Partition::preprocess(20.0, 0.5, 1, 4);
    QuerySession s = new_session(p, uniform_pool(1, 500, 6), constant_source(0.8), 100);
    const Real first = s.query_1d(0.41);
    const std::size_t labels_after_first = s.budget_report().distinct_labels;
    const Real second = s.query_1d(0.41);
    CHECK(first == second);
    CHECK(s.budget_report().distinct_labels == labels_after_first);
}

TEST_CASE("query_1d: short interval interpolates its neighbor boundary values") {
    Partition p = Partition::build(10.0, 0.5, 1, {0.2}, PartitionScheme::kOneDim);
    auto gt = std::make_shared<const AnchoredLipschitzFn>(
        AnchoredLipschitzFn({{0.0}, {1.0}}, {0.1, 0.9}, 1.0));
    QuerySession s = new_session(p, uniform_pool(1, 3000, 8), gt_source(gt), 500);
    // short interval [0.5, 0.6]
    const Real v_lo = s.cell_fit(CellId{{2}, CellKind::kLongBox})->evaluate(Point{0.5});
    const Real v_hi = s.cell_fit(CellId{{4}, CellKind::kLongBox})->evaluate(Point{0.6});
    CHECK(s.query_1d(0.55) == doctest::Approx(0.5 * (v_lo + v_hi)).epsilon(1e-12));
    CHECK(s.query_1d(0.5) == doctest::Approx(v_lo).epsilon(1e-12));
}

TEST_CASE("query_1d budget: long fetches one bucket, short fetches two") {
    Partition p = Partition::build(10.0, 0.5, 1, {0.2}, PartitionScheme::kOneDim);
    std::vector<Point> rows;
    for (int i = 0; i < 7; ++i) rows.push_back({0.32 + 0.02 * i});  // long [0.3, 0.5]
    for (int i = 0; i < 5; ++i) rows.push_back({0.62 + 0.03 * i});  // long [0.6, 0.8]
    {
        QuerySession s = new_session(p, pool_from_rows(rows, 1), constant_source(0.2), 100);
        CHECK(s.budget_report().distinct_labels == 0);
        s.query_1d(0.45);
        CHECK(s.budget_report().distinct_labels == 7);
    }
    {
        QuerySession s = new_session(p, pool_from_rows(rows, 1), constant_source(0.2), 100);
        s.query_1d(0.55);  // short between the two stocked long intervals
        CHECK(s.budget_report().distinct_labels == 12);
    }
    {
        QuerySession s = new_session(p, pool_from_rows(rows, 1), constant_source(0.2), 4);
        s.query_1d(0.55);  // caps apply per neighbor
        CHECK(s.budget_report().distinct_labels == 8);
    }
}

TEST_CASE("per-query log records which labels a query pulled") {
    Partition p = Partition::build(10.0, 0.5, 1, {0.2}, PartitionScheme::kOneDim);
    std::vector<Point> rows;
    for (int i = 0; i < 5; ++i) rows.push_back({0.32 + 0.03 * i});
    QuerySession s = new_session(p, pool_from_rows(rows, 1), constant_source(0.2), 10);
    CHECK(s.per_query_log().empty());
    s.query_1d(0.4);
    auto log = s.per_query_log();
    REQUIRE(log.size() == 1);
    CHECK(log[0].query == Point{0.4});
    CHECK(log[0].fetched.size() == 5);
    s.query_1d(0.45);  // cache hit fetches nothing, so nothing is logged
    CHECK(s.per_query_log().size() == 1);
}

TEST_CASE("query_1d: empty neighboring long interval contributes 1/2") {
    Partition p = Partition::build(10.0, 0.5, 1, {0.2}, PartitionScheme::kOneDim);
    std::vector<Point> rows{{0.45}};  // only the long interval [0.3, 0.5] is stocked
    QuerySession s = new_session(p, pool_from_rows(rows, 1), constant_source(0.9), 10);
    // left boundary value: midpoint rule around the lone 0.9 anchor at distance 0.05
    // gives (clamp(0.9 + 0.5) + (0.9 - 0.5)) / 2 = 0.7; empty right neighbor gives 1/2
    CHECK(s.query_1d(0.5) == doctest::Approx(0.7));
    CHECK(s.query_1d(0.6) == doctest::Approx(0.5));
    CHECK(s.query_1d(0.55) == doctest::Approx(0.6));
    // inside the empty long interval itself
    CHECK(s.query_1d(0.65) == doctest::Approx(0.5));
}

TEST_CASE("query_dd: domain-edge slab with no long box answers 1") {
    // offset 0 in dimension 0: the slab [0, 2/L] has no left long box
    Partition p = Partition::build(40.0, 0.5, 2, {0.0, 0.1}, PartitionScheme::kMultiDim);
    QuerySession s = new_session(p, uniform_pool(2, 300, 3), constant_source(0.4), 50);
    const Point edge{0.01, 0.3};  // left half of the first slab
    CHECK(s.query_dd(edge) == 1.0);
}

TEST_CASE("query_dd: mid-hyperplane answers exactly 1, empty boxes answer 1") {
    Partition p = Partition::build(10.0, 0.5, 2, {0.1, 0.1}, PartitionScheme::kMultiDim);
    QuerySession s = new_session(p, uniform_pool(2, 400, 12), constant_source(0.2), 80);
    // short slab [0.7, 0.9] in dimension 0; its mid-hyperplane is x0 = 0.8
    const Point mid{0.8, 0.5};
    CHECK(s.query_dd(mid) == 1.0);
    // both owners' computed plane coordinates give exactly 1 as well
    const CellId left = p.locate(Point{0.5, 0.5});
    const CellId right = p.locate(Point{0.95, 0.5});
    const Point from_left{p.constraint_coordinate(left, 0, true), 0.5};
    const Point from_right{p.constraint_coordinate(right, 0, false), 0.5};
    CHECK(s.query_dd(from_left) == 1.0);
    CHECK(s.query_dd(from_right) == 1.0);

    QuerySession empty = new_session(p, UnlabeledPool{}, constant_source(0.2), 80);
    const Point inside{0.5, 0.5};
    CHECK(empty.query_dd(inside) == 1.0);
}

TEST_CASE("query_dd stays within [0,1] and is cache-consistent") {
    Partition p = Partition::preprocess(15.0, 0.5, 2, 21);
    auto gt = std::make_shared<const AnchoredLipschitzFn>(
        AnchoredLipschitzFn({{0.2, 0.2}, {0.8, 0.8}}, {0.2, 0.8}, 2.0));
    QuerySession s = new_session(p, uniform_pool(2, 2500, 31), gt_source(gt), 300);
    Rng rng(41);
    for (int t = 0; t < 300; ++t) {
        const Point x = rng.uniform_point(2);
        const Real v = s.query_dd(x);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(s.query_dd(x) == v);
    }
}

TEST_CASE("session answers do not depend on query order") {
    Partition p = Partition::preprocess(25.0, 0.25, 1, 17);
    auto gt = std::make_shared<const AnchoredLipschitzFn>(
        AnchoredLipschitzFn({{0.0}, {0.5}, {1.0}}, {0.3, 0.8, 0.4}, 2.0));
    std::vector<Point> queries;
    Rng rng(55);
    for (int t = 0; t < 120; ++t) queries.push_back(rng.uniform_point(1));

    QuerySession forward = new_session(p, uniform_pool(1, 1500, 66), gt_source(gt), 150);
    std::vector<Real> a;
    for (const auto& q : queries) a.push_back(forward.query(q));

    QuerySession backward = new_session(p, uniform_pool(1, 1500, 66), gt_source(gt), 150);
    std::vector<Real> b(queries.size());
    for (std::size_t i = queries.size(); i-- > 0;) b[i] = backward.query(queries[i]);

    CHECK(a == b);
    CHECK(forward.budget_report().distinct_labels == backward.budget_report().distinct_labels);
}

TEST_CASE("checkpoint restore answers bit-exactly, including fresh fits") {
    const auto dist = SyntheticDistribution::uniform_noise(1, 0.5, 1.0);
    Constants constants;
    constants.pool_size = 0.05;
    QuerySession original = make_synthetic_session(30.0, 0.25, 1, dist, 404, constants);
    original.query_1d(0.1);
    original.query_1d(0.9);  // leave most cells unfitted
    const nlohmann::json snapshot = original.checkpoint();
    const auto text = snapshot.dump();

    auto source = synthetic_label_source(dist, 404);
    QuerySession a = QuerySession::restore(nlohmann::json::parse(text), source);
    QuerySession b = QuerySession::restore(nlohmann::json::parse(text), source);
    Rng rng(3);
    for (int t = 0; t < 400; ++t) {
        const Real x = rng.next_double();
        const Real va = a.query_1d(x);
        CHECK(va == b.query_1d(x));
        CHECK(va == original.query_1d(x));
    }
    CHECK(a.budget_report().distinct_labels == b.budget_report().distinct_labels);
}

TEST_CASE("concurrent queries agree with serial answers") {
    const auto dist = SyntheticDistribution::uniform_noise(1, 0.5, 1.0);
    Constants constants;
    constants.pool_size = 0.05;
    std::vector<Point> queries;
    Rng rng(8);
    for (int t = 0; t < 256; ++t) queries.push_back(rng.uniform_point(1));

    QuerySession serial = make_synthetic_session(30.0, 0.25, 1, dist, 9001, constants);
    std::vector<Real> expected;
    for (const auto& q : queries) expected.push_back(serial.query(q));

    QuerySession shared = make_synthetic_session(30.0, 0.25, 1, dist, 9001, constants);
    std::vector<Real> got(queries.size());
    std::vector<std::thread> threads;
    for (int w = 0; w < 4; ++w) {
        threads.emplace_back([&, w]() {
            for (std::size_t i = w; i < queries.size(); i += 4) got[i] = shared.query(queries[i]);
        });
    }
    for (auto& t : threads) t.join();
    CHECK(got == expected);
    CHECK(shared.budget_report().distinct_labels == serial.budget_report().distinct_labels);
}

TEST_CASE("multi-dim queries fetch at most one capped bucket each") {
    const auto dist = SyntheticDistribution::uniform_noise(2, 0.5, 1.0);
    Constants constants;
    constants.pool_size = 0.01;
    constants.sample_cap = 0.02;
    QuerySession s = make_synthetic_session(12.0, 0.5, 2, dist, 3131, constants);
    Rng rng(14);
    for (int t = 0; t < 150; ++t) s.query_dd(rng.uniform_point(2));
    for (const auto& entry : s.per_query_log())
        CHECK(entry.fetched.size() <= s.sample_cap());
}

TEST_CASE("1d continuity across every interval boundary") {
    const auto dist = SyntheticDistribution::uniform_noise(1, 0.5, 1.0);
    Constants constants;
    constants.pool_size = 0.1;
    QuerySession s = make_synthetic_session(25.0, 0.25, 1, dist, 2024, constants);
    const Real h = 1e-6;
    for (const auto& iv : s.partition().intervals(0)) {
        const Real b = iv.hi;
        if (b >= 1.0) break;
        const Real gap = std::abs(s.query_1d(b - h) - s.query_1d(b + h));
        CHECK(gap <= 25.0 * 2 * h + 1e-6);
    }
}
