#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "test_support.hpp"
#include "trueknn/oracle.hpp"
#include "trueknn/search.hpp"

using namespace trueknn;
using trueknn::test::from_points;
using trueknn::test::random_set;

namespace {

std::vector<NeighborHeap> heaps_for(std::size_t n, std::size_t k) {
    std::vector<NeighborHeap> heaps;
    for (std::uint32_t q = 0; q < n; ++q) heaps.emplace_back(k, q);
    return heaps;
}

std::vector<std::uint32_t> all_queries(std::size_t n) {
    std::vector<std::uint32_t> q(n);
    std::iota(q.begin(), q.end(), 0u);
    return q;
}

void require_matches_oracle(const KnnResult& got, const oracle::ExactKnn& want) {
    const auto cmp = oracle::compare(got.indices, got.distances, want, 1e-9);
    INFO(cmp.first_mismatch);
    CHECK(cmp.ok());
}

std::size_t round_bound(double max_dist, double start, double growth) {
    // Smallest j with start * growth^j >= max_dist, computed by the same
    // repeated multiplication the search uses.
    std::size_t j = 0;
    for (double r = start; r < max_dist; r *= growth) ++j;
    return j + 1;
}

}  // namespace

TEST_CASE("fixed_radius_knns: two points at distance 1") {
    const PointSet pts = from_points({{0, 0, 0}, {1, 0, 0}});
    const auto queries = all_queries(2);
    {
        auto heaps = heaps_for(2, 1);
        const Bvh bvh = Bvh::build(pts.points(), 0.5);
        fixed_radius_knns(pts, queries, heaps, bvh);
        CHECK(heaps[0].size() == 0);
        CHECK(heaps[1].size() == 0);
    }
    {
        auto heaps = heaps_for(2, 1);
        const Bvh bvh = Bvh::build(pts.points(), 1.0);
        fixed_radius_knns(pts, queries, heaps, bvh);
        REQUIRE(heaps[0].size() == 1);
        REQUIRE(heaps[1].size() == 1);
        CHECK(heaps[0].sorted()[0] == Neighbor{1.0, 1});
        CHECK(heaps[1].sorted()[0] == Neighbor{1.0, 0});
    }
}

TEST_CASE("fixed_radius_knns: 500 points, r = 0.2, k = 5 matches k-nearest-within-r scan") {
    const PointSet pts = random_set(500, 51);
    const std::vector<Point3> raw(pts.points().begin(), pts.points().end());
    const Bvh bvh = Bvh::build(pts.points(), 0.2);
    auto heaps = heaps_for(500, 5);
    const auto counters = fixed_radius_knns(pts, all_queries(500), heaps, bvh);
    CHECK(counters.sphere_tests > 0);

    for (std::uint32_t q = 0; q < 500; ++q) {
        std::vector<Neighbor> want;
        for (std::uint32_t i : trueknn::test::scan_within(raw, raw[q], 0.2))
            if (i != q) want.push_back({squared_distance(raw[q], raw[i]), i});
        std::sort(want.begin(), want.end());
        want.resize(std::min<std::size_t>(want.size(), 5));
        CHECK(heaps[q].sorted() == want);
    }
}

TEST_CASE("fixed_radius_knns: thread count does not change heaps or counters") {
    const PointSet pts = random_set(3000, 52);
    const Bvh bvh = Bvh::build(pts.points(), 0.05);
    auto serial = heaps_for(3000, 4);
    auto parallel = heaps_for(3000, 4);
    const auto c1 = fixed_radius_knns(pts, all_queries(3000), serial, bvh, 1);
    const auto c4 = fixed_radius_knns(pts, all_queries(3000), parallel, bvh, 4);
    CHECK(c1 == c4);
    for (std::size_t q = 0; q < 3000; ++q) CHECK(serial[q].sorted() == parallel[q].sorted());
}

TEST_CASE("sample_indices draws distinct indices deterministically") {
    const auto a = sample_indices(1000, 100, 5);
    const auto b = sample_indices(1000, 100, 5);
    CHECK(a == b);
    CHECK(a.size() == 100);
    CHECK(std::set<std::uint32_t>(a.begin(), a.end()).size() == 100);
    CHECK(sample_indices(30, 100, 5).size() == 30);
    CHECK(sample_indices(1000, 100, 6) != a);
}

TEST_CASE("sample_start_radius") {
    SUBCASE("collinear grid returns its spacing") {
        std::vector<Point3> line;
        for (int i = 0; i < 200; ++i) line.push_back({0.5 * i, 0, 0});
        CHECK(sample_start_radius(from_points(line), 100, 4, 3) == 0.5);
    }
    SUBCASE("two points") {
        CHECK(sample_start_radius(from_points({{0, 0, 0}, {0, 3, 4}}), 100, 4, 1) == 5.0);
    }
    SUBCASE("clustered points: independent exhaustive recomputation") {
        const PointSet pts = gen_clustered(1000, {4, 0.02, 0.01}, 77);
        const std::uint64_t seed = 1234;

        // Re-derive the sample with an independent partial Fisher-Yates.
        std::vector<std::uint32_t> pool(1000);
        std::iota(pool.begin(), pool.end(), 0u);
        std::mt19937_64 rng(seed);
        for (std::size_t i = 0; i < 100; ++i)
            std::swap(pool[i], pool[std::uniform_int_distribution<std::size_t>(i, 999)(rng)]);

        double expected = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < 100; ++s) {
            std::vector<double> d;
            for (std::uint32_t i = 0; i < 1000; ++i)
                if (i != pool[s]) {
                    const Point3 a = pts[pool[s]], b = pts[i];
                    d.push_back(std::hypot(a.x - b.x, a.y - b.y, a.z - b.z));
                }
            std::sort(d.begin(), d.end());
            expected = std::min(expected, d[0]);  // min over the 4 nearest is the nearest
        }
        CHECK(sample_start_radius(pts, 100, 4, seed) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("duplicates fall back to the smallest positive distance") {
        std::vector<Point3> pts{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {2, 0, 0}, {2, 0, 0}, {2, 0, 0}};
        CHECK(sample_start_radius(from_points(pts), 100, 4, 0) == 2.0);
    }
    SUBCASE("all-duplicate samples are degenerate") {
        std::vector<Point3> pts(10, Point3{1, 1, 1});
        CHECK_THROWS_AS(sample_start_radius(from_points(pts), 100, 4, 0), DegenerateDataset);
    }
    SUBCASE("fewer than two points") {
        CHECK_THROWS_AS(sample_start_radius(from_points({{0, 0, 0}}), 100, 4, 0), InvalidInput);
    }
}

TEST_CASE("true_knn: two points terminate after ceil(log2(d/r0)) + 1 rounds") {
    const PointSet pts = from_points({{0, 0, 0}, {1, 0, 0}});
    for (double r0 : {0.1, 0.25, 0.3, 1.0, 4.0}) {
        SearchConfig cfg;
        cfg.k = 1;
        cfg.start_radius = r0;
        const KnnResult res = true_knn(pts, cfg);
        const auto expected_rounds = static_cast<std::size_t>(std::max(0.0, std::ceil(std::log2(1.0 / r0)))) + 1;
        CHECK(res.rounds.size() == expected_rounds);
        CHECK(res.indices[0] == std::vector<std::uint32_t>{1});
        CHECK(res.indices[1] == std::vector<std::uint32_t>{0});
        CHECK(res.distances[0][0] == 1.0);
        CHECK(res.resolved_count() == 2);
    }
}

TEST_CASE("true_knn: clustered points with outliers match the exact oracle") {
    const PointSet pts = gen_clustered(1000, {5, 0.01, 0.01}, 90);
    SearchConfig cfg;
    cfg.k = 5;
    cfg.rng_seed = 3;
    const KnnResult res = true_knn(pts, cfg);
    require_matches_oracle(res, oracle::exact_knn(pts, 5));
    CHECK(res.rounds.size() > 1);
    CHECK(res.rounds.back().active_queries > 0);
}

TEST_CASE("true_knn: duplicates are neighbors at distance zero") {
    std::vector<Point3> raw{{0, 0, 0}, {0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
    SearchConfig cfg;
    cfg.k = 1;
    const KnnResult res = true_knn(from_points(raw), cfg);
    CHECK(res.indices[0] == std::vector<std::uint32_t>{1});
    CHECK(res.distances[0][0] == 0.0);
    CHECK(res.indices[3] == std::vector<std::uint32_t>{2});
}

TEST_CASE("true_knn: errors") {
    const PointSet three = random_set(3, 1);
    SearchConfig cfg;
    cfg.k = 3;
    CHECK_THROWS_AS(true_knn(three, cfg), InvalidInput);
    cfg.k = 2;
    cfg.growth_factor = 1.0;
    CHECK_THROWS_AS(true_knn(three, cfg), InvalidArgument);
    cfg.growth_factor = 2.0;
    cfg.start_radius = -1.0;
    CHECK_THROWS_AS(true_knn(three, cfg), InvalidArgument);

    SearchConfig tiny;
    tiny.k = 1;
    tiny.start_radius = 1e-6;
    tiny.max_rounds = 3;
    try {
        true_knn(from_points({{0, 0, 0}, {1, 0, 0}}), tiny);
        FAIL("expected MaxRoundsExceeded");
    } catch (const MaxRoundsExceeded& e) {
        CHECK(e.rounds().size() == 3);
        CHECK(e.rounds().back().active_queries == 2);
    }
}

TEST_CASE("true_knn: refit and rebuild modes agree, threads agree") {
    const PointSet pts = gen_clustered(2000, {3, 0.02, 0.005}, 91);
    SearchConfig cfg;
    cfg.k = 6;
    const KnnResult refit = true_knn(pts, cfg);
    cfg.refit_mode = RefitMode::kRebuild;
    const KnnResult rebuild = true_knn(pts, cfg);
    cfg.threads = 3;
    const KnnResult threaded = true_knn(pts, cfg);
    CHECK(refit.indices == rebuild.indices);
    CHECK(refit.totals == rebuild.totals);
    CHECK(threaded.indices == refit.indices);
    CHECK(threaded.totals == refit.totals);
}

TEST_CASE("property: exactness, pruning, round bound and resolved-once") {
    std::mt19937_64 rng(92);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(20, 1500)(rng);
        const PointSet pts = trial % 2 ? random_set(n, rng()) : gen_clustered(n, {3, 0.02, 0.01}, rng());
        const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
        SearchConfig cfg;
        cfg.k = k;
        cfg.rng_seed = rng();

        std::vector<std::vector<std::uint32_t>> searched;
        cfg.on_round = [&](const SearchRound&, std::span<const std::uint32_t> q) {
            searched.emplace_back(q.begin(), q.end());
            std::sort(searched.back().begin(), searched.back().end());
        };
        const KnnResult res = true_knn(pts, cfg);
        const auto expected = oracle::exact_knn(pts, k);
        require_matches_oracle(res, expected);

        REQUIRE(searched.size() == res.rounds.size());
        std::size_t resolved = 0;
        for (std::size_t i = 0; i < res.rounds.size(); ++i) {
            const SearchRound& r = res.rounds[i];
            CHECK(r.active_queries > 0);
            CHECK(r.active_queries == searched[i].size());
            resolved += r.resolved_this_round;
            if (i > 0) {
                CHECK(r.active_queries <= res.rounds[i - 1].active_queries);
                CHECK(r.radius == res.rounds[i - 1].radius * 2.0);
                CHECK(std::includes(searched[i - 1].begin(), searched[i - 1].end(), searched[i].begin(),
                                    searched[i].end()));
                CHECK(searched[i - 1].size() - searched[i].size() == res.rounds[i - 1].resolved_this_round);
            }
        }
        CHECK(resolved == n);
        CHECK(res.rounds.size() <= round_bound(oracle::max_knn_distance(expected), res.start_radius, 2.0));
    }
}

TEST_CASE("true_knn_bounded") {
    const PointSet pts = gen_clustered(1000, {5, 0.01, 0.01}, 93);
    const auto expected = oracle::exact_knn(pts, 5);

    SUBCASE("cap below the start radius runs one round at the cap") {
        SearchConfig cfg;
        cfg.k = 5;
        cfg.start_radius = 0.05;
        cfg.radius_cap = 0.01;
        const KnnResult res = true_knn_bounded(pts, cfg);
        REQUIRE(res.rounds.size() == 1);
        CHECK(res.rounds[0].radius == 0.01);
        CHECK(res.final_radius == 0.01);
    }
    SUBCASE("a never-binding cap is identical to true_knn") {
        SearchConfig cfg;
        cfg.k = 5;
        const KnnResult plain = true_knn(pts, cfg);
        cfg.radius_cap = 1e12;
        const KnnResult capped = true_knn_bounded(pts, cfg);
        CHECK(capped.indices == plain.indices);
        CHECK(capped.distances == plain.distances);
        CHECK(capped.totals == plain.totals);
        CHECK(capped.rounds.size() == plain.rounds.size());
    }
    SUBCASE("99th-percentile cap resolves >= 99% exactly") {
        const double cap = oracle::percentile_knn_distance(expected, 99.0);
        SearchConfig cfg;
        cfg.k = 5;
        cfg.radius_cap = cap;
        const KnnResult res = true_knn_bounded(pts, cfg);
        CHECK(res.resolved_count() >= 990);
        CHECK(res.final_radius == cap);
        const auto cmp = oracle::compare(res.indices, res.distances, expected, 1e-9, &res.resolved);
        CHECK(cmp.ok());
        for (std::size_t q = 0; q < pts.size(); ++q)
            if (!res.resolved[q]) CHECK(res.indices[q].size() < 5);
    }
    SUBCASE("missing cap") {
        SearchConfig cfg;
        CHECK_THROWS_AS(true_knn_bounded(pts, cfg), InvalidArgument);
    }
}

TEST_CASE("baseline_fixed_radius") {
    SUBCASE("radius 0 on distinct points finds nothing") {
        const PointSet pts = random_set(200, 94);
        const KnnResult res = baseline_fixed_radius(pts, 3, 0.0);
        CHECK(res.resolved_count() == 0);
        for (const auto& l : res.indices) CHECK(l.empty());
        CHECK(res.rounds.size() == 1);
    }
    SUBCASE("radius = maxDist reproduces the oracle") {
        const PointSet pts = random_set(1000, 95);
        const auto expected = oracle::exact_knn(pts, 5);
        const KnnResult res = baseline_fixed_radius(pts, 5, oracle::max_knn_distance(expected));
        CHECK(res.resolved_count() == 1000);
        require_matches_oracle(res, expected);
    }
    SUBCASE("baseline at maxDist does more sphere tests than true_knn on outlier data") {
        const PointSet pts = gen_clustered(5000, {5, 0.01, 0.001}, 96);
        const double max_dist = oracle::max_knn_distance(pts, 5);
        SearchConfig cfg;
        cfg.k = 5;
        const KnnResult multi = true_knn(pts, cfg);
        const KnnResult base = baseline_fixed_radius(pts, 5, max_dist);
        CHECK(base.totals.sphere_tests >= multi.totals.sphere_tests);
    }
}
