#include <doctest.h>

#include <cmath>

#include "gesturekit/heatmap.hpp"

using namespace gesturekit;

TEST_CASE("point-segment distance cases") {
    const Point2 a(0.0, 0.0), b(10.0, 0.0);
    SUBCASE("endpoint") {
        const auto r = point_segment_distance(a, a, b);
        CHECK(r.distance == 0.0);
        CHECK(r.t == 0.0);
    }
    SUBCASE("perpendicular drop") {
        const auto r = point_segment_distance(Point2(5.0, 2.0), a, b);
        CHECK(r.t == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(r.distance == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("beyond the far endpoint") {
        const auto r = point_segment_distance(Point2(12.0, 0.0), a, b);
        CHECK(r.t == doctest::Approx(1.2).epsilon(1e-15));
        CHECK(r.distance == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("before the near endpoint") {
        const auto r = point_segment_distance(Point2(-3.0, 4.0), a, b);
        CHECK(r.t < 0.0);
        CHECK(r.distance == doctest::Approx(5.0).epsilon(1e-15));
    }
    SUBCASE("coincident endpoints degrade to point distance") {
        const auto r = point_segment_distance(Point2(3.0, 4.0), a, a);
        CHECK(r.distance == doctest::Approx(5.0).epsilon(1e-15));
        CHECK(r.t == 0.0);
    }
}

TEST_CASE("edge map values at calibrated distances") {
    const Point2 ki(2.0, 10.0), kj(20.0, 10.0);
    const double sigma = 3.0;
    const auto map = edge_map(ki, kj, sigma, 32, 32);

    SUBCASE("pixels on the segment are exactly 1") {
        for (int x = 2; x <= 20; ++x) CHECK(map.at(10, x) == 1.0);
    }
    SUBCASE("distance sigma gives 1/e within 1e-12") {
        CHECK(map.at(13, 5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    }
    SUBCASE("distance 2 sigma gives e^-4 within 1e-12") {
        CHECK(map.at(16, 5) == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));
    }
    SUBCASE("strictly decreasing in distance and bounded in (0, 1]") {
        CHECK(map.at(11, 5) > map.at(12, 5));
        CHECK(map.at(12, 5) > map.at(13, 5));
        for (double v : map.values) {
            CHECK(v > 0.0);
            CHECK(v <= 1.0);
        }
    }
    SUBCASE("sigma must be positive") {
        CHECK_THROWS_AS(edge_map(ki, kj, 0.0, 8, 8), ValidationError);
    }
}

TEST_CASE("sigma monotonicity: thicker edges never lose mass") {
    const Point2 ki(3.0, 3.0), kj(25.0, 17.0);
    const auto thin = edge_map(ki, kj, 2.0, 32, 32);
    const auto thick = edge_map(ki, kj, 4.0, 32, 32);
    for (std::size_t i = 0; i < thin.values.size(); ++i) {
        CHECK(thick.values[i] >= thin.values[i]);
    }
}

TEST_CASE("aggregate_max semantics") {
    const auto a = edge_map(Point2(2, 2), Point2(20, 2), 3.0, 24, 24);
    const auto b = edge_map(Point2(2, 20), Point2(20, 20), 3.0, 24, 24);

    SUBCASE("single map aggregates to itself") {
        const auto out = aggregate_max({a});
        CHECK(out.values == a.values);
    }
    SUBCASE("max with zeros returns the map") {
        HeatmapGrid zeros;
        zeros.height = 24;
        zeros.width = 24;
        zeros.values.assign(24 * 24, 0.0);
        const auto out = aggregate_max({a, zeros});
        CHECK(out.values == a.values);
    }
    SUBCASE("per-pixel loop oracle, dominance, idempotence, commutativity") {
        const auto out = aggregate_max({a, b});
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            CHECK(out.values[i] == std::max(a.values[i], b.values[i]));
            CHECK(out.values[i] >= a.values[i]);
            CHECK(out.values[i] >= b.values[i]);
        }
        CHECK(aggregate_max({out, out}).values == out.values);
        CHECK(aggregate_max({b, a}).values == out.values);
    }
    SUBCASE("empty list errors") {
        CHECK_THROWS_AS(aggregate_max({}), ValidationError);
    }
}

TEST_CASE("render_skeleton_heatmaps") {
    KeypointFrame frame(4);
    frame[0] = Point2(0.0, 128.0);
    frame[1] = Point2(255.0, 128.0);
    frame[2] = Point2(64.0, 32.0);
    frame[3] = Point2(64.0, 200.0);
    EdgeSet edges{{{0, 1}, {2, 3}}};
    HeatmapConfig config;

    SUBCASE("default resolutions 32, 64, 128") {
        const auto maps = render_skeleton_heatmaps(frame, edges, config, 256.0, 256.0);
        REQUIRE(maps.size() == 3);
        CHECK(maps[0].height == 32);
        CHECK(maps[1].height == 64);
        CHECK(maps[2].height == 128);
        for (const auto& map : maps) CHECK_NOTHROW(map.validate());
    }
    SUBCASE("horizontal edge pins its row to 1 within discretization") {
        const auto maps = render_skeleton_heatmaps(frame, EdgeSet{{{0, 1}}}, config, 256.0, 256.0);
        // edge 0-1 runs along y = 128 px -> row 16 at 32x32
        const auto& map = maps.front();
        for (int x = 0; x < 32; ++x) CHECK(map.at(16, x) == 1.0);
    }
    SUBCASE("empty edge set errors") {
        CHECK_THROWS_AS(render_skeleton_heatmaps(frame, EdgeSet{}, config, 256.0, 256.0),
                        ValidationError);
    }
    SUBCASE("edge index out of range errors") {
        CHECK_THROWS_AS(render_skeleton_heatmaps(frame, EdgeSet{{{0, 9}}}, config, 256.0, 256.0),
                        ValidationError);
    }
    SUBCASE("explicit sigma overrides the per-resolution default") {
        config.sigma = 3.0;
        CHECK(config.sigma_for(32, 32) == 3.0);
        CHECK(config.sigma_for(128, 128) == 3.0);
        HeatmapConfig automatic;
        CHECK(automatic.sigma_for(32, 32) == doctest::Approx(1.6));
        CHECK(automatic.sigma_for(128, 128) == doctest::Approx(6.4));
    }
}

TEST_CASE("reflection symmetry across the vertical canvas axis") {
    Rng rng(83);
    const int size = 48;
    const double canvas = 48.0;
    KeypointFrame frame(6);
    for (auto& p : frame) p = Point2(rng.uniform(4.0, 44.0), rng.uniform(4.0, 44.0));
    EdgeSet edges{{{0, 1}, {2, 3}, {4, 5}, {1, 2}}};
    HeatmapConfig config;
    config.sigma = 2.5;
    config.resolutions = {{size, size}};

    KeypointFrame mirrored = frame;
    // reflect x across the pixel-center axis so pixel x maps to size-1-x
    for (auto& p : mirrored) p.x() = (canvas - 1.0) - p.x();

    const auto original = render_skeleton_heatmaps(frame, edges, config, canvas, canvas).front();
    const auto reflected = render_skeleton_heatmaps(mirrored, edges, config, canvas, canvas).front();
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            CHECK(reflected.at(y, size - 1 - x) == doctest::Approx(original.at(y, x)).epsilon(1e-12));
        }
    }
}

TEST_CASE("zero-length edges rasterize as point gaussians") {
    KeypointFrame frame(2);
    frame[0] = Point2(8.0, 8.0);
    frame[1] = Point2(8.0, 8.0);
    HeatmapConfig config;
    config.sigma = 2.0;
    config.resolutions = {{16, 16}};
    const auto maps = render_skeleton_heatmaps(frame, EdgeSet{{{0, 1}}}, config, 16.0, 16.0);
    const auto& map = maps.front();
    CHECK(map.at(8, 8) == 1.0);
    CHECK(map.at(8, 10) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}
