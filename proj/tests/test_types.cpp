#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>

#include "gesturekit/types.hpp"

using namespace gesturekit;

namespace {

GestureSequence make_sequence(int frames, std::uint64_t seed = 1) {
    GestureSequence seq;
    seq.layout = KeypointLayout::standard();
    Rng rng(seed);
    seq.frames.resize(frames);
    for (int t = 0; t < frames; ++t) {
        seq.frames[t].resize(seq.layout.point_count());
        for (auto& p : seq.frames[t]) p = Point2(rng.uniform(0.0, 256.0), rng.uniform(0.0, 256.0));
    }
    return seq;
}

}  // namespace

TEST_CASE("standard layout is consistent") {
    const KeypointLayout layout = KeypointLayout::standard();
    CHECK(layout.face_count == 68);
    CHECK(layout.body_count == 48);
    CHECK(layout.face_flat_dim() == 136);
    CHECK(layout.body_flat_dim() == 96);
    CHECK_NOTHROW(layout.validate());
    CHECK(!layout.edges.empty());
}

TEST_CASE("shipped edge data file matches the built-in skeleton") {
    std::ifstream in(std::string(GK_DATA_DIR) + "/skeleton_edges_v1.json");
    REQUIRE(in.good());
    const nlohmann::json j = nlohmann::json::parse(in);
    CHECK(j.at("version").get<int>() == 1);
    CHECK(j.at("face_count").get<int>() == 68);
    CHECK(j.at("body_count").get<int>() == 48);
    const KeypointLayout layout = KeypointLayout::standard();
    const auto& edges = j.at("edges");
    REQUIRE(edges.size() == layout.edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
        CHECK(edges[i][0].get<int>() == layout.edges[i].a);
        CHECK(edges[i][1].get<int>() == layout.edges[i].b);
    }
}

TEST_CASE("layout rejects bad edges") {
    KeypointLayout layout = KeypointLayout::standard();
    layout.edges.push_back({0, 0});
    CHECK_THROWS_AS(layout.validate(), ValidationError);
    layout = KeypointLayout::standard();
    layout.edges.push_back({0, 500});
    CHECK_THROWS_AS(layout.validate(), ValidationError);
    layout = KeypointLayout::standard();
    layout.edges.push_back(layout.edges.front());
    CHECK_THROWS_AS(layout.validate(), ValidationError);
}

TEST_CASE("flatten shapes and interleaving") {
    GestureSequence seq = make_sequence(1);
    // point i at (i, 2i): row must read 0,0,1,2,2,4,...
    for (int i = 0; i < seq.layout.point_count(); ++i) {
        seq.frames[0][i] = Point2(i, 2.0 * i);
    }
    const auto [face, body] = flatten_frames(seq);
    CHECK(face.dim() == 136);
    CHECK(body.dim() == 96);
    CHECK(face.length() == 1);
    for (int i = 0; i < 68; ++i) {
        CHECK(face.rows(0, 2 * i) == static_cast<double>(i));
        CHECK(face.rows(0, 2 * i + 1) == 2.0 * i);
    }
    for (int i = 0; i < 48; ++i) {
        CHECK(body.rows(0, 2 * i) == 68.0 + i);
        CHECK(body.rows(0, 2 * i + 1) == 2.0 * (68 + i));
    }
}

TEST_CASE("all-zero frame flattens to zero rows") {
    GestureSequence seq = make_sequence(1);
    for (auto& p : seq.frames[0]) p = Point2(0.0, 0.0);
    const auto [face, body] = flatten_frames(seq);
    CHECK(face.rows.cwiseAbs().maxCoeff() == 0.0);
    CHECK(body.rows.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flatten round-trip is exact, plain and normalized") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const GestureSequence seq = make_sequence(3 + static_cast<int>(seed % 5), seed);
        for (bool normalize : {false, true}) {
            const auto [face, body] = flatten_frames(seq, normalize);
            const GestureSequence back = unflatten_frames(face, body, seq.layout, seq.fps,
                                                          seq.canvas_w, seq.canvas_h, normalize);
            REQUIRE(back.length() == seq.length());
            for (int t = 0; t < seq.length(); ++t) {
                for (int k = 0; k < seq.layout.point_count(); ++k) {
                    // power-of-two canvas keeps the normalized path bit-exact
                    CHECK(back.frames[t][k].x() == seq.frames[t][k].x());
                    CHECK(back.frames[t][k].y() == seq.frames[t][k].y());
                }
            }
        }
    }
}

TEST_CASE("unflatten rejects mismatched dims") {
    const GestureSequence seq = make_sequence(2);
    const auto [face, body] = flatten_frames(seq);
    CHECK_THROWS_AS(unflatten_frames(body, face, seq.layout, 25.0, 256, 256), ValidationError);
}

TEST_CASE("slice_windows counts and content") {
    SUBCASE("exact fit") {
        const auto windows = slice_windows(make_sequence(80), 80, 10);
        CHECK(windows.size() == 1);
    }
    SUBCASE("spec example: T=100, len=80, stride=10 gives 3 windows") {
        const GestureSequence seq = make_sequence(100);
        const auto windows = slice_windows(seq, 80, 10);
        REQUIRE(windows.size() == 3);
        for (int w = 0; w < 3; ++w) {
            CHECK(windows[w].length() == 80);
            for (int t = 0; t < 80; ++t) {
                CHECK(windows[w].frames[t][0] == seq.frames[w * 10 + t][0]);
            }
        }
    }
    SUBCASE("underflow gives no windows") {
        CHECK(slice_windows(make_sequence(79), 80, 10).empty());
    }
    SUBCASE("count formula over random shapes") {
        Rng rng(99);
        for (int trial = 0; trial < 50; ++trial) {
            const int T = 1 + static_cast<int>(rng.below(60));
            const int len = 1 + static_cast<int>(rng.below(40));
            const int stride = 1 + static_cast<int>(rng.below(10));
            const auto windows = slice_windows(make_sequence(T), len, stride);
            const int expected = T >= len ? (T - len) / stride + 1 : 0;
            CHECK(static_cast<int>(windows.size()) == expected);
        }
    }
    SUBCASE("invalid args") {
        CHECK_THROWS_AS(slice_windows(make_sequence(5), 0, 1), ValidationError);
        CHECK_THROWS_AS(slice_windows(make_sequence(5), 1, 0), ValidationError);
    }
}

TEST_CASE("sequence validation catches bad frames") {
    GestureSequence seq = make_sequence(2);
    seq.frames[1].pop_back();
    CHECK_THROWS_AS(seq.validate(), ValidationError);
    seq = make_sequence(2);
    seq.frames[0][3] = Point2(std::numeric_limits<double>::quiet_NaN(), 0.0);
    CHECK_THROWS_AS(seq.validate(), ValidationError);
    seq = make_sequence(2);
    seq.fps = 0.0;
    CHECK_THROWS_AS(seq.validate(), ValidationError);
    GestureSequence empty;
    CHECK_THROWS_AS(empty.validate(), ValidationError);
}

TEST_CASE("transcript invariants") {
    TimedTranscript good;
    good.segments = {{"a", 0.0, 1.0}, {"b", 1.0, 2.0}};
    CHECK_NOTHROW(good.validate());

    TimedTranscript reversed;
    reversed.segments = {{"a", 2.0, 1.0}};
    CHECK_THROWS_AS(reversed.validate(), ValidationError);

    TimedTranscript overlapping;
    overlapping.segments = {{"a", 0.0, 1.5}, {"b", 1.0, 2.0}};
    CHECK_THROWS_AS(overlapping.validate(), ValidationError);
}
