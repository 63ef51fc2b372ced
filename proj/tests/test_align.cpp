#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gesturekit/align.hpp"

using namespace gesturekit;

namespace {

/// Term-by-term evaluation of the symmetric InfoNCE, no log-sum-exp tricks.
double infonce_oracle(const Matrix& S, double tau) {
    const int n = static_cast<int>(S.rows());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double row_den = 0.0;
        double col_den = 0.0;
        for (int j = 0; j < n; ++j) {
            row_den += std::exp(S(i, j) / tau);
            col_den += std::exp(S(j, i) / tau);
        }
        total += std::log(std::exp(S(i, i) / tau) / row_den);
        total += std::log(std::exp(S(i, i) / tau) / col_den);
    }
    return -total / (2.0 * n);
}

/// Sort-based recall oracle, ties broken toward lower column index.
double recall_oracle(const Matrix& S, int k) {
    const int n = static_cast<int>(S.rows());
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> row;
        for (int j = 0; j < n; ++j) row.emplace_back(S(i, j), j);
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (int r = 0; r < k; ++r) {
            if (row[r].second == i) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / n;
}

Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
    }
    return m;
}

SimilarityMatrix wrap(Matrix entries, double tau) {
    SimilarityMatrix S;
    S.entries = std::move(entries);
    S.temperature = tau;
    return S;
}

}  // namespace

TEST_CASE("embedding pooled equals row mean") {
    Rng rng(3);
    const auto e = EmbeddingSequence::from_rows(random_matrix(5, 4, rng));
    CHECK_NOTHROW(e.validate());
    EmbeddingSequence broken = e;
    broken.pooled(0) += 1.0;
    CHECK_THROWS_AS(broken.validate(), ValidationError);
}

TEST_CASE("cosine similarity closed cases") {
    SUBCASE("identical unit vectors give all ones") {
        Matrix rows(1, 2);
        rows << 1.0, 0.0;
        std::vector<EmbeddingSequence> items(3, EmbeddingSequence::from_rows(rows));
        const auto S = cosine_similarity_matrix(items, items);
        CHECK((S.entries.array() - 1.0).abs().maxCoeff() < 1e-15);
    }
    SUBCASE("orthonormal basis gives identity") {
        std::vector<EmbeddingSequence> items;
        for (int i = 0; i < 3; ++i) {
            Matrix rows = Matrix::Zero(1, 3);
            rows(0, i) = 1.0;
            items.push_back(EmbeddingSequence::from_rows(rows));
        }
        const auto S = cosine_similarity_matrix(items, items);
        CHECK((S.entries - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("hand-computed entry 1/sqrt(2)") {
        Matrix a(1, 2), b(1, 2);
        a << 1.0, 0.0;
        b << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
        const auto S = cosine_similarity_matrix({EmbeddingSequence::from_rows(a),
                                                 EmbeddingSequence::from_rows(a)},
                                                {EmbeddingSequence::from_rows(b),
                                                 EmbeddingSequence::from_rows(b)});
        CHECK(S.entries(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    }
    SUBCASE("zero-norm input names the index") {
        Matrix ok(1, 2), zero(1, 2);
        ok << 1.0, 0.0;
        zero << 0.0, 0.0;
        std::vector<EmbeddingSequence> a{EmbeddingSequence::from_rows(ok),
                                         EmbeddingSequence::from_rows(zero)};
        CHECK_THROWS_AS(cosine_similarity_matrix(a, a), ValidationError);
    }
}

TEST_CASE("infonce closed forms") {
    SUBCASE("all entries equal gives ln N for any constant and temperature") {
        for (double c : {0.0, 0.3, -2.0}) {
            for (double tau : {0.7, 1.0, 0.1}) {
                const auto S = wrap(Matrix::Constant(4, 4, c), tau);
                CHECK(infonce_loss(S) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
            }
        }
    }
    SUBCASE("identity at tau 1, N 2 gives ln(1 + 1/e)") {
        const auto S = wrap(Matrix::Identity(2, 2), 1.0);
        CHECK(infonce_loss(S) == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-14));
    }
}

TEST_CASE("infonce matches term-by-term oracle on random matrices") {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 5;
        Matrix entries = random_matrix(n, n, rng, 0.5).array().tanh();
        const double tau = 0.3 + rng.uniform();
        const auto S = wrap(entries, tau);
        CHECK(infonce_loss(S) == doctest::Approx(infonce_oracle(entries, tau)).epsilon(1e-12));
    }
}

TEST_CASE("infonce stays finite at extreme temperatures") {
    Rng rng(211);
    Matrix entries = random_matrix(6, 6, rng, 0.4).array().tanh();
    entries.diagonal().setConstant(0.9);
    const double loss = infonce_loss(wrap(entries, 1e-3));  // exponents ~ +-900
    CHECK(std::isfinite(loss));
    // dominant diagonal at near-zero temperature drives the loss to ~0
    CHECK(loss < 1e-6);
    const Matrix flipped = -entries;
    CHECK(std::isfinite(infonce_loss(wrap(flipped, 1e-3))));
}

TEST_CASE("infonce relabeling invariance and diagonal monotonicity") {
    Rng rng(13);
    Matrix entries = random_matrix(6, 6, rng, 0.4).array().tanh();
    const double base = infonce_loss(wrap(entries, 0.7));

    SUBCASE("joint row+column permutation preserves the loss") {
        auto perm = random_non_identity_permutation(6, rng);
        Matrix permuted(6, 6);
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) permuted(i, j) = entries(perm[i], perm[j]);
        }
        CHECK(infonce_loss(wrap(permuted, 0.7)) == doctest::Approx(base).epsilon(1e-12));
    }
    SUBCASE("raising one diagonal entry strictly lowers the loss") {
        Matrix bumped = entries;
        bumped(2, 2) += 0.05;
        CHECK(infonce_loss(wrap(bumped, 0.7)) < base);
    }
}

TEST_CASE("infonce extra negative columns enlarge row denominators only") {
    Rng rng(17);
    Matrix entries = random_matrix(4, 4, rng, 0.4).array().tanh();
    const Matrix extras = random_matrix(4, 3, rng, 0.4).array().tanh();
    const double with_extras = infonce_loss(wrap(entries, 0.7), extras);
    const double without = infonce_loss(wrap(entries, 0.7));
    CHECK(with_extras > without);  // more candidates can only shrink row softmax

    // oracle: append columns for the row term, keep the column term square
    const int n = 4;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double row_den = 0.0, col_den = 0.0;
        for (int j = 0; j < n; ++j) {
            row_den += std::exp(entries(i, j) / 0.7);
            col_den += std::exp(entries(j, i) / 0.7);
        }
        for (int j = 0; j < 3; ++j) row_den += std::exp(extras(i, j) / 0.7);
        total += 2.0 * entries(i, i) / 0.7 - std::log(row_den) - std::log(col_den);
    }
    CHECK(with_extras == doctest::Approx(-total / (2.0 * n)).epsilon(1e-12));
}

TEST_CASE("chronological negative block reordering") {
    TimedTranscript transcript;
    transcript.segments = {{"A", 0.0, 0.2}, {"B", 0.2, 0.4}, {"C", 0.4, 0.6}};
    FeatureSequence speech;
    speech.rows.resize(15, 1);  // 25 fps: 5 frames per segment
    for (int t = 0; t < 15; ++t) speech.rows(t, 0) = t;

    SUBCASE("permutation (2,0,1) orders blocks C,A,B") {
        const auto out = build_chronological_negative(speech, transcript, {2, 0, 1});
        REQUIRE(out.length() == 15);
        const std::vector<double> expected = {10, 11, 12, 13, 14, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
        for (int t = 0; t < 15; ++t) CHECK(out.rows(t, 0) == expected[t]);
    }
    SUBCASE("single segment errors") {
        TimedTranscript one;
        one.segments = {{"A", 0.0, 0.6}};
        CHECK_THROWS_AS(build_chronological_negative(speech, one, {0}), ValidationError);
    }
    SUBCASE("identity permutation errors") {
        CHECK_THROWS_AS(build_chronological_negative(speech, transcript, {0, 1, 2}),
                        ValidationError);
    }
    SUBCASE("swapping equal-content segments preserves the row multiset") {
        FeatureSequence flat;
        flat.rows = Matrix::Ones(10, 2);
        TimedTranscript two;
        two.segments = {{"x", 0.0, 0.2}, {"y", 0.2, 0.4}};
        const auto out = build_chronological_negative(flat, two, {1, 0});
        CHECK(out.length() == 10);
        CHECK((out.rows - flat.rows).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("chronological negative round-trip oracle on random transcripts") {
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const int segs = 2 + static_cast<int>(rng.below(4));
        const double fps = 25.0;
        TimedTranscript transcript;
        double t0 = rng.uniform(0.0, 0.3);
        for (int s = 0; s < segs; ++s) {
            const double len = 0.1 + rng.uniform(0.0, 0.4);
            transcript.segments.push_back({"w" + std::to_string(s), t0, t0 + len});
            t0 += len + rng.uniform(0.0, 0.2);  // may leave gap frames
        }
        const int T = static_cast<int>(std::ceil(t0 * fps)) + 3;
        FeatureSequence speech;
        speech.rows.resize(T, 2);
        for (int t = 0; t < T; ++t) {
            speech.rows(t, 0) = t;  // unique id per row
            speech.rows(t, 1) = rng.normal();
        }
        const auto perm = random_non_identity_permutation(segs, rng);
        const auto out = build_chronological_negative(speech, transcript, perm, fps);
        REQUIRE(out.length() == T);
        // multiset preserved: sorting the first column recovers 0..T-1
        std::vector<double> ids(T);
        for (int t = 0; t < T; ++t) ids[t] = out.rows(t, 0);
        std::sort(ids.begin(), ids.end());
        for (int t = 0; t < T; ++t) CHECK(ids[t] == t);
        // block contiguity: rows of one segment stay adjacent in order
        for (int s = 0; s < segs; ++s) {
            std::vector<int> positions;
            for (int t = 0; t < T; ++t) {
                const double orig = out.rows(t, 0);
                const double time = orig / fps;
                if (time >= transcript.segments[s].start - 1e-9 &&
                    time < transcript.segments[s].end - 1e-9) {
                    positions.push_back(t);
                }
            }
            for (std::size_t i = 1; i < positions.size(); ++i) {
                CHECK(positions[i] == positions[i - 1] + 1);
            }
        }
    }
}

TEST_CASE("retrieval recall closed cases and oracle") {
    SUBCASE("dominant diagonal gives R@1 = 1") {
        Matrix entries = Matrix::Constant(6, 6, 0.1);
        entries.diagonal().setConstant(0.9);
        const auto recall = retrieval_recall(wrap(entries, 0.7), {1});
        CHECK(recall[0] == 1.0);
    }
    SUBCASE("anti-diagonal dominance gives R@1 = 0 for even N") {
        Matrix entries = Matrix::Constant(4, 4, 0.1);
        for (int i = 0; i < 4; ++i) entries(i, 3 - i) = 0.9;
        const auto recall = retrieval_recall(wrap(entries, 0.7), {1});
        CHECK(recall[0] == 0.0);
    }
    SUBCASE("random 32x32 matches sort-based oracle exactly, monotone in k") {
        Rng rng(29);
        for (int trial = 0; trial < 10; ++trial) {
            Matrix entries = random_matrix(32, 32, rng, 0.4).array().tanh();
            const std::vector<int> ks = {1, 2, 3, 5, 10, 32};
            const auto recall = retrieval_recall(wrap(entries, 0.7), ks);
            for (std::size_t i = 0; i < ks.size(); ++i) {
                CHECK(recall[i] == recall_oracle(entries, ks[i]));
                if (i > 0) CHECK(recall[i] >= recall[i - 1]);
            }
            CHECK(recall.back() == 1.0);
        }
    }
    SUBCASE("empty ks errors") {
        CHECK_THROWS_AS(retrieval_recall(wrap(Matrix::Identity(3, 3), 0.7), {}), ValidationError);
    }
}

TEST_CASE("alignment batch validation") {
    AlignmentBatch batch;
    Matrix rows = Matrix::Ones(2, 3);
    batch.positives.push_back({FeatureSequence{rows, FeatureKind::Speech},
                               EmbeddingSequence::from_rows(rows)});
    ChronoNegative neg;
    neg.features = FeatureSequence{rows, FeatureKind::Speech};
    neg.source_index = 0;
    neg.permutation = {1, 0};
    batch.chrono_negatives.push_back(neg);
    CHECK_NOTHROW(batch.validate());

    batch.chrono_negatives[0].permutation = {0, 1};  // identity
    CHECK_THROWS_AS(batch.validate(), ValidationError);
    batch.chrono_negatives[0].permutation = {1, 0};
    batch.chrono_negatives[0].source_index = 5;
    CHECK_THROWS_AS(batch.validate(), ValidationError);
}

TEST_CASE("mean pool embed") {
    SUBCASE("identity projection of constant rows pools to the constant") {
        Matrix rows = Matrix::Constant(4, 3, 2.5);
        const auto e = mean_pool_embed({rows, FeatureKind::Speech}, Matrix::Identity(3, 3));
        CHECK((e.pooled.array() - 2.5).abs().maxCoeff() < 1e-15);
    }
    SUBCASE("zero projection pools to zero") {
        Matrix rows = Matrix::Random(4, 3);
        const auto e = mean_pool_embed({rows, FeatureKind::Speech}, Matrix::Zero(3, 2));
        CHECK(e.pooled.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("2x2 arithmetic mean") {
        Matrix rows(2, 2);
        rows << 1.0, 2.0, 3.0, 4.0;
        const auto e = mean_pool_embed({rows, FeatureKind::Speech}, Matrix::Identity(2, 2));
        CHECK(e.pooled(0) == doctest::Approx(2.0));
        CHECK(e.pooled(1) == doctest::Approx(3.0));
    }
    SUBCASE("dimension mismatch errors") {
        CHECK_THROWS_AS(mean_pool_embed({Matrix::Ones(2, 3), FeatureKind::Speech}, Matrix::Ones(4, 2)),
                        ValidationError);
    }
}
