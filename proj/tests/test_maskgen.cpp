#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gesturekit/maskgen.hpp"

using namespace gesturekit;

namespace {

FeatureSequence dummy_conditioning(int length) {
    FeatureSequence f;
    f.rows = Matrix::Zero(length, 1);
    return f;
}

TokenSequence random_tokens(int length, int vocab, Rng& rng) {
    TokenSequence seq;
    seq.vocab = vocab;
    seq.tokens.resize(length);
    for (int t = 0; t < length; ++t) seq.tokens[t] = static_cast<int>(rng.below(vocab));
    return seq;
}

/// Reference schedule: floor cosine with explicit strict-decrease clamping.
std::vector<int> schedule_oracle(int length, int total) {
    std::vector<int> counts{length};
    for (int l = 1; l <= total; ++l) {
        int c;
        if (l == total || counts.back() == 0) {
            c = 0;
        } else {
            c = static_cast<int>(std::floor(length * std::cos(M_PI / 2.0 * l / total)));
            c = std::clamp(c, 0, counts.back() - 1);
        }
        counts.push_back(c);
    }
    return counts;
}

}  // namespace

TEST_CASE("cosine schedule endpoints and spec trace") {
    CHECK(cosine_mask_count(10, 0, 5) == 10);
    CHECK(cosine_mask_count(10, 5, 5) == 0);
    const int expected[] = {10, 9, 8, 5, 3, 0};
    for (int l = 0; l <= 5; ++l) CHECK(cosine_mask_count(10, l, 5) == expected[l]);
}

TEST_CASE("cosine schedule matches oracle and decreases strictly while positive") {
    for (int length = 1; length <= 64; ++length) {
        for (int total = 1; total <= 10; ++total) {
            const auto oracle = schedule_oracle(length, total);
            int prev = length;
            for (int l = 0; l <= total; ++l) {
                const int c = cosine_mask_count(length, l, total);
                CHECK(c == oracle[l]);
                if (l > 0 && prev > 0) CHECK(c < prev);
                prev = c;
            }
            CHECK(cosine_mask_count(length, total, total) == 0);
        }
    }
}

TEST_CASE("corruption degenerate policies") {
    Rng rng(5);
    const TokenSequence tokens = random_tokens(40, 16, rng);

    SUBCASE("all-mask policy at ratio 1 masks everything") {
        CorruptionPolicy policy{1.0, 0.0, 0.0, 1.0, 1.0};
        const auto result = corrupt_tokens(tokens, policy, 1);
        CHECK(static_cast<int>(result.mask_positions.size()) == 40);
        for (int t : result.corrupted.tokens) CHECK(t == tokens.sentinel());
    }
    SUBCASE("ratio 0 is a no-op") {
        CorruptionPolicy policy{0.8, 0.1, 0.1, 0.0, 0.0};
        const auto result = corrupt_tokens(tokens, policy, 1);
        CHECK(result.mask_positions.empty());
        CHECK(result.corrupted.tokens == tokens.tokens);
    }
    SUBCASE("deterministic per seed") {
        CorruptionPolicy policy;
        const auto a = corrupt_tokens(tokens, policy, 42);
        const auto b = corrupt_tokens(tokens, policy, 42);
        CHECK(a.corrupted.tokens == b.corrupted.tokens);
        CHECK(a.mask_positions == b.mask_positions);
        CHECK(a.ratio == b.ratio);
    }
    SUBCASE("invalid policy rejected") {
        CorruptionPolicy bad{0.5, 0.1, 0.1, 0.5, 1.0};
        CHECK_THROWS_AS(bad.validate(), ValidationError);
        CorruptionPolicy bad_ratio{0.8, 0.1, 0.1, 0.9, 0.2};
        CHECK_THROWS_AS(bad_ratio.validate(), ValidationError);
    }
}

TEST_CASE("corruption frequencies approach 80/10/10 over 1e5 positions") {
    Rng seed_rng(7);
    const int vocab = 64;
    const int T = 1000;
    std::int64_t masked = 0, randomized = 0, kept = 0, selected = 0;
    for (int run = 0; run < 100; ++run) {
        Rng rng(run);
        const TokenSequence tokens = random_tokens(T, vocab, rng);
        CorruptionPolicy policy{0.8, 0.1, 0.1, 1.0, 1.0};  // select all T positions
        const auto result = corrupt_tokens(tokens, policy, 1000 + run);
        selected += static_cast<std::int64_t>(result.mask_positions.size());
        for (int p : result.mask_positions) {
            if (result.corrupted.tokens[p] == tokens.sentinel()) {
                ++masked;
            } else if (result.corrupted.tokens[p] == tokens.tokens[p]) {
                ++kept;
            } else {
                ++randomized;
            }
        }
    }
    REQUIRE(selected == 100000);
    // a "random token" draw can reproduce the original: it then counts as kept,
    // shifting 1/vocab of the random share
    const double random_share = 0.1 * (1.0 - 1.0 / vocab);
    CHECK(std::abs(masked / 1e5 - 0.8) < 0.01);
    CHECK(std::abs(randomized / 1e5 - random_share) < 0.01);
    CHECK(std::abs(kept / 1e5 - (0.2 - random_share)) < 0.01);
}

TEST_CASE("sample_mask_ratio bounds and mean") {
    CorruptionPolicy degenerate{0.8, 0.1, 0.1, 1.0, 1.0};
    CHECK(sample_mask_ratio(3, degenerate) == 1.0);

    CorruptionPolicy policy;
    double total = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double r = sample_mask_ratio(i, policy);
        CHECK(r >= 0.5);
        CHECK(r <= 1.0);
        total += r;
    }
    CHECK(std::abs(total / n - 0.75) < 0.01);
}

TEST_CASE("oracle predictor recovers the truth in one pass and after L passes") {
    Rng rng(11);
    for (int L : {1, 5}) {
        const TokenSequence truth = random_tokens(23, 32, rng);
        OraclePredictor oracle(truth);
        const auto result = iterative_decode(oracle, truth.length(), L, dummy_conditioning(23),
                                             truth.tokens[0], truth.vocab);
        CHECK(result.tokens.tokens == truth.tokens);
    }
}

TEST_CASE("uniform predictor decodes deterministically") {
    UniformPredictor uniform;
    const auto a = iterative_decode(uniform, 17, 5, dummy_conditioning(17), 3, 8);
    const auto b = iterative_decode(uniform, 17, 5, dummy_conditioning(17), 3, 8);
    CHECK(a.tokens.tokens == b.tokens.tokens);
    CHECK(a.tokens.tokens[0] == 3);
    for (int t : a.tokens.tokens) CHECK(t < 8);
}

TEST_CASE("masked-count trace equals the schedule on the free positions") {
    UniformPredictor uniform;
    const int T = 11, L = 5;
    const auto result = iterative_decode(uniform, T, L, dummy_conditioning(T), 0, 4);
    const auto oracle = schedule_oracle(T - 1, L);
    REQUIRE(static_cast<int>(result.masked_count_trace.size()) == L);
    for (int l = 1; l <= L; ++l) CHECK(result.masked_count_trace[l - 1] == oracle[l]);
}

TEST_CASE("source token survives decoding under an adversarial predictor") {
    // predictor that always pushes token 7 with full confidence
    FunctionPredictor pusher([](const TokenSequence& partial, const FeatureSequence&) {
        Matrix probs = Matrix::Zero(partial.length(), partial.vocab);
        probs.col(7).setOnes();
        return probs;
    });
    const auto result = iterative_decode(pusher, 9, 4, dummy_conditioning(9), 2, 8);
    CHECK(result.tokens.tokens[0] == 2);
    for (int t = 1; t < 9; ++t) CHECK(result.tokens.tokens[t] == 7);
}

TEST_CASE("predictor shape mismatch errors") {
    FunctionPredictor bad([](const TokenSequence& partial, const FeatureSequence&) {
        return Matrix::Constant(partial.length() + 1, partial.vocab, 1.0 / partial.vocab);
    });
    CHECK_THROWS_AS(iterative_decode(bad, 6, 3, dummy_conditioning(6), 0, 4), ValidationError);

    FunctionPredictor unnormalized([](const TokenSequence& partial, const FeatureSequence&) {
        return Matrix::Constant(partial.length(), partial.vocab, 1.0);
    });
    CHECK_THROWS_AS(iterative_decode(unnormalized, 6, 3, dummy_conditioning(6), 0, 4),
                    ValidationError);
}

TEST_CASE("residual decode") {
    Rng rng(13);
    const int vocab = 6;
    const TokenSequence base = random_tokens(10, vocab, rng);

    SUBCASE("no residual layers returns base unchanged") {
        const auto tokens = residual_decode(base, {}, {});
        REQUIRE(tokens.cols() == 1);
        for (int t = 0; t < 10; ++t) CHECK(tokens(t, 0) == base.tokens[t]);
    }
    SUBCASE("echo predictors replicate the base via one-hot embeddings") {
        // embedding = identity rows, so the summed conditioning argmax is the
        // dominant previous token; echo returns it with probability 1
        std::vector<Matrix> embeddings(2, Matrix::Identity(vocab, vocab));
        FunctionPredictor echo([vocab](const TokenSequence& partial, const FeatureSequence& cond) {
            Matrix probs = Matrix::Zero(partial.length(), vocab);
            for (int t = 0; t < partial.length(); ++t) {
                int best = 0;
                cond.rows.row(t).maxCoeff(&best);
                probs(t, best) = 1.0;
            }
            return probs;
        });
        const std::vector<const TokenPredictor*> predictors{&echo, &echo};
        const auto tokens = residual_decode(base, predictors, embeddings);
        REQUIRE(tokens.cols() == 3);
        for (int t = 0; t < 10; ++t) {
            CHECK(tokens(t, 1) == base.tokens[t]);
            CHECK(tokens(t, 2) == base.tokens[t]);
        }
    }
    SUBCASE("conditioning equals the embedding sum oracle") {
        // capture the conditioning the predictor sees at layer 3
        std::vector<Matrix> embeddings;
        Rng erng(17);
        for (int r = 0; r < 2; ++r) {
            Matrix table(vocab, 3);
            for (int c = 0; c < vocab; ++c) {
                for (int d = 0; d < 3; ++d) table(c, d) = erng.normal();
            }
            embeddings.push_back(std::move(table));
        }
        Matrix seen_layer3;
        int call = 0;
        FunctionPredictor capture([&](const TokenSequence& partial, const FeatureSequence& cond) {
            ++call;
            if (call == 2) seen_layer3 = cond.rows;
            Matrix probs = Matrix::Zero(partial.length(), vocab);
            probs.col(1).setOnes();  // layer tokens become 1
            return probs;
        });
        const std::vector<const TokenPredictor*> predictors{&capture, &capture};
        const auto tokens = residual_decode(base, predictors, embeddings);
        // loop-free oracle: embeddings of layer-0 (base) plus layer-1 (all ones)
        REQUIRE(seen_layer3.rows() == 10);
        for (int t = 0; t < 10; ++t) {
            const Eigen::RowVector3d expected =
                embeddings[0].row(base.tokens[t]) + embeddings[1].row(1);
            CHECK((seen_layer3.row(t) - expected).cwiseAbs().maxCoeff() < 1e-15);
        }
    }
    SUBCASE("missing predictor errors") {
        std::vector<Matrix> embeddings(1, Matrix::Identity(vocab, vocab));
        const std::vector<const TokenPredictor*> predictors{nullptr};
        CHECK_THROWS_AS(residual_decode(base, predictors, embeddings), ValidationError);
    }
    SUBCASE("base with sentinel errors") {
        TokenSequence masked = base;
        masked.tokens[4] = masked.sentinel();
        CHECK_THROWS_AS(residual_decode(masked, {}, {}), ValidationError);
    }
}

TEST_CASE("cross entropy closed cases and per-term oracle") {
    SUBCASE("perfect prediction scores zero") {
        TokenSequence target;
        target.vocab = 4;
        target.tokens = {1, 2, 3};
        Matrix probs = Matrix::Zero(3, 4);
        for (int t = 0; t < 3; ++t) probs(t, target.tokens[t]) = 1.0;
        CHECK(cross_entropy_masked(probs, target, {0, 1, 2}) == 0.0);
    }
    SUBCASE("uniform over V=4 scores ln 4") {
        TokenSequence target;
        target.vocab = 4;
        target.tokens = {0, 3};
        const Matrix probs = Matrix::Constant(2, 4, 0.25);
        CHECK(cross_entropy_masked(probs, target, {0, 1}) ==
              doctest::Approx(std::log(4.0)).epsilon(1e-14));
    }
    SUBCASE("random distributions match the term-by-term oracle") {
        Rng rng(19);
        for (int trial = 0; trial < 20; ++trial) {
            const int T = 8, V = 5;
            Matrix probs(T, V);
            for (int t = 0; t < T; ++t) {
                double sum = 0.0;
                for (int v = 0; v < V; ++v) {
                    probs(t, v) = rng.uniform() + 1e-3;
                    sum += probs(t, v);
                }
                probs.row(t) /= sum;
            }
            TokenSequence target = random_tokens(T, V, rng);
            std::vector<int> positions = {1, 3, 4, 6};
            double oracle = 0.0;
            for (int p : positions) oracle -= std::log(probs(p, target.tokens[p]));
            oracle /= static_cast<double>(positions.size());
            CHECK(cross_entropy_masked(probs, target, positions) ==
                  doctest::Approx(oracle).epsilon(1e-12));
        }
    }
    SUBCASE("unmasked positions are ignored") {
        TokenSequence target;
        target.vocab = 3;
        target.tokens = {0, 1, 2};
        Matrix probs = Matrix::Constant(3, 3, 1.0 / 3.0);
        probs.row(0) << 1.0, 0.0, 0.0;  // position 0 not scored
        CHECK(cross_entropy_masked(probs, target, {1}) ==
              doctest::Approx(std::log(3.0)).epsilon(1e-14));
    }
    SUBCASE("residual variant averages over layers and positions") {
        std::vector<Matrix> layer_probs(2, Matrix::Constant(3, 4, 0.25));
        Eigen::MatrixXi targets(3, 2);
        targets << 0, 1, 2, 3, 1, 0;
        CHECK(cross_entropy_residual(layer_probs, targets) ==
              doctest::Approx(std::log(4.0)).epsilon(1e-14));
    }
}

TEST_CASE("frequency predictor is a valid distribution and prefers seen tokens") {
    Rng rng(23);
    std::vector<TokenSequence> examples;
    TokenSequence seq;
    seq.vocab = 8;
    seq.tokens = {1, 2, 1, 2, 1, 2, 1, 2};
    examples.push_back(seq);
    FrequencyPredictor predictor(examples, 8);
    TokenSequence query;
    query.vocab = 8;
    query.tokens.assign(5, 8);  // fully masked
    const Matrix probs = predictor.predict(query, dummy_conditioning(5));
    for (int t = 0; t < 5; ++t) {
        CHECK(probs.row(t).sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(probs(0, 1) > probs(0, 5));
}
