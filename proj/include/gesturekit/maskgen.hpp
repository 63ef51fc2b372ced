#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gesturekit/types.hpp"

namespace gesturekit {

/// Discrete tokens for one quantizer layer. Valid tokens lie in [0, vocab);
/// the reserved sentinel index equals vocab and marks masked positions.
struct TokenSequence {
    std::vector<int> tokens;
    int vocab = 1024;

    int sentinel() const { return vocab; }
    int length() const { return static_cast<int>(tokens.size()); }
    void validate() const;
};

struct CorruptionPolicy {
    double p_mask = 0.8;
    double p_random = 0.1;
    double p_keep = 0.1;
    double ratio_low = 0.5;
    double ratio_high = 1.0;

    void validate() const;
};

/// Pluggable token model. predict returns T x vocab probability rows for the
/// partially observed sequence (sentinels mark unknown positions); every row
/// must sum to 1 within 1e-6.
class TokenPredictor {
public:
    virtual ~TokenPredictor() = default;
    virtual Matrix predict(const TokenSequence& partial, const FeatureSequence& conditioning) const = 0;
};

/// Puts probability 1 on a fixed ground-truth sequence.
class OraclePredictor : public TokenPredictor {
public:
    explicit OraclePredictor(TokenSequence truth);
    Matrix predict(const TokenSequence& partial, const FeatureSequence& conditioning) const override;

private:
    TokenSequence truth_;
};

class UniformPredictor : public TokenPredictor {
public:
    Matrix predict(const TokenSequence& partial, const FeatureSequence& conditioning) const override;
};

/// Unigram/bigram frequency tables estimated from example sequences; the
/// left committed neighbor conditions the row when available.
class FrequencyPredictor : public TokenPredictor {
public:
    FrequencyPredictor(const std::vector<TokenSequence>& examples, int vocab);
    Matrix predict(const TokenSequence& partial, const FeatureSequence& conditioning) const override;

private:
    int vocab_;
    std::vector<double> unigram_;          // vocab, normalized
    std::vector<std::vector<double>> bigram_;  // vocab x vocab, row-normalized
};

/// Adapter so tests can drop in ad-hoc predictors.
class FunctionPredictor : public TokenPredictor {
public:
    using Fn = std::function<Matrix(const TokenSequence&, const FeatureSequence&)>;
    explicit FunctionPredictor(Fn fn) : fn_(std::move(fn)) {}
    Matrix predict(const TokenSequence& partial, const FeatureSequence& conditioning) const override {
        return fn_(partial, conditioning);
    }

private:
    Fn fn_;
};

/// Number of positions still masked after iteration l of L, out of `length`
/// free positions: floor(length * cos(pi/2 * l/L)), clamped to decrease
/// strictly while positive; 0 at l = L, `length` at l = 0.
int cosine_mask_count(int length, int iteration, int total_iterations);

struct CorruptionResult {
    TokenSequence corrupted;
    std::vector<int> mask_positions;  // sorted
    double ratio = 0.0;
};

/// BERT-style corruption: draw a mask ratio, pick ceil(ratio*T) positions
/// without replacement, then mask / randomize / keep each per the policy.
CorruptionResult corrupt_tokens(const TokenSequence& tokens, const CorruptionPolicy& policy,
                                std::uint64_t rng_seed);

double sample_mask_ratio(std::uint64_t rng_seed, const CorruptionPolicy& policy);

struct DecodeState {
    int iteration = 0;
    int total_iterations = 0;
    TokenSequence committed;
    std::vector<char> masked;
    std::vector<double> confidence;
};

struct DecodeResult {
    TokenSequence tokens;
    std::vector<int> masked_count_trace;  // masked free positions after each iteration
};

/// Confidence-ranked iterative decoding. Position 0 carries the source-frame
/// token throughout; all other positions start masked, are filled by
/// per-position argmax, and the lowest-confidence fills are re-masked so the
/// masked count tracks cosine_mask_count over the T-1 free positions.
DecodeResult iterative_decode(const TokenPredictor& predictor, int length, int total_iterations,
                              const FeatureSequence& conditioning, int source_token, int vocab);

/// Fill residual layers 2..R in order. Layer j's conditioning rows are the
/// summed embeddings of the tokens already decided in layers < j.
Eigen::MatrixXi residual_decode(const TokenSequence& base,
                                const std::vector<const TokenPredictor*>& layer_predictors,
                                const std::vector<Matrix>& embeddings);

/// Mean over masked positions of -log p(target); probabilities below 1e-12
/// are clamped (with a warning on stderr).
double cross_entropy_masked(const Matrix& pred_rows, const TokenSequence& target,
                            const std::vector<int>& mask_positions);

/// Mean of -log p(target) over every (layer, position) pair.
double cross_entropy_residual(const std::vector<Matrix>& pred_rows_per_layer,
                              const Eigen::MatrixXi& targets);

}  // namespace gesturekit
