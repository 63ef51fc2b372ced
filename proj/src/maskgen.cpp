#include "gesturekit/maskgen.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace gesturekit {

namespace {

constexpr double kProbEps = 1e-12;

void check_prediction(const Matrix& probs, int length, int vocab) {
    if (probs.rows() != length || probs.cols() != vocab) {
        throw ValidationError("predictor output shape (" + std::to_string(probs.rows()) + "x" +
                              std::to_string(probs.cols()) + ") does not match " +
                              std::to_string(length) + "x" + std::to_string(vocab));
    }
    for (int t = 0; t < length; ++t) {
        double sum = 0.0;
        for (int v = 0; v < vocab; ++v) {
            const double p = probs(t, v);
            if (!std::isfinite(p) || p < 0.0) {
                throw ValidationError("predictor row " + std::to_string(t) +
                                      " has a negative or non-finite probability");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw ValidationError("predictor row " + std::to_string(t) +
                                  " sums to " + std::to_string(sum));
        }
    }
}

int argmax_row(const Matrix& probs, int t) {
    int best = 0;
    double best_p = probs(t, 0);
    for (int v = 1; v < probs.cols(); ++v) {
        if (probs(t, v) > best_p) {
            best_p = probs(t, v);
            best = v;
        }
    }
    return best;
}

}  // namespace

void TokenSequence::validate() const {
    if (tokens.empty()) throw ValidationError("token sequence is empty");
    if (vocab < 1) throw ValidationError("vocabulary must be positive");
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (tokens[t] < 0 || tokens[t] > sentinel()) {
            throw ValidationError("token " + std::to_string(tokens[t]) + " at position " +
                                  std::to_string(t) + " outside [0, sentinel]");
        }
    }
}

void CorruptionPolicy::validate() const {
    if (p_mask < 0.0 || p_random < 0.0 || p_keep < 0.0 ||
        std::abs(p_mask + p_random + p_keep - 1.0) > 1e-9) {
        throw ValidationError("corruption probabilities must be non-negative and sum to 1");
    }
    if (!(0.0 <= ratio_low && ratio_low <= ratio_high && ratio_high <= 1.0)) {
        throw ValidationError("mask ratio bounds must satisfy 0 <= low <= high <= 1");
    }
}

OraclePredictor::OraclePredictor(TokenSequence truth) : truth_(std::move(truth)) {
    truth_.validate();
    for (int t : truth_.tokens) {
        if (t == truth_.sentinel()) throw ValidationError("oracle truth contains sentinel tokens");
    }
}

Matrix OraclePredictor::predict(const TokenSequence& partial, const FeatureSequence&) const {
    if (partial.length() != truth_.length() || partial.vocab != truth_.vocab) {
        throw ValidationError("oracle truth does not match query sequence shape");
    }
    Matrix probs = Matrix::Zero(truth_.length(), truth_.vocab);
    for (int t = 0; t < truth_.length(); ++t) probs(t, truth_.tokens[t]) = 1.0;
    return probs;
}

Matrix UniformPredictor::predict(const TokenSequence& partial, const FeatureSequence&) const {
    return Matrix::Constant(partial.length(), partial.vocab, 1.0 / partial.vocab);
}

FrequencyPredictor::FrequencyPredictor(const std::vector<TokenSequence>& examples, int vocab)
    : vocab_(vocab) {
    if (vocab < 1) throw ValidationError("vocabulary must be positive");
    std::vector<double> uni(vocab, 1.0);  // add-one smoothing
    std::vector<std::vector<double>> bi(vocab, std::vector<double>(vocab, 1.0));
    for (const TokenSequence& seq : examples) {
        seq.validate();
        for (std::size_t t = 0; t < seq.tokens.size(); ++t) {
            const int tok = seq.tokens[t];
            if (tok >= vocab) throw ValidationError("example token outside vocabulary");
            uni[tok] += 1.0;
            if (t > 0 && seq.tokens[t - 1] < vocab) bi[seq.tokens[t - 1]][tok] += 1.0;
        }
    }
    const double uni_sum = std::accumulate(uni.begin(), uni.end(), 0.0);
    for (double& v : uni) v /= uni_sum;
    for (auto& row : bi) {
        const double s = std::accumulate(row.begin(), row.end(), 0.0);
        for (double& v : row) v /= s;
    }
    unigram_ = std::move(uni);
    bigram_ = std::move(bi);
}

Matrix FrequencyPredictor::predict(const TokenSequence& partial, const FeatureSequence&) const {
    if (partial.vocab != vocab_) throw ValidationError("query vocabulary does not match tables");
    Matrix probs(partial.length(), vocab_);
    for (int t = 0; t < partial.length(); ++t) {
        const bool has_left = t > 0 && partial.tokens[t - 1] < vocab_;
        const std::vector<double>& row = has_left ? bigram_[partial.tokens[t - 1]] : unigram_;
        for (int v = 0; v < vocab_; ++v) probs(t, v) = row[v];
    }
    return probs;
}

int cosine_mask_count(int length, int iteration, int total_iterations) {
    if (length < 1) throw ValidationError("schedule length must be >= 1");
    if (total_iterations < 1) throw ValidationError("schedule needs >= 1 iteration");
    if (iteration < 0 || iteration > total_iterations) {
        throw ValidationError("iteration outside [0, total]");
    }
    int prev = length;
    for (int l = 1; l <= iteration; ++l) {
        int count;
        if (l == total_iterations || prev == 0) {
            count = 0;
        } else {
            count = static_cast<int>(std::floor(
                length * std::cos(M_PI_2 * static_cast<double>(l) / total_iterations)));
            count = std::clamp(count, 0, prev - 1);
        }
        prev = count;
    }
    return prev;
}

double sample_mask_ratio(std::uint64_t rng_seed, const CorruptionPolicy& policy) {
    policy.validate();
    Rng rng(rng_seed);
    return rng.uniform(policy.ratio_low, policy.ratio_high);
}

CorruptionResult corrupt_tokens(const TokenSequence& tokens, const CorruptionPolicy& policy,
                                std::uint64_t rng_seed) {
    tokens.validate();
    policy.validate();
    Rng rng(rng_seed);
    const int T = tokens.length();
    const double ratio = rng.uniform(policy.ratio_low, policy.ratio_high);
    const int n = static_cast<int>(std::ceil(ratio * T));
    CorruptionResult result;
    result.corrupted = tokens;
    result.ratio = ratio;
    if (n == 0) return result;
    auto picks = rng.sample_indices(static_cast<std::size_t>(T), static_cast<std::size_t>(n));
    for (std::size_t p : picks) {
        const double u = rng.uniform();
        if (u < policy.p_mask) {
            result.corrupted.tokens[p] = tokens.sentinel();
        } else if (u < policy.p_mask + policy.p_random) {
            result.corrupted.tokens[p] = static_cast<int>(rng.below(tokens.vocab));
        }  // else keep unchanged
        result.mask_positions.push_back(static_cast<int>(p));
    }
    std::sort(result.mask_positions.begin(), result.mask_positions.end());
    return result;
}

DecodeResult iterative_decode(const TokenPredictor& predictor, int length, int total_iterations,
                              const FeatureSequence& conditioning, int source_token, int vocab) {
    if (length < 2) throw ValidationError("decoding needs at least 2 positions");
    if (total_iterations < 1) throw ValidationError("need at least one decode iteration");
    if (vocab < 1) throw ValidationError("vocabulary must be positive");
    if (source_token < 0 || source_token >= vocab) {
        throw ValidationError("source token outside vocabulary");
    }
    DecodeState state;
    state.total_iterations = total_iterations;
    state.committed.vocab = vocab;
    state.committed.tokens.assign(length, vocab);  // sentinel everywhere
    state.committed.tokens[0] = source_token;
    state.masked.assign(length, 1);
    state.masked[0] = 0;
    state.confidence.assign(length, 0.0);
    const int free = length - 1;

    DecodeResult result;
    for (state.iteration = 1; state.iteration <= total_iterations; ++state.iteration) {
        const Matrix probs = predictor.predict(state.committed, conditioning);
        check_prediction(probs, length, vocab);
        std::vector<int> filled;
        for (int t = 1; t < length; ++t) {
            if (!state.masked[t]) continue;
            const int token = argmax_row(probs, t);
            state.committed.tokens[t] = token;
            state.confidence[t] = probs(t, token);
            state.masked[t] = 0;
            filled.push_back(t);
        }
        const int keep_masked = cosine_mask_count(free, state.iteration, total_iterations);
        // Re-mask the lowest-confidence fills; ties keep the earlier position.
        std::sort(filled.begin(), filled.end(), [&state](int a, int b) {
            if (state.confidence[a] != state.confidence[b]) {
                return state.confidence[a] < state.confidence[b];
            }
            return a > b;
        });
        for (int i = 0; i < keep_masked; ++i) {
            const int t = filled[i];
            state.committed.tokens[t] = state.committed.sentinel();
            state.masked[t] = 1;
        }
        result.masked_count_trace.push_back(keep_masked);
    }
    state.committed.validate();
    for (int t : state.committed.tokens) {
        if (t == state.committed.sentinel()) {
            throw NumericalError("decoding finished with sentinel tokens remaining");
        }
    }
    result.tokens = std::move(state.committed);
    return result;
}

Eigen::MatrixXi residual_decode(const TokenSequence& base,
                                const std::vector<const TokenPredictor*>& layer_predictors,
                                const std::vector<Matrix>& embeddings) {
    base.validate();
    for (int t : base.tokens) {
        if (t == base.sentinel()) throw ValidationError("base layer must be fully decoded");
    }
    const int T = base.length();
    const int R = static_cast<int>(layer_predictors.size()) + 1;
    Eigen::MatrixXi tokens(T, R);
    for (int t = 0; t < T; ++t) tokens(t, 0) = base.tokens[t];
    if (R == 1) return tokens;
    if (static_cast<int>(embeddings.size()) < R - 1) {
        throw ValidationError("need an embedding table per preceding layer (" +
                              std::to_string(R - 1) + ")");
    }
    const int emb_dim = static_cast<int>(embeddings.front().cols());
    for (int r = 0; r < R - 1; ++r) {
        if (embeddings[r].rows() < base.vocab || embeddings[r].cols() != emb_dim) {
            throw ValidationError("embedding table " + std::to_string(r) +
                                  " does not cover the vocabulary at a shared dimension");
        }
        if (!embeddings[r].allFinite()) {
            throw ValidationError("embedding table " + std::to_string(r) + " has non-finite entries");
        }
    }
    TokenSequence all_masked;
    all_masked.vocab = base.vocab;
    all_masked.tokens.assign(T, base.sentinel());
    for (int j = 1; j < R; ++j) {
        if (layer_predictors[j - 1] == nullptr) {
            throw ValidationError("missing predictor for layer " + std::to_string(j + 1));
        }
        FeatureSequence conditioning;
        conditioning.kind = FeatureKind::GestureEmbedding;
        conditioning.rows = Matrix::Zero(T, emb_dim);
        for (int t = 0; t < T; ++t) {
            for (int r = 0; r < j; ++r) {
                conditioning.rows.row(t) += embeddings[r].row(tokens(t, r));
            }
        }
        const Matrix probs = layer_predictors[j - 1]->predict(all_masked, conditioning);
        check_prediction(probs, T, base.vocab);
        for (int t = 0; t < T; ++t) tokens(t, j) = argmax_row(probs, t);
    }
    return tokens;
}

double cross_entropy_masked(const Matrix& pred_rows, const TokenSequence& target,
                            const std::vector<int>& mask_positions) {
    target.validate();
    check_prediction(pred_rows, target.length(), target.vocab);
    if (mask_positions.empty()) throw ValidationError("no masked positions to score");
    double total = 0.0;
    bool clamped = false;
    for (int t : mask_positions) {
        if (t < 0 || t >= target.length()) {
            throw ValidationError("mask position " + std::to_string(t) + " out of range");
        }
        const int tok = target.tokens[t];
        if (tok >= target.vocab) {
            throw ValidationError("target at masked position " + std::to_string(t) + " is a sentinel");
        }
        double p = pred_rows(t, tok);
        if (p < kProbEps) {
            p = kProbEps;
            clamped = true;
        }
        total -= std::log(p);
    }
    if (clamped) {
        std::cerr << "warning: cross-entropy clamped zero probabilities to 1e-12\n";
    }
    return total / static_cast<double>(mask_positions.size());
}

double cross_entropy_residual(const std::vector<Matrix>& pred_rows_per_layer,
                              const Eigen::MatrixXi& targets) {
    if (pred_rows_per_layer.empty()) throw ValidationError("no residual layers to score");
    if (targets.cols() != static_cast<int>(pred_rows_per_layer.size())) {
        throw ValidationError("target layer count does not match prediction layers");
    }
    const int T = static_cast<int>(targets.rows());
    if (T < 1) throw ValidationError("empty targets");
    double total = 0.0;
    bool clamped = false;
    for (std::size_t j = 0; j < pred_rows_per_layer.size(); ++j) {
        const Matrix& probs = pred_rows_per_layer[j];
        const int vocab = static_cast<int>(probs.cols());
        check_prediction(probs, T, vocab);
        for (int t = 0; t < T; ++t) {
            const int tok = targets(t, static_cast<int>(j));
            if (tok < 0 || tok >= vocab) {
                throw ValidationError("target token out of range at layer " + std::to_string(j));
            }
            double p = probs(t, tok);
            if (p < kProbEps) {
                p = kProbEps;
                clamped = true;
            }
            total -= std::log(p);
        }
    }
    if (clamped) {
        std::cerr << "warning: cross-entropy clamped zero probabilities to 1e-12\n";
    }
    return total / static_cast<double>(T * pred_rows_per_layer.size());
}

}  // namespace gesturekit
