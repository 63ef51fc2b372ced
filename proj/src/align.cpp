#include "gesturekit/align.hpp"

#include <algorithm>
#include <cmath>

namespace gesturekit {

namespace {

bool is_permutation_of_indices(const std::vector<int>& perm, int n) {
    if (static_cast<int>(perm.size()) != n) return false;
    std::vector<char> seen(n, 0);
    for (int v : perm) {
        if (v < 0 || v >= n || seen[v]) return false;
        seen[v] = 1;
    }
    return true;
}

bool is_identity(const std::vector<int>& perm) {
    for (std::size_t i = 0; i < perm.size(); ++i) {
        if (perm[i] != static_cast<int>(i)) return false;
    }
    return true;
}

double logsumexp(const Vector& v) {
    const double m = v.maxCoeff();
    double s = 0.0;
    for (int i = 0; i < v.size(); ++i) s += std::exp(v(i) - m);
    return m + std::log(s);
}

}  // namespace

EmbeddingSequence EmbeddingSequence::from_rows(Matrix rows) {
    if (rows.rows() < 1 || rows.cols() < 1) {
        throw ValidationError("embedding sequence must be at least 1x1");
    }
    if (!rows.allFinite()) throw ValidationError("embedding rows contain non-finite values");
    EmbeddingSequence e;
    e.pooled = rows.colwise().mean();
    e.rows = std::move(rows);
    return e;
}

void EmbeddingSequence::validate() const {
    if (rows.rows() < 1 || rows.cols() < 1 || pooled.size() != rows.cols()) {
        throw ValidationError("embedding sequence shape mismatch");
    }
    if (!rows.allFinite() || !pooled.allFinite()) {
        throw ValidationError("embedding contains non-finite values");
    }
    const Vector mean = rows.colwise().mean();
    const double tol = 1e-9 * std::max(1.0, mean.norm());
    if ((pooled - mean).norm() > tol) {
        throw ValidationError("pooled vector does not equal the row mean");
    }
}

void SimilarityMatrix::validate() const {
    if (entries.rows() < 1 || entries.rows() != entries.cols()) {
        throw ValidationError("similarity matrix must be square and non-empty");
    }
    if (!entries.allFinite()) throw ValidationError("similarity matrix has non-finite entries");
    if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
    if (entries.maxCoeff() > 1.0 + 1e-9 || entries.minCoeff() < -1.0 - 1e-9) {
        throw ValidationError("similarity entries outside [-1, 1]");
    }
}

void AlignmentBatch::validate() const {
    const int n = static_cast<int>(positives.size());
    for (const auto& [speech, gesture] : positives) {
        speech.validate();
        gesture.validate();
    }
    for (std::size_t i = 0; i < chrono_negatives.size(); ++i) {
        const ChronoNegative& neg = chrono_negatives[i];
        neg.features.validate();
        if (neg.source_index < 0 || neg.source_index >= n) {
            throw ValidationError("negative " + std::to_string(i) + " has invalid source index");
        }
        const int segs = static_cast<int>(neg.permutation.size());
        if (!is_permutation_of_indices(neg.permutation, segs) || is_identity(neg.permutation)) {
            throw ValidationError("negative " + std::to_string(i) +
                                  " does not carry a valid non-identity permutation");
        }
    }
}

SimilarityMatrix cosine_similarity_matrix(const std::vector<EmbeddingSequence>& speech,
                                          const std::vector<EmbeddingSequence>& gesture,
                                          double temperature) {
    if (speech.size() != gesture.size()) {
        throw ValidationError("speech and gesture lists must have equal length");
    }
    if (speech.empty()) throw ValidationError("cannot build similarity matrix from empty lists");
    if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
    const int n = static_cast<int>(speech.size());
    std::vector<double> speech_norm(n), gesture_norm(n);
    for (int i = 0; i < n; ++i) {
        speech[i].validate();
        gesture[i].validate();
        speech_norm[i] = speech[i].pooled.norm();
        gesture_norm[i] = gesture[i].pooled.norm();
        if (speech_norm[i] == 0.0) {
            throw ValidationError("speech embedding " + std::to_string(i) + " has zero norm");
        }
        if (gesture_norm[i] == 0.0) {
            throw ValidationError("gesture embedding " + std::to_string(i) + " has zero norm");
        }
    }
    SimilarityMatrix S;
    S.temperature = temperature;
    S.entries.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double c = speech[i].pooled.dot(gesture[j].pooled) / (speech_norm[i] * gesture_norm[j]);
            S.entries(i, j) = std::clamp(c, -1.0, 1.0);
        }
    }
    return S;
}

double infonce_loss(const SimilarityMatrix& S) {
    return infonce_loss(S, Matrix(S.size(), 0));
}

double infonce_loss(const SimilarityMatrix& S, const Matrix& extra_cols) {
    if (S.entries.rows() != S.entries.cols()) {
        throw ValidationError("similarity matrix must be square");
    }
    const int n = S.size();
    if (n < 2) throw ValidationError("InfoNCE needs N >= 2");
    if (!(S.temperature > 0.0)) throw ValidationError("temperature must be positive");
    if (!S.entries.allFinite()) throw ValidationError("similarity matrix has non-finite entries");
    if (extra_cols.size() > 0) {
        if (extra_cols.rows() != n) throw ValidationError("extra negative columns must have N rows");
        if (!extra_cols.allFinite()) throw ValidationError("extra columns have non-finite entries");
    }
    const double inv_tau = 1.0 / S.temperature;
    const int extras = static_cast<int>(extra_cols.cols());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        Vector row(n + extras);
        row.head(n) = S.entries.row(i).transpose() * inv_tau;
        if (extras > 0) row.tail(extras) = extra_cols.row(i).transpose() * inv_tau;
        Vector col = S.entries.col(i) * inv_tau;
        total += S.entries(i, i) * inv_tau - logsumexp(row);
        total += S.entries(i, i) * inv_tau - logsumexp(col);
    }
    return -total / (2.0 * n);
}

FeatureSequence build_chronological_negative(const FeatureSequence& speech,
                                             const TimedTranscript& transcript,
                                             const std::vector<int>& permutation, double fps) {
    speech.validate();
    transcript.validate();
    if (!(fps > 0.0)) throw ValidationError("fps must be positive");
    const int segs = static_cast<int>(transcript.segments.size());
    if (segs < 2) throw ValidationError("cannot construct chronological negative: need >= 2 segments");
    if (!is_permutation_of_indices(permutation, segs)) {
        throw ValidationError("permutation is not a valid permutation of segment indices");
    }
    if (is_identity(permutation)) {
        throw ValidationError("identity permutation does not produce a negative");
    }
    const int T = speech.length();
    // Block k owns frames [start_k, start_{k+1}) in frame units, so gap frames
    // stay attached to the segment preceding them. Frames before segment 0
    // form a fixed prefix.
    std::vector<int> block_start(segs + 1, T);
    for (int k = 0; k < segs; ++k) {
        const int f = static_cast<int>(std::ceil(transcript.segments[k].start * fps - 1e-9));
        block_start[k] = std::clamp(f, 0, T);
    }
    for (int k = 1; k < segs; ++k) {
        block_start[k] = std::max(block_start[k], block_start[k - 1]);
    }
    FeatureSequence out;
    out.kind = speech.kind;
    out.rows.resize(T, speech.dim());
    int row = 0;
    for (int t = 0; t < block_start[0]; ++t) out.rows.row(row++) = speech.rows.row(t);
    for (int k : permutation) {
        for (int t = block_start[k]; t < block_start[k + 1]; ++t) {
            out.rows.row(row++) = speech.rows.row(t);
        }
    }
    return out;
}

std::vector<double> retrieval_recall(const SimilarityMatrix& S, const std::vector<int>& ks) {
    S.validate();
    if (ks.empty()) throw ValidationError("retrieval needs at least one k");
    const int n = S.size();
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] < 1 || ks[i] > n) {
            throw ValidationError("k=" + std::to_string(ks[i]) + " outside [1, N]");
        }
        if (i > 0 && ks[i] < ks[i - 1]) throw ValidationError("ks must be sorted ascending");
    }
    std::vector<int> rank(n);
    for (int i = 0; i < n; ++i) {
        const double diag = S.entries(i, i);
        int better = 0;
        for (int j = 0; j < n; ++j) {
            if (S.entries(i, j) > diag || (S.entries(i, j) == diag && j < i)) ++better;
        }
        rank[i] = better + 1;
    }
    std::vector<double> recall;
    recall.reserve(ks.size());
    for (int k : ks) {
        int hits = 0;
        for (int i = 0; i < n; ++i) {
            if (rank[i] <= k) ++hits;
        }
        recall.push_back(static_cast<double>(hits) / n);
    }
    return recall;
}

EmbeddingSequence mean_pool_embed(const FeatureSequence& features, const Matrix& projection) {
    features.validate();
    if (!projection.allFinite()) throw ValidationError("projection contains non-finite values");
    if (projection.rows() != features.dim()) {
        throw ValidationError("projection rows (" + std::to_string(projection.rows()) +
                              ") do not match feature dim (" + std::to_string(features.dim()) + ")");
    }
    return EmbeddingSequence::from_rows(features.rows * projection);
}

}  // namespace gesturekit
