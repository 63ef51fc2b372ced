#pragma once

#include <utility>
#include <vector>

#include "gesturekit/types.hpp"

namespace gesturekit {

/// Per-frame embedding rows plus their temporal mean pool.
struct EmbeddingSequence {
    Matrix rows;    // T x d
    Vector pooled;  // mean over rows

    static EmbeddingSequence from_rows(Matrix rows);
    void validate() const;  // pooled must equal the row mean within 1e-9 relative
};

/// Pairwise cosine similarities: entry (i, j) = cos(speech_i, gesture_j).
struct SimilarityMatrix {
    Matrix entries;
    double temperature = 0.7;

    int size() const { return static_cast<int>(entries.rows()); }
    void validate() const;
};

struct ChronoNegative {
    FeatureSequence features;
    int source_index = 0;
    std::vector<int> permutation;
};

struct AlignmentBatch {
    std::vector<std::pair<FeatureSequence, EmbeddingSequence>> positives;
    std::vector<ChronoNegative> chrono_negatives;

    void validate() const;
};

SimilarityMatrix cosine_similarity_matrix(const std::vector<EmbeddingSequence>& speech,
                                          const std::vector<EmbeddingSequence>& gesture,
                                          double temperature = 0.7);

/// Symmetric InfoNCE over the diagonal pairs: -1/(2N) of row- and
/// column-softmax log-likelihoods at temperature S.temperature.
double infonce_loss(const SimilarityMatrix& S);

/// Same loss with extra candidate columns (chronological negatives) that
/// enlarge only the row denominators.
double infonce_loss(const SimilarityMatrix& S, const Matrix& extra_cols);

/// Reorder speech feature rows by permuting transcript segments. Frames
/// between segments travel with the preceding segment; frames before the
/// first segment stay at the front.
FeatureSequence build_chronological_negative(const FeatureSequence& speech,
                                             const TimedTranscript& transcript,
                                             const std::vector<int>& permutation, double fps = 25.0);

/// R@k per requested k: fraction of rows whose diagonal entry ranks in the
/// row's top k. Ties rank the lower column index first.
std::vector<double> retrieval_recall(const SimilarityMatrix& S, const std::vector<int>& ks);

EmbeddingSequence mean_pool_embed(const FeatureSequence& features, const Matrix& projection);

}  // namespace gesturekit
