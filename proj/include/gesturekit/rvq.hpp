#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gesturekit/types.hpp"

namespace gesturekit {

struct Codebook {
    Matrix vectors;  // C x d
    std::vector<std::int64_t> usage_counts;

    int codes() const { return static_cast<int>(vectors.rows()); }
    int dim() const { return static_cast<int>(vectors.cols()); }
    void validate() const;
};

/// Ordered quantizer layers; layer r encodes the residual left by layers < r.
struct CodebookStack {
    std::vector<Codebook> layers;

    int layer_count() const { return static_cast<int>(layers.size()); }
    int dim() const { return layers.empty() ? 0 : layers.front().dim(); }
    void validate() const;
};

struct QuantizationResult {
    Eigen::MatrixXi tokens;         // T x R
    Matrix quantized;               // T x d, sum of selected codes
    std::vector<Matrix> residuals;  // R+1 entries: residual entering each layer,
                                    // then the final residual x - quantized
};

/// Per layer: argmin squared Euclidean distance to the running residual
/// (ties to the lowest index), then subtract the chosen code.
QuantizationResult rvq_encode(const FeatureSequence& x, const CodebookStack& stack);

FeatureSequence rvq_decode(const Eigen::MatrixXi& tokens, const CodebookStack& stack);

/// Decode using only the first `layers` quantizer layers.
FeatureSequence rvq_decode_prefix(const Eigen::MatrixXi& tokens, const CodebookStack& stack,
                                  int layers);

// Default loss weights for the combined quantizer objective.
inline constexpr double kCommitmentWeight = 1.0;  // alpha
inline constexpr double kDistillWeight = 0.5;     // beta

struct RvqLosses {
    double reconstruction = 0.0;
    double commitment = 0.0;
    double distill = 0.0;
    double total = 0.0;
};

/// reconstruction = mean_t ||x_t - quantized_t||^2,
/// commitment = sum_r mean_t ||z_r(t) - e_r(t)||^2, total = rec + alpha * commit.
RvqLosses rvq_losses(const FeatureSequence& x, const QuantizationResult& result,
                     double alpha = kCommitmentWeight);

struct DistillProjection {
    Matrix matrix;  // d x d_teacher
};

/// -(1/T) sum_t cos(projected quantized row t, teacher row t); in [-1, 1].
double distill_loss(const QuantizationResult& result, const FeatureSequence& teacher,
                    const DistillProjection& proj);

/// rvq_losses plus beta-weighted distillation.
RvqLosses rvq_losses(const FeatureSequence& x, const QuantizationResult& result,
                     const FeatureSequence& teacher, const DistillProjection& proj,
                     double alpha = kCommitmentWeight, double beta = kDistillWeight);

struct RvqTrainConfig {
    int layers = 6;
    int codes = 1024;
    int epochs = 25;
    int batch_size = 256;
    double ema_decay = 0.99;
    double dead_fraction = 0.01;  // reset codes used less than this share of uniform
    std::uint64_t seed = 0;
};

/// Mini-batch k-means with EMA center updates and dead-code resets, one layer
/// at a time on the residuals of the previous layers. Each layer ends with an
/// exact assignment/mean pass, which makes prefix reconstruction error on the
/// training data non-increasing in the layer count. Deterministic per seed.
CodebookStack train_codebooks(const std::vector<FeatureSequence>& data, const RvqTrainConfig& config);

/// Header (magic "GKRQ", R u32, C u32, d u32) + per-layer C*d float32 row-major.
void save_stack(const std::filesystem::path& path, const CodebookStack& stack);
CodebookStack load_stack(const std::filesystem::path& path);

}  // namespace gesturekit
