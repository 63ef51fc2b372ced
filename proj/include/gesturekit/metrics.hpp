#pragma once

#include <map>
#include <string>
#include <vector>

#include "gesturekit/types.hpp"

namespace gesturekit {

/// Gaussian sufficient statistics fitted to feature rows.
struct GaussianStats {
    Vector mean;
    Matrix covariance;
    std::int64_t count = 0;

    /// Sample covariance (ddof 1); zero covariance for a single sample.
    static GaussianStats fit(const Matrix& samples);
    void validate() const;  // symmetric within 1e-9, eigenvalues >= -1e-9
};

/// Symmetric PSD square root via eigendecomposition; eigenvalues in
/// [-1e-10, 0) clamp to zero, anything lower throws. The result is checked by
/// squaring back within 1e-8 relative Frobenius error.
Matrix symmetric_sqrt(const Matrix& m);

/// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2}).
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

/// Mean L1 distance over unordered clip pairs.
double diversity_l1(const std::vector<Vector>& clips);
/// Mean L2 distance over unordered clip pairs.
double diversity_l2(const std::vector<Vector>& clips);

/// Beat times (seconds) at strict local minima of the mean keypoint speed.
std::vector<double> motion_beats(const GestureSequence& seq);

/// Mean over audio beats of exp(-min_m (b_a - b_m)^2 / (2 sigma_b^2));
/// 0 when there are no motion beats.
double beat_align_score(const std::vector<double>& audio_beats,
                        const std::vector<double>& motion_beats, double sigma_b = 0.1);

/// Same chamfer kernel evaluated motion -> audio.
double beat_constancy(const std::vector<double>& audio_beats,
                      const std::vector<double>& motion_beats, double sigma_b = 0.1);

/// Fraction of scalar coordinates with |gen - gt| <= delta (inclusive).
double pcm(const GestureSequence& gen, const GestureSequence& gt, double delta);

double mse(const GestureSequence& gen, const GestureSequence& gt);

/// Mean squared first / second temporal difference of the coordinates.
double velocity_penalty(const GestureSequence& seq);
double acceleration_penalty(const GestureSequence& seq);

struct MetricReport {
    std::map<std::string, double> values;
    std::map<std::string, std::string> config;

    void validate() const;  // all values finite
    std::string to_json() const;
};

}  // namespace gesturekit
