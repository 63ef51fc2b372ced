#include "gesturekit/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

namespace gesturekit {

GaussianStats GaussianStats::fit(const Matrix& samples) {
    if (samples.rows() < 1 || samples.cols() < 1) {
        throw ValidationError("need at least one sample row");
    }
    if (!samples.allFinite()) throw ValidationError("samples contain non-finite values");
    GaussianStats stats;
    stats.count = samples.rows();
    stats.mean = samples.colwise().mean();
    const Matrix centered = samples.rowwise() - stats.mean.transpose();
    if (samples.rows() > 1) {
        stats.covariance = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
    } else {
        stats.covariance = Matrix::Zero(samples.cols(), samples.cols());
    }
    // Force exact symmetry against accumulation-order noise.
    stats.covariance = 0.5 * (stats.covariance + stats.covariance.transpose()).eval();
    return stats;
}

void GaussianStats::validate() const {
    if (mean.size() < 1 || covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
        throw ValidationError("Gaussian statistics shapes inconsistent");
    }
    if (!mean.allFinite() || !covariance.allFinite()) {
        throw ValidationError("Gaussian statistics must be finite");
    }
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
        throw ValidationError("covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(covariance, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9) {
        throw NumericalError("covariance has eigenvalue below -1e-9");
    }
}

Matrix symmetric_sqrt(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1) throw ValidationError("matrix must be square");
    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    Vector ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) < 0.0) {
            if (ev(i) < -1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff())) {
                throw NumericalError("matrix is not PSD after symmetrization (eigenvalue " +
                                     std::to_string(ev(i)) + ")");
            }
            ev(i) = 0.0;
        }
    }
    const Matrix root =
        es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    const double scale = std::max(sym.norm(), 1e-30);
    if ((root * root - sym).norm() > 1e-8 * scale) {
        throw NumericalError("matrix square root failed to square back within tolerance");
    }
    return root;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
    a.validate();
    b.validate();
    if (a.mean.size() != b.mean.size()) {
        throw ValidationError("Gaussian statistics disagree on dimension");
    }
    // Tr((Sa Sb)^{1/2}) computed through the symmetrized product
    // Sa^{1/2} Sb Sa^{1/2}, which shares its eigenvalues.
    const Matrix root_a = symmetric_sqrt(a.covariance);
    const Matrix inner = symmetric_sqrt(root_a * b.covariance * root_a);
    const double trace_term =
        a.covariance.trace() + b.covariance.trace() - 2.0 * inner.trace();
    double result = (a.mean - b.mean).squaredNorm() + trace_term;
    if (result < 0.0) {
        // Cancellation noise scales with the trace magnitudes.
        const double scale = a.covariance.trace() + b.covariance.trace() + 1.0;
        if (result < -1e-6 * scale) throw NumericalError("Frechet distance came out negative");
        result = 0.0;
    }
    return result;
}

namespace {

double diversity_impl(const std::vector<Vector>& clips, bool l1) {
    if (clips.size() < 2) throw ValidationError("diversity needs at least 2 clips");
    const Eigen::Index dim = clips.front().size();
    for (const Vector& c : clips) {
        if (c.size() != dim) throw ValidationError("clips disagree on dimension");
        if (!c.allFinite()) throw ValidationError("clip contains non-finite values");
    }
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        for (std::size_t j = i + 1; j < clips.size(); ++j) {
            total += l1 ? (clips[i] - clips[j]).lpNorm<1>() : (clips[i] - clips[j]).norm();
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

Vector mean_speed_curve(const GestureSequence& seq) {
    const int T = seq.length();
    Vector speed(T - 1);
    for (int t = 1; t < T; ++t) {
        double total = 0.0;
        for (std::size_t k = 0; k < seq.frames[t].size(); ++k) {
            total += (seq.frames[t][k] - seq.frames[t - 1][k]).norm();
        }
        speed(t - 1) = total / static_cast<double>(seq.frames[t].size());
    }
    return speed;
}

double chamfer_kernel_mean(const std::vector<double>& from, const std::vector<double>& to,
                           double sigma_b) {
    double total = 0.0;
    for (double f : from) {
        double best = std::numeric_limits<double>::infinity();
        for (double t : to) best = std::min(best, (f - t) * (f - t));
        total += std::exp(-best / (2.0 * sigma_b * sigma_b));
    }
    return total / static_cast<double>(from.size());
}

void check_same_shape(const GestureSequence& gen, const GestureSequence& gt) {
    gen.validate();
    gt.validate();
    if (gen.length() != gt.length() ||
        gen.layout.point_count() != gt.layout.point_count()) {
        throw ValidationError("sequences disagree on shape (" + std::to_string(gen.length()) + "x" +
                              std::to_string(gen.layout.point_count()) + " vs " +
                              std::to_string(gt.length()) + "x" +
                              std::to_string(gt.layout.point_count()) + ")");
    }
}

}  // namespace

double diversity_l1(const std::vector<Vector>& clips) { return diversity_impl(clips, true); }

double diversity_l2(const std::vector<Vector>& clips) { return diversity_impl(clips, false); }

std::vector<double> motion_beats(const GestureSequence& seq) {
    seq.validate();
    if (seq.length() < 3) throw ValidationError("motion beats need at least 3 frames");
    const Vector speed = mean_speed_curve(seq);
    // Dips must clear a relative noise floor, so rounding jitter on a
    // constant-speed trajectory does not register as beats.
    const double tol = 1e-9 * std::max(1.0, speed.maxCoeff());
    std::vector<double> beats;
    for (int i = 1; i + 1 < speed.size(); ++i) {
        if (speed(i) < speed(i - 1) - tol && speed(i) < speed(i + 1) - tol) {
            // speed(i) covers the step into frame i+1
            beats.push_back(static_cast<double>(i + 1) / seq.fps);
        }
    }
    return beats;
}

double beat_align_score(const std::vector<double>& audio_beats,
                        const std::vector<double>& motion_beats, double sigma_b) {
    if (!(sigma_b > 0.0)) throw ValidationError("sigma_b must be positive");
    if (audio_beats.empty()) throw ValidationError("need at least one audio beat");
    if (motion_beats.empty()) return 0.0;
    return chamfer_kernel_mean(audio_beats, motion_beats, sigma_b);
}

double beat_constancy(const std::vector<double>& audio_beats,
                      const std::vector<double>& motion_beats, double sigma_b) {
    if (!(sigma_b > 0.0)) throw ValidationError("sigma_b must be positive");
    if (audio_beats.empty()) throw ValidationError("need at least one audio beat");
    if (motion_beats.empty()) return 0.0;
    return chamfer_kernel_mean(motion_beats, audio_beats, sigma_b);
}

double pcm(const GestureSequence& gen, const GestureSequence& gt, double delta) {
    check_same_shape(gen, gt);
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw ValidationError("delta must be >= 0");
    std::int64_t correct = 0;
    std::int64_t total = 0;
    for (int t = 0; t < gen.length(); ++t) {
        for (std::size_t k = 0; k < gen.frames[t].size(); ++k) {
            for (int c = 0; c < 2; ++c) {
                if (std::abs(gen.frames[t][k](c) - gt.frames[t][k](c)) <= delta) ++correct;
                ++total;
            }
        }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

double mse(const GestureSequence& gen, const GestureSequence& gt) {
    check_same_shape(gen, gt);
    double total = 0.0;
    std::int64_t count = 0;
    for (int t = 0; t < gen.length(); ++t) {
        for (std::size_t k = 0; k < gen.frames[t].size(); ++k) {
            total += (gen.frames[t][k] - gt.frames[t][k]).squaredNorm();
            count += 2;
        }
    }
    return total / static_cast<double>(count);
}

double velocity_penalty(const GestureSequence& seq) {
    seq.validate();
    if (seq.length() < 2) throw ValidationError("velocity penalty needs at least 2 frames");
    double total = 0.0;
    std::int64_t count = 0;
    for (int t = 1; t < seq.length(); ++t) {
        for (std::size_t k = 0; k < seq.frames[t].size(); ++k) {
            total += (seq.frames[t][k] - seq.frames[t - 1][k]).squaredNorm();
            count += 2;
        }
    }
    return total / static_cast<double>(count);
}

double acceleration_penalty(const GestureSequence& seq) {
    seq.validate();
    if (seq.length() < 3) throw ValidationError("acceleration penalty needs at least 3 frames");
    double total = 0.0;
    std::int64_t count = 0;
    for (int t = 2; t < seq.length(); ++t) {
        for (std::size_t k = 0; k < seq.frames[t].size(); ++k) {
            const Point2 acc =
                seq.frames[t][k] - 2.0 * seq.frames[t - 1][k] + seq.frames[t - 2][k];
            total += acc.squaredNorm();
            count += 2;
        }
    }
    return total / static_cast<double>(count);
}

void MetricReport::validate() const {
    for (const auto& [name, value] : values) {
        if (!std::isfinite(value)) throw NumericalError("metric '" + name + "' is non-finite");
    }
}

std::string MetricReport::to_json() const {
    validate();
    nlohmann::json j;
    j["metrics"] = values;
    j["config"] = config;
    return j.dump(2);
}

}  // namespace gesturekit
