#pragma once

#include <optional>
#include <vector>

#include "gesturekit/types.hpp"

namespace gesturekit {

/// Paired control points: driving-image anchors and their source-image targets.
struct ControlPointSet {
    struct Pair {
        Point2 driving;
        Point2 source;
    };
    std::vector<Pair> pairs;

    int size() const { return static_cast<int>(pairs.size()); }
    void validate() const;  // N >= 3, finite coordinates
};

/// Fitted thin-plate-spline transform T(p) = A [p; 1] + sum_i w_i U(||anchor_i - p||).
struct TPSParams {
    Eigen::Matrix<double, 2, 3> affine;  // columns: x coefficient, y coefficient, constant
    Matrix weights;                      // N x 2
    Matrix anchors;                      // N x 2 driving control points
    double fit_residual = 0.0;           // max control-point residual (nonzero under regularization)

    void validate(double tol = 1e-8) const;  // side conditions sum(w) = 0, sum(w * anchor) = 0
};

struct WarpConfig {
    int transforms = 29;
    int points_per_transform = 4;
    int canvas_h = 256;
    int canvas_w = 256;

    void validate() const;
};

/// U(r) = r^2 log r^2, continuously extended with U(0) = 0.
double radial_basis(double r);

/// Solve [w; A]^T = L^-1 Y. Degenerate configurations (duplicate or collinear
/// anchors) throw unless regularization > 0, which solves L + lambda*I and
/// reports the relaxed residual in fit_residual.
TPSParams tps_fit(const ControlPointSet& ctrl, double regularization = 0.0);

Point2 tps_eval_point(const TPSParams& params, const Point2& p);
std::vector<Point2> tps_eval(const TPSParams& params, const std::vector<Point2>& points);

/// displacement(p) = T(p) - p at every integer pixel center.
FlowField tps_flow_grid(const TPSParams& params, int height, int width);

/// Per-pixel convex combination weights for K flows.
struct WeightGrid {
    int height = 0;
    int width = 0;
    int maps = 0;
    std::vector<float> values;  // H * W * K

    float at(int y, int x, int k) const {
        return values[(static_cast<std::size_t>(y) * width + x) * maps + k];
    }
    float& at(int y, int x, int k) {
        return values[(static_cast<std::size_t>(y) * width + x) * maps + k];
    }
    static WeightGrid uniform(int height, int width, int maps);
};

FlowField combine_flows(const std::vector<FlowField>& flows, const WeightGrid& weights);

/// Bilinear backward warp with border clamp; the optional single-channel
/// occlusion mask multiplies the result.
ImageGrid warp_image(const ImageGrid& image, const FlowField& flow);
ImageGrid warp_image(const ImageGrid& image, const FlowField& flow, const ImageGrid& occlusion);

}  // namespace gesturekit
