#include "gesturekit/tps.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

namespace gesturekit {

void ControlPointSet::validate() const {
    if (size() < 3) throw ValidationError("TPS needs at least 3 control point pairs");
    for (const Pair& p : pairs) {
        if (!p.driving.allFinite() || !p.source.allFinite()) {
            throw ValidationError("control points must be finite");
        }
    }
}

void TPSParams::validate(double tol) const {
    if (weights.cols() != 2 || anchors.cols() != 2 || weights.rows() != anchors.rows()) {
        throw ValidationError("TPS parameter shapes inconsistent");
    }
    if (!affine.allFinite() || !weights.allFinite() || !anchors.allFinite()) {
        throw ValidationError("TPS parameters must be finite");
    }
    const Eigen::RowVector2d wsum = weights.colwise().sum();
    const Eigen::RowVector2d wx = (weights.array().colwise() * anchors.col(0).array()).colwise().sum();
    const Eigen::RowVector2d wy = (weights.array().colwise() * anchors.col(1).array()).colwise().sum();
    if (wsum.norm() > tol || wx.norm() > tol || wy.norm() > tol) {
        throw ValidationError("TPS side conditions violated");
    }
}

void WarpConfig::validate() const {
    if (transforms < 1 || points_per_transform < 3 || canvas_h < 1 || canvas_w < 1) {
        throw ValidationError("warp config out of range");
    }
}

double radial_basis(double r) {
    if (r < 0.0 || !std::isfinite(r)) throw ValidationError("radial basis needs finite r >= 0");
    if (r == 0.0) return 0.0;
    const double r2 = r * r;
    return r2 * std::log(r2);
}

namespace {

Matrix build_system(const ControlPointSet& ctrl, double regularization) {
    const int n = ctrl.size();
    Matrix L = Matrix::Zero(n + 3, n + 3);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double u = radial_basis((ctrl.pairs[i].driving - ctrl.pairs[j].driving).norm());
            L(i, j) = u;
            L(j, i) = u;
        }
        L(i, n) = 1.0;
        L(i, n + 1) = ctrl.pairs[i].driving.x();
        L(i, n + 2) = ctrl.pairs[i].driving.y();
        L(n, i) = 1.0;
        L(n + 1, i) = ctrl.pairs[i].driving.x();
        L(n + 2, i) = ctrl.pairs[i].driving.y();
    }
    if (regularization > 0.0) L.diagonal().array() += regularization;
    return L;
}

/// Residual Y - L*theta accumulated in long double, for iterative refinement.
Matrix long_residual(const Matrix& L, const Matrix& theta, const Matrix& Y) {
    Matrix r(Y.rows(), Y.cols());
    for (int i = 0; i < Y.rows(); ++i) {
        for (int c = 0; c < Y.cols(); ++c) {
            long double acc = static_cast<long double>(Y(i, c));
            for (int j = 0; j < L.cols(); ++j) {
                acc -= static_cast<long double>(L(i, j)) * static_cast<long double>(theta(j, c));
            }
            r(i, c) = static_cast<double>(acc);
        }
    }
    return r;
}

}  // namespace

TPSParams tps_fit(const ControlPointSet& ctrl, double regularization) {
    ctrl.validate();
    if (regularization < 0.0 || !std::isfinite(regularization)) {
        throw ValidationError("regularization must be finite and >= 0");
    }
    const int n = ctrl.size();
    const Matrix L = build_system(ctrl, regularization);
    Matrix Y = Matrix::Zero(n + 3, 2);
    for (int i = 0; i < n; ++i) {
        Y(i, 0) = ctrl.pairs[i].source.x();
        Y(i, 1) = ctrl.pairs[i].source.y();
    }

    Eigen::FullPivLU<Matrix> lu(L);
    if (!lu.isInvertible()) {
        throw NumericalError("degenerate control configuration (duplicate or collinear points); "
                             "supply regularization > 0");
    }
    Matrix theta = lu.solve(Y);
    for (int iter = 0; iter < 3; ++iter) {
        const Matrix r = long_residual(L, theta, Y);
        if (r.cwiseAbs().maxCoeff() < 1e-13) break;
        theta += lu.solve(r);
    }

    TPSParams params;
    params.weights = theta.topRows(n);
    params.anchors.resize(n, 2);
    for (int i = 0; i < n; ++i) {
        params.anchors(i, 0) = ctrl.pairs[i].driving.x();
        params.anchors(i, 1) = ctrl.pairs[i].driving.y();
    }
    // P columns are [1, x, y]; affine acts on [x, y, 1].
    for (int dim = 0; dim < 2; ++dim) {
        params.affine(dim, 0) = theta(n + 1, dim);
        params.affine(dim, 1) = theta(n + 2, dim);
        params.affine(dim, 2) = theta(n, dim);
    }
    double residual = 0.0;
    for (int i = 0; i < n; ++i) {
        const Point2 mapped = tps_eval_point(params, ctrl.pairs[i].driving);
        residual = std::max(residual, (mapped - ctrl.pairs[i].source).norm());
    }
    params.fit_residual = residual;
    if (!params.affine.allFinite() || !params.weights.allFinite()) {
        throw NumericalError("TPS solve produced non-finite parameters");
    }
    return params;
}

Point2 tps_eval_point(const TPSParams& params, const Point2& p) {
    double x = params.affine(0, 0) * p.x() + params.affine(0, 1) * p.y() + params.affine(0, 2);
    double y = params.affine(1, 0) * p.x() + params.affine(1, 1) * p.y() + params.affine(1, 2);
    for (int i = 0; i < params.anchors.rows(); ++i) {
        const double dx = params.anchors(i, 0) - p.x();
        const double dy = params.anchors(i, 1) - p.y();
        const double u = radial_basis(std::sqrt(dx * dx + dy * dy));
        x += params.weights(i, 0) * u;
        y += params.weights(i, 1) * u;
    }
    return Point2(x, y);
}

std::vector<Point2> tps_eval(const TPSParams& params, const std::vector<Point2>& points) {
    std::vector<Point2> out;
    out.reserve(points.size());
    for (const Point2& p : points) out.push_back(tps_eval_point(params, p));
    return out;
}

FlowField tps_flow_grid(const TPSParams& params, int height, int width) {
    if (height < 1 || width < 1) throw ValidationError("flow grid dimensions must be positive");
    FlowField flow;
    flow.height = height;
    flow.width = width;
    flow.displacement.resize(static_cast<std::size_t>(height) * width * 2);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Point2 mapped = tps_eval_point(params, Point2(x, y));
            flow.set(y, x, static_cast<float>(mapped.x() - x), static_cast<float>(mapped.y() - y));
        }
    }
    return flow;
}

WeightGrid WeightGrid::uniform(int height, int width, int maps) {
    if (height < 1 || width < 1 || maps < 1) throw ValidationError("weight grid dims must be positive");
    WeightGrid w;
    w.height = height;
    w.width = width;
    w.maps = maps;
    w.values.assign(static_cast<std::size_t>(height) * width * maps, 1.0f / maps);
    return w;
}

FlowField combine_flows(const std::vector<FlowField>& flows, const WeightGrid& weights) {
    if (flows.empty()) throw ValidationError("no flows to combine");
    const int h = flows.front().height;
    const int w = flows.front().width;
    for (const FlowField& f : flows) {
        f.validate();
        if (f.height != h || f.width != w) throw ValidationError("flows disagree on dimensions");
    }
    if (weights.height != h || weights.width != w ||
        weights.maps != static_cast<int>(flows.size()) ||
        weights.values.size() != static_cast<std::size_t>(h) * w * weights.maps) {
        throw ValidationError("weight grid does not match flows");
    }
    FlowField out;
    out.height = h;
    out.width = w;
    out.displacement.assign(static_cast<std::size_t>(h) * w * 2, 0.0f);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sum = 0.0;
            double dx = 0.0;
            double dy = 0.0;
            for (int k = 0; k < weights.maps; ++k) {
                const float wk = weights.at(y, x, k);
                if (wk < 0.0f) {
                    throw ValidationError("negative weight at pixel (" + std::to_string(x) + ", " +
                                          std::to_string(y) + ")");
                }
                sum += wk;
                dx += static_cast<double>(wk) * flows[k].dx(y, x);
                dy += static_cast<double>(wk) * flows[k].dy(y, x);
            }
            if (std::abs(sum - 1.0) > 1e-6) {
                throw ValidationError("weights sum to " + std::to_string(sum) + " at pixel (" +
                                      std::to_string(x) + ", " + std::to_string(y) + ")");
            }
            out.set(y, x, static_cast<float>(dx), static_cast<float>(dy));
        }
    }
    return out;
}

namespace {

ImageGrid warp_impl(const ImageGrid& image, const FlowField& flow, const ImageGrid* occlusion) {
    image.validate();
    flow.validate();
    if (image.height != flow.height || image.width != flow.width) {
        throw ValidationError("image and flow dimensions differ");
    }
    if (occlusion) {
        occlusion->validate();
        if (occlusion->height != image.height || occlusion->width != image.width ||
            occlusion->channels != 1) {
            throw ValidationError("occlusion mask must be single-channel and match the image size");
        }
    }
    ImageGrid out;
    out.height = image.height;
    out.width = image.width;
    out.channels = image.channels;
    out.pixels.resize(image.pixels.size());
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const double sx = std::clamp(static_cast<double>(x) + flow.dx(y, x), 0.0,
                                         static_cast<double>(image.width - 1));
            const double sy = std::clamp(static_cast<double>(y) + flow.dy(y, x), 0.0,
                                         static_cast<double>(image.height - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const int x1 = std::min(x0 + 1, image.width - 1);
            const int y1 = std::min(y0 + 1, image.height - 1);
            const double fx = sx - x0;
            const double fy = sy - y0;
            const double mask = occlusion ? occlusion->at(y, x, 0) : 1.0;
            for (int c = 0; c < image.channels; ++c) {
                const double top = (1.0 - fx) * image.at(y0, x0, c) + fx * image.at(y0, x1, c);
                const double bottom = (1.0 - fx) * image.at(y1, x0, c) + fx * image.at(y1, x1, c);
                out.at(y, x, c) = static_cast<float>(((1.0 - fy) * top + fy * bottom) * mask);
            }
        }
    }
    return out;
}

}  // namespace

ImageGrid warp_image(const ImageGrid& image, const FlowField& flow) {
    return warp_impl(image, flow, nullptr);
}

ImageGrid warp_image(const ImageGrid& image, const FlowField& flow, const ImageGrid& occlusion) {
    return warp_impl(image, flow, &occlusion);
}

}  // namespace gesturekit
