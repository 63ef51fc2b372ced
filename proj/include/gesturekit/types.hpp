#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gesturekit/common.hpp"

namespace gesturekit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Point2 = Eigen::Vector2d;

struct Edge {
    int a = 0;
    int b = 0;
    bool operator==(const Edge&) const = default;
};

/// Keypoint channel split and skeleton connectivity. The default layout is
/// 68 face landmarks plus 48 body points (3 per shoulder/arm triple, 21 per
/// hand), flattening to 136 and 96 scalars per frame.
struct KeypointLayout {
    int face_count = 68;
    int body_count = 48;
    std::vector<Edge> edges;

    int point_count() const { return face_count + body_count; }
    int face_flat_dim() const { return 2 * face_count; }
    int body_flat_dim() const { return 2 * body_count; }

    void validate() const;

    /// Face contour chain, per-hand finger chains, shoulder/arm links.
    /// Matches data/skeleton_edges_v1.json.
    static KeypointLayout standard();
};

/// One frame of 2D keypoints, face points first then body points.
using KeypointFrame = std::vector<Point2>;

struct GestureSequence {
    std::vector<KeypointFrame> frames;
    double fps = 25.0;
    KeypointLayout layout = KeypointLayout::standard();
    double canvas_w = 256.0;
    double canvas_h = 256.0;

    int length() const { return static_cast<int>(frames.size()); }
    void validate() const;
};

enum class FeatureKind : std::uint32_t {
    Speech = 0,
    GestureEmbedding = 1,
    TeacherEmbedding = 2,
};

std::string feature_kind_name(FeatureKind kind);
FeatureKind feature_kind_from_name(const std::string& name);

/// A T x D matrix of finite reals with a provenance tag.
struct FeatureSequence {
    Matrix rows;
    FeatureKind kind = FeatureKind::Speech;

    int length() const { return static_cast<int>(rows.rows()); }
    int dim() const { return static_cast<int>(rows.cols()); }
    void validate() const;
};

struct TimedTranscript {
    struct Segment {
        std::string text;
        double start = 0.0;  // seconds
        double end = 0.0;
    };
    std::vector<Segment> segments;

    void validate() const;
};

/// Dense image, H x W x C, values in [0, 1], row-major with channel innermost.
struct ImageGrid {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> pixels;

    float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    float at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    void validate() const;
};

/// Backward displacement field: destination pixel p samples the source image
/// at p + displacement(p). Channels are (dx, dy); origin top-left, x
/// rightward, y downward; pixel centers at integer coordinates.
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<float> displacement;  // H * W * 2

    float dx(int y, int x) const { return displacement[(static_cast<std::size_t>(y) * width + x) * 2]; }
    float dy(int y, int x) const { return displacement[(static_cast<std::size_t>(y) * width + x) * 2 + 1]; }
    void set(int y, int x, float dx_, float dy_) {
        displacement[(static_cast<std::size_t>(y) * width + x) * 2] = dx_;
        displacement[(static_cast<std::size_t>(y) * width + x) * 2 + 1] = dy_;
    }
    void validate() const;
};

/// Split a sequence into interleaved x,y rows: face T x 136, body T x 96.
/// With normalize set, coordinates are divided by the canvas size (exact to
/// invert for power-of-two canvases).
std::pair<FeatureSequence, FeatureSequence> flatten_frames(const GestureSequence& seq, bool normalize = false);

/// Inverse of flatten_frames.
GestureSequence unflatten_frames(const FeatureSequence& face, const FeatureSequence& body,
                                 const KeypointLayout& layout, double fps, double canvas_w,
                                 double canvas_h, bool normalized = false);

/// Windows start at 0, stride, 2*stride, ...; windows that would overrun are
/// dropped, so the count is max(0, floor((T - window_len) / stride) + 1).
std::vector<GestureSequence> slice_windows(const GestureSequence& seq, int window_len, int stride);

}  // namespace gesturekit
