#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "gesturekit/types.hpp"

namespace gesturekit {

struct EdgeSet {
    std::vector<Edge> edges;

    void validate(int point_count) const;
};

struct HeatmapConfig {
    /// Edge thickness. Unset: 0.05 * min(H, W) per resolution.
    std::optional<double> sigma;
    std::vector<std::pair<int, int>> resolutions = {{32, 32}, {64, 64}, {128, 128}};

    double sigma_for(int height, int width) const;
    void validate() const;
};

struct HeatmapGrid {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    void validate() const;  // values in [0, 1], finite
};

struct SegmentDistance {
    double distance = 0.0;
    double t = 0.0;  // normalized projection parameter along the segment
};

/// Distance from p to segment [a, b]: endpoint a for t <= 0, the projection
/// for 0 < t < 1, endpoint b for t >= 1. Coincident endpoints degrade to the
/// point distance with t = 0.
SegmentDistance point_segment_distance(const Point2& p, const Point2& a, const Point2& b);

/// exp(-d^2 / sigma^2) per pixel; 1 exactly on the segment.
HeatmapGrid edge_map(const Point2& ki, const Point2& kj, double sigma, int height, int width);

HeatmapGrid aggregate_max(const std::vector<HeatmapGrid>& maps);

/// One heatmap per configured resolution. Keypoints in canvas coordinates are
/// scaled proportionally to each output size before rasterization.
std::vector<HeatmapGrid> render_skeleton_heatmaps(const KeypointFrame& frame, const EdgeSet& edges,
                                                  const HeatmapConfig& config, double canvas_w,
                                                  double canvas_h);

ImageGrid heatmap_to_image(const HeatmapGrid& map);

}  // namespace gesturekit
