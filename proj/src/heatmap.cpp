#include "gesturekit/heatmap.hpp"

#include <algorithm>
#include <cmath>

namespace gesturekit {

void EdgeSet::validate(int point_count) const {
    if (edges.empty()) throw ValidationError("edge set is empty");
    std::vector<std::pair<int, int>> seen;
    for (const Edge& e : edges) {
        if (e.a < 0 || e.b < 0 || e.a >= point_count || e.b >= point_count) {
            throw ValidationError("edge (" + std::to_string(e.a) + ", " + std::to_string(e.b) +
                                  ") outside keypoint range [0, " + std::to_string(point_count) + ")");
        }
        const std::pair<int, int> key = std::minmax(e.a, e.b);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
            throw ValidationError("duplicate edge (" + std::to_string(e.a) + ", " +
                                  std::to_string(e.b) + ")");
        }
        seen.push_back(key);
    }
}

double HeatmapConfig::sigma_for(int height, int width) const {
    if (sigma) return *sigma;
    return 0.05 * std::min(height, width);
}

void HeatmapConfig::validate() const {
    if (sigma && !(*sigma > 0.0)) throw ValidationError("sigma must be positive");
    if (resolutions.empty()) throw ValidationError("no output resolutions configured");
    for (auto [h, w] : resolutions) {
        if (h < 1 || w < 1) throw ValidationError("resolution dimensions must be positive");
    }
}

void HeatmapGrid::validate() const {
    if (height < 1 || width < 1) throw ValidationError("heatmap dimensions must be positive");
    if (values.size() != static_cast<std::size_t>(height) * width) {
        throw ValidationError("heatmap buffer size does not match dimensions");
    }
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw ValidationError("heatmap value outside [0, 1]");
        }
    }
}

SegmentDistance point_segment_distance(const Point2& p, const Point2& a, const Point2& b) {
    const Point2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return {(p - a).norm(), 0.0};
    const double t = (p - a).dot(ab) / len2;
    if (t <= 0.0) return {(p - a).norm(), t};
    if (t >= 1.0) return {(p - b).norm(), t};
    return {(p - (a + t * ab)).norm(), t};
}

HeatmapGrid edge_map(const Point2& ki, const Point2& kj, double sigma, int height, int width) {
    if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
    if (height < 1 || width < 1) throw ValidationError("heatmap dimensions must be positive");
    HeatmapGrid map;
    map.height = height;
    map.width = width;
    map.values.resize(static_cast<std::size_t>(height) * width);
    const double inv_sigma2 = 1.0 / (sigma * sigma);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const auto [d, t] = point_segment_distance(Point2(x, y), ki, kj);
            map.at(y, x) = std::exp(-d * d * inv_sigma2);
        }
    }
    return map;
}

HeatmapGrid aggregate_max(const std::vector<HeatmapGrid>& maps) {
    if (maps.empty()) throw ValidationError("cannot aggregate an empty heatmap list");
    HeatmapGrid out = maps.front();
    for (std::size_t i = 1; i < maps.size(); ++i) {
        if (maps[i].height != out.height || maps[i].width != out.width) {
            throw ValidationError("heatmaps disagree on dimensions");
        }
        for (std::size_t k = 0; k < out.values.size(); ++k) {
            out.values[k] = std::max(out.values[k], maps[i].values[k]);
        }
    }
    return out;
}

std::vector<HeatmapGrid> render_skeleton_heatmaps(const KeypointFrame& frame, const EdgeSet& edges,
                                                  const HeatmapConfig& config, double canvas_w,
                                                  double canvas_h) {
    config.validate();
    edges.validate(static_cast<int>(frame.size()));
    if (!(canvas_w > 0.0) || !(canvas_h > 0.0)) throw ValidationError("canvas size must be positive");
    for (const Point2& p : frame) {
        if (!p.allFinite()) throw ValidationError("non-finite keypoint");
    }
    std::vector<HeatmapGrid> result;
    result.reserve(config.resolutions.size());
    for (auto [h, w] : config.resolutions) {
        const double sx = static_cast<double>(w) / canvas_w;
        const double sy = static_cast<double>(h) / canvas_h;
        const double sigma = config.sigma_for(h, w);
        std::vector<HeatmapGrid> per_edge;
        per_edge.reserve(edges.edges.size());
        for (const Edge& e : edges.edges) {
            const Point2 a(frame[e.a].x() * sx, frame[e.a].y() * sy);
            const Point2 b(frame[e.b].x() * sx, frame[e.b].y() * sy);
            per_edge.push_back(edge_map(a, b, sigma, h, w));
        }
        result.push_back(aggregate_max(per_edge));
    }
    return result;
}

ImageGrid heatmap_to_image(const HeatmapGrid& map) {
    map.validate();
    ImageGrid image;
    image.height = map.height;
    image.width = map.width;
    image.channels = 1;
    image.pixels.resize(map.values.size());
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        image.pixels[i] = static_cast<float>(map.values[i]);
    }
    return image;
}

}  // namespace gesturekit
