#include "gesturekit/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace gesturekit {

std::vector<int> random_non_identity_permutation(int n, Rng& rng) {
    if (n < 2) throw ValidationError("permutation needs at least 2 elements");
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    const std::vector<int> identity = perm;
    do {
        rng.shuffle(perm);
    } while (perm == identity);
    return perm;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void KeypointLayout::validate() const {
    if (face_count < 0 || body_count < 0 || point_count() < 1) {
        throw ValidationError("layout must have at least one keypoint");
    }
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : edges) {
        if (e.a < 0 || e.b < 0 || e.a >= point_count() || e.b >= point_count()) {
            throw ValidationError("edge index out of range: (" + std::to_string(e.a) + ", " +
                                  std::to_string(e.b) + ")");
        }
        if (e.a == e.b) throw ValidationError("self-edge at index " + std::to_string(e.a));
        auto key = std::minmax(e.a, e.b);
        if (!seen.insert(key).second) {
            throw ValidationError("duplicate edge (" + std::to_string(e.a) + ", " +
                                  std::to_string(e.b) + ")");
        }
    }
}

KeypointLayout KeypointLayout::standard() {
    KeypointLayout layout;
    layout.face_count = 68;
    layout.body_count = 48;
    auto chain = [&layout](int from, int to) {
        for (int i = from; i < to; ++i) layout.edges.push_back({i, i + 1});
    };
    // Face contour (jaw) chain, landmarks 0..16.
    chain(0, 16);
    const int body = 68;
    const int lsh = body;        // left shoulder/arm triple
    const int rsh = body + 3;    // right shoulder/arm triple
    const int lhand = body + 6;  // 21 left-hand points, wrist first
    const int rhand = body + 27; // 21 right-hand points, wrist first
    chain(lsh, lsh + 2);
    chain(rsh, rsh + 2);
    layout.edges.push_back({lsh, rsh});          // across the shoulders
    layout.edges.push_back({lsh + 2, lhand});    // arm end to wrist
    layout.edges.push_back({rsh + 2, rhand});
    // Five finger chains per hand: wrist -> 4 phalanx points each.
    for (int wrist : {lhand, rhand}) {
        for (int f = 0; f < 5; ++f) {
            const int base = wrist + 1 + 4 * f;
            layout.edges.push_back({wrist, base});
            chain(base, base + 3);
        }
    }
    return layout;
}

void GestureSequence::validate() const {
    layout.validate();
    if (frames.empty()) throw ValidationError("gesture sequence must have at least one frame");
    if (!(fps > 0.0) || !std::isfinite(fps)) throw ValidationError("fps must be positive and finite");
    if (!(canvas_w > 0.0) || !(canvas_h > 0.0)) throw ValidationError("canvas size must be positive");
    const std::size_t expected = static_cast<std::size_t>(layout.point_count());
    for (std::size_t t = 0; t < frames.size(); ++t) {
        if (frames[t].size() != expected) {
            throw ValidationError("frame " + std::to_string(t) + " has " +
                                  std::to_string(frames[t].size()) + " points, layout expects " +
                                  std::to_string(expected));
        }
        for (const Point2& p : frames[t]) {
            if (!p.allFinite()) {
                throw ValidationError("non-finite keypoint in frame " + std::to_string(t));
            }
        }
    }
}

std::string feature_kind_name(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::Speech: return "speech";
        case FeatureKind::GestureEmbedding: return "gesture-embedding";
        case FeatureKind::TeacherEmbedding: return "teacher-embedding";
    }
    throw ValidationError("unknown feature kind");
}

FeatureKind feature_kind_from_name(const std::string& name) {
    if (name == "speech") return FeatureKind::Speech;
    if (name == "gesture-embedding") return FeatureKind::GestureEmbedding;
    if (name == "teacher-embedding") return FeatureKind::TeacherEmbedding;
    throw ValidationError("unknown feature kind: " + name);
}

void FeatureSequence::validate() const {
    if (rows.rows() < 1 || rows.cols() < 1) {
        throw ValidationError("feature sequence must be at least 1x1");
    }
    if (!rows.allFinite()) throw ValidationError("feature sequence contains non-finite values");
}

void TimedTranscript::validate() const {
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const Segment& s = segments[i];
        if (!std::isfinite(s.start) || !std::isfinite(s.end)) {
            throw ValidationError("segment " + std::to_string(i) + " has non-finite times");
        }
        if (!(s.start >= 0.0) || !(s.start < s.end)) {
            throw ValidationError("segment " + std::to_string(i) +
                                  " violates 0 <= start < end (start=" + std::to_string(s.start) +
                                  ", end=" + std::to_string(s.end) + ")");
        }
        if (i > 0 && s.start < segments[i - 1].end) {
            throw ValidationError("segment " + std::to_string(i) + " overlaps previous segment");
        }
    }
}

void ImageGrid::validate() const {
    if (height < 1 || width < 1 || channels < 1) {
        throw ValidationError("image dimensions must be positive");
    }
    if (pixels.size() != static_cast<std::size_t>(height) * width * channels) {
        throw ValidationError("pixel buffer size does not match declared dimensions");
    }
    for (float v : pixels) {
        if (!std::isfinite(v)) throw ValidationError("image contains non-finite pixel");
    }
}

void FlowField::validate() const {
    if (height < 1 || width < 1) throw ValidationError("flow dimensions must be positive");
    if (displacement.size() != static_cast<std::size_t>(height) * width * 2) {
        throw ValidationError("flow buffer size does not match declared dimensions");
    }
    for (float v : displacement) {
        if (!std::isfinite(v)) throw ValidationError("flow contains non-finite displacement");
    }
}

std::pair<FeatureSequence, FeatureSequence> flatten_frames(const GestureSequence& seq, bool normalize) {
    seq.validate();
    const int T = seq.length();
    const KeypointLayout& layout = seq.layout;
    FeatureSequence face{Matrix(T, layout.face_flat_dim()), FeatureKind::GestureEmbedding};
    FeatureSequence body{Matrix(T, layout.body_flat_dim()), FeatureKind::GestureEmbedding};
    const double sx = normalize ? 1.0 / seq.canvas_w : 1.0;
    const double sy = normalize ? 1.0 / seq.canvas_h : 1.0;
    for (int t = 0; t < T; ++t) {
        const KeypointFrame& frame = seq.frames[t];
        for (int i = 0; i < layout.face_count; ++i) {
            face.rows(t, 2 * i) = frame[i].x() * sx;
            face.rows(t, 2 * i + 1) = frame[i].y() * sy;
        }
        for (int i = 0; i < layout.body_count; ++i) {
            const Point2& p = frame[layout.face_count + i];
            body.rows(t, 2 * i) = p.x() * sx;
            body.rows(t, 2 * i + 1) = p.y() * sy;
        }
    }
    return {std::move(face), std::move(body)};
}

GestureSequence unflatten_frames(const FeatureSequence& face, const FeatureSequence& body,
                                 const KeypointLayout& layout, double fps, double canvas_w,
                                 double canvas_h, bool normalized) {
    face.validate();
    body.validate();
    layout.validate();
    if (face.dim() != layout.face_flat_dim() || body.dim() != layout.body_flat_dim()) {
        throw ValidationError("flattened dims (" + std::to_string(face.dim()) + ", " +
                              std::to_string(body.dim()) + ") do not match layout (" +
                              std::to_string(layout.face_flat_dim()) + ", " +
                              std::to_string(layout.body_flat_dim()) + ")");
    }
    if (face.length() != body.length()) {
        throw ValidationError("face and body sequences have different lengths");
    }
    GestureSequence seq;
    seq.fps = fps;
    seq.layout = layout;
    seq.canvas_w = canvas_w;
    seq.canvas_h = canvas_h;
    const double sx = normalized ? canvas_w : 1.0;
    const double sy = normalized ? canvas_h : 1.0;
    seq.frames.resize(face.length());
    for (int t = 0; t < face.length(); ++t) {
        KeypointFrame& frame = seq.frames[t];
        frame.resize(layout.point_count());
        for (int i = 0; i < layout.face_count; ++i) {
            frame[i] = Point2(face.rows(t, 2 * i) * sx, face.rows(t, 2 * i + 1) * sy);
        }
        for (int i = 0; i < layout.body_count; ++i) {
            frame[layout.face_count + i] =
                Point2(body.rows(t, 2 * i) * sx, body.rows(t, 2 * i + 1) * sy);
        }
    }
    seq.validate();
    return seq;
}

std::vector<GestureSequence> slice_windows(const GestureSequence& seq, int window_len, int stride) {
    seq.validate();
    if (window_len < 1) throw ValidationError("window_len must be >= 1");
    if (stride < 1) throw ValidationError("stride must be >= 1");
    std::vector<GestureSequence> windows;
    const int T = seq.length();
    for (int start = 0; start + window_len <= T; start += stride) {
        GestureSequence w;
        w.fps = seq.fps;
        w.layout = seq.layout;
        w.canvas_w = seq.canvas_w;
        w.canvas_h = seq.canvas_h;
        w.frames.assign(seq.frames.begin() + start, seq.frames.begin() + start + window_len);
        windows.push_back(std::move(w));
    }
    return windows;
}

}  // namespace gesturekit
