#include "gesturekit/synth.hpp"

#include <algorithm>
#include <cmath>

namespace gesturekit {

SynthKind synth_kind_from_name(const std::string& name) {
    if (name == "circle-motion") return SynthKind::CircleMotion;
    if (name == "wave-motion") return SynthKind::WaveMotion;
    if (name == "random-walk") return SynthKind::RandomWalk;
    throw ValidationError("unknown synthetic generator: " + name);
}

std::string synth_kind_name(SynthKind kind) {
    switch (kind) {
        case SynthKind::CircleMotion: return "circle-motion";
        case SynthKind::WaveMotion: return "wave-motion";
        case SynthKind::RandomWalk: return "random-walk";
    }
    throw ValidationError("unknown synthetic generator");
}

void SyntheticSpec::validate() const {
    if (frames < 2) throw ValidationError("synthetic clips need at least 2 frames");
    if (!(fps > 0.0)) throw ValidationError("fps must be positive");
    if (!(canvas > 0.0)) throw ValidationError("canvas must be positive");
    if (speech_dim < 1) throw ValidationError("speech dim must be positive");
}

SyntheticSample synth_generate(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    SyntheticSample sample;

    GestureSequence& seq = sample.gesture;
    seq.fps = spec.fps;
    seq.layout = KeypointLayout::standard();
    seq.canvas_w = spec.canvas;
    seq.canvas_h = spec.canvas;
    const int points = seq.layout.point_count();
    const double cx = spec.canvas / 2.0;
    const double cy = spec.canvas / 2.0;

    // Rest pose: scattered inside a centered disc so rigid rotation stays
    // on-canvas and 4-point groups are generically non-collinear.
    std::vector<Point2> rest(points);
    const double max_radius = 0.4 * spec.canvas;
    for (int k = 0; k < points; ++k) {
        const double radius = max_radius * std::sqrt(rng.uniform());
        const double angle = rng.uniform(0.0, 2.0 * M_PI);
        rest[k] = Point2(cx + radius * std::cos(angle), cy + radius * std::sin(angle));
    }

    std::vector<double> phase(points);
    for (int k = 0; k < points; ++k) phase[k] = rng.uniform(0.0, 2.0 * M_PI);

    seq.frames.resize(spec.frames);
    switch (spec.kind) {
        case SynthKind::CircleMotion: {
            const double omega = 2.0 * M_PI / (2.0 * spec.fps);  // one turn per 2 s
            for (int t = 0; t < spec.frames; ++t) {
                const double a = omega * t;
                const double ca = std::cos(a);
                const double sa = std::sin(a);
                KeypointFrame& frame = seq.frames[t];
                frame.resize(points);
                for (int k = 0; k < points; ++k) {
                    const double rx = rest[k].x() - cx;
                    const double ry = rest[k].y() - cy;
                    frame[k] = Point2(cx + ca * rx - sa * ry, cy + sa * rx + ca * ry);
                }
            }
            break;
        }
        case SynthKind::WaveMotion: {
            // Straight-line oscillation with a shared clock: every point
            // reverses together, so the mean speed dips and the clip carries
            // kinematic beats. phase[k] only sets the sway direction.
            const double amp = 0.06 * spec.canvas;
            const double freq = 1.25;  // Hz
            for (int t = 0; t < spec.frames; ++t) {
                // the 0.37 offset keeps reversals off the sample grid, so the
                // speed minima are strict rather than tied plateaus
                const double sway = amp * std::sin(2.0 * M_PI * freq * t / spec.fps + 0.37);
                KeypointFrame& frame = seq.frames[t];
                frame.resize(points);
                for (int k = 0; k < points; ++k) {
                    frame[k] = Point2(
                        std::clamp(rest[k].x() + sway * std::cos(phase[k]), 0.0, spec.canvas - 1.0),
                        std::clamp(rest[k].y() + sway * std::sin(phase[k]), 0.0, spec.canvas - 1.0));
                }
            }
            break;
        }
        case SynthKind::RandomWalk: {
            std::vector<Point2> pos = rest;
            const double step = 0.01 * spec.canvas;
            for (int t = 0; t < spec.frames; ++t) {
                KeypointFrame& frame = seq.frames[t];
                frame.resize(points);
                for (int k = 0; k < points; ++k) {
                    if (t > 0) {
                        pos[k].x() = std::clamp(pos[k].x() + step * rng.normal(), 0.0, spec.canvas - 1.0);
                        pos[k].y() = std::clamp(pos[k].y() + step * rng.normal(), 0.0, spec.canvas - 1.0);
                    }
                    frame[k] = pos[k];
                }
            }
            break;
        }
    }
    seq.validate();

    // Smooth sinusoid bank plus low-amplitude noise as the stand-in speech track.
    FeatureSequence& speech = sample.speech;
    speech.kind = FeatureKind::Speech;
    speech.rows.resize(spec.frames, spec.speech_dim);
    std::vector<double> channel_phase(spec.speech_dim);
    for (int d = 0; d < spec.speech_dim; ++d) channel_phase[d] = rng.uniform(0.0, 2.0 * M_PI);
    for (int t = 0; t < spec.frames; ++t) {
        for (int d = 0; d < spec.speech_dim; ++d) {
            const double base =
                std::sin(2.0 * M_PI * (d + 1) * t / static_cast<double>(spec.frames) + channel_phase[d]);
            speech.rows(t, d) = base + 0.1 * rng.normal();
        }
    }
    speech.validate();

    const double duration = spec.frames / spec.fps;
    const int segments = std::max(2, static_cast<int>(std::lround(duration / 0.8)));
    for (int s = 0; s < segments; ++s) {
        TimedTranscript::Segment seg;
        seg.text = "word" + std::to_string(s);
        seg.start = duration * s / segments;
        seg.end = duration * (s + 1) / segments;
        sample.transcript.segments.push_back(seg);
        sample.audio_beats.push_back(seg.start);
    }
    sample.transcript.validate();
    return sample;
}

}  // namespace gesturekit
