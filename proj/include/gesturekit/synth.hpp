#pragma once

#include <cstdint>
#include <string>

#include "gesturekit/types.hpp"

namespace gesturekit {

enum class SynthKind {
    CircleMotion,  // constant-speed rotation, no kinematic beats
    WaveMotion,    // sinusoidal sway with periodic speed dips
    RandomWalk,
};

SynthKind synth_kind_from_name(const std::string& name);
std::string synth_kind_name(SynthKind kind);

struct SyntheticSpec {
    SynthKind kind = SynthKind::CircleMotion;
    int frames = 80;
    std::uint64_t seed = 0;
    double fps = 25.0;
    double canvas = 256.0;
    int speech_dim = 32;

    void validate() const;
};

struct SyntheticSample {
    GestureSequence gesture;
    FeatureSequence speech;
    TimedTranscript transcript;
    std::vector<double> audio_beats;  // segment starts, seconds
};

/// Deterministic per seed. Keypoints stay inside the canvas and the
/// transcript segments tile the clip duration.
SyntheticSample synth_generate(const SyntheticSpec& spec);

}  // namespace gesturekit
