#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gesturekit/common.hpp"

namespace gesturekit {

/// Pipeline configuration, read from an INI-style file with nested sections.
/// Unknown sections or keys are rejected. GESTUREKIT_SEED in the environment
/// overrides [pipeline] seed.
struct PipelineConfig {
    // [pipeline]
    std::uint64_t seed = 1;
    int canvas = 256;
    int window_len = 80;
    int stride = 10;

    // [synth]
    std::string synth_kind = "circle-motion";
    int synth_frames = 80;

    // [rvq]
    int rvq_layers = 6;
    int rvq_codes = 1024;
    int rvq_dim = 128;
    int rvq_epochs = 25;

    // [decode]
    int decode_steps = 5;
    double ratio_low = 0.5;
    double ratio_high = 1.0;
    std::string predictor = "toy";  // toy | oracle | uniform

    // [tps]
    int tps_transforms = 29;
    int tps_points = 4;
    double tps_regularization = 0.0;

    // [heatmap]
    std::vector<int> heatmap_sizes = {32, 64, 128};
    double heatmap_sigma = 0.0;  // 0 = 0.05 * min(H, W) per resolution

    // [align]
    double temperature = 0.7;

    // [metrics]
    double pcm_delta = 0.0;  // 0 = 0.05 * canvas
    double sigma_b = 0.1;

    // [paths] optional inputs; empty means synthesize
    std::string keypoints_path;
    std::string speech_path;
    std::string transcript_path;

    void validate() const;

    /// Canonical text form; parse(serialize()) round-trips exactly.
    std::string serialize() const;
    std::uint64_t hash() const { return fnv1a64(serialize()); }

    static PipelineConfig parse_text(const std::string& text);
    static PipelineConfig parse_file(const std::filesystem::path& path);
};

}  // namespace gesturekit
