#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gesturekit/types.hpp"

namespace gesturekit {

// File formats (all multi-byte integers and floats little-endian):
//   keypoints   JSON-lines, one frame per line: {"t":int,"face":[[x,y]x68],"body":[[x,y]x48]}
//   features    16-byte header (magic "GKFT", T u32, D u32, kind u32) + T*D float32,
//               or CSV with a header row of column names
//   transcript  JSON array of {"text","start","end"} in seconds
//   images      8-bit PNG, grayscale or RGB
//   flows       16-byte header (magic "GKFL", H u32, W u32, convention u32) + H*W*2 float32;
//               convention 0 = integer pixel centers, backward displacement (dx, dy)
//   heatmaps    16-byte header (magic "GKHM", H u32, W u32, 0) + H*W float32

void save_keypoints_jsonl(const std::filesystem::path& path, const GestureSequence& seq);
GestureSequence load_keypoints_jsonl(const std::filesystem::path& path, double fps = 25.0,
                                     double canvas_w = 256.0, double canvas_h = 256.0);

void save_features_bin(const std::filesystem::path& path, const FeatureSequence& features);
FeatureSequence load_features_bin(const std::filesystem::path& path);

void save_features_csv(const std::filesystem::path& path, const FeatureSequence& features);
FeatureSequence load_features_csv(const std::filesystem::path& path,
                                  FeatureKind kind = FeatureKind::Speech);

/// Dispatch on extension: .bin -> binary, .csv -> CSV.
FeatureSequence load_features(const std::filesystem::path& path);

void save_transcript_json(const std::filesystem::path& path, const TimedTranscript& transcript);
TimedTranscript load_transcript_json(const std::filesystem::path& path);

void save_png(const std::filesystem::path& path, const ImageGrid& image);
ImageGrid load_png(const std::filesystem::path& path);

void save_flow_bin(const std::filesystem::path& path, const FlowField& flow);
FlowField load_flow_bin(const std::filesystem::path& path);

void save_beats_json(const std::filesystem::path& path, const std::vector<double>& beats);
std::vector<double> load_beats_json(const std::filesystem::path& path);

}  // namespace gesturekit
