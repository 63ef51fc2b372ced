#include "gesturekit/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gesturekit/synth.hpp"

namespace gesturekit {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw ValidationError("config key '" + key + "': cannot parse number '" + value + "'");
    }
    return v;
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
    std::int64_t v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw ValidationError("config key '" + key + "': cannot parse integer '" + value + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw ValidationError("config key '" + key + "': cannot parse unsigned '" + value + "'");
    }
    return v;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(static_cast<int>(parse_int(key, trim(item))));
    }
    if (out.empty()) throw ValidationError("config key '" + key + "': empty list");
    return out;
}

}  // namespace

void PipelineConfig::validate() const {
    if (canvas < 8) throw ValidationError("pipeline.canvas must be >= 8");
    if (window_len < 2) throw ValidationError("pipeline.window_len must be >= 2");
    if (stride < 1) throw ValidationError("pipeline.stride must be >= 1");
    synth_kind_from_name(synth_kind);  // throws on unknown kind
    if (synth_frames < 2) throw ValidationError("synth.frames must be >= 2");
    if (rvq_layers < 1) throw ValidationError("rvq.layers must be >= 1");
    if (rvq_codes < 1) throw ValidationError("rvq.codes must be >= 1");
    if (rvq_dim < 1) throw ValidationError("rvq.dim must be >= 1");
    if (rvq_epochs < 1) throw ValidationError("rvq.epochs must be >= 1");
    if (decode_steps < 1) throw ValidationError("decode.steps must be >= 1");
    if (!(0.0 <= ratio_low && ratio_low <= ratio_high && ratio_high <= 1.0)) {
        throw ValidationError("decode ratio bounds must satisfy 0 <= low <= high <= 1");
    }
    if (predictor != "toy" && predictor != "oracle" && predictor != "uniform") {
        throw ValidationError("decode.predictor must be toy, oracle, or uniform");
    }
    if (tps_transforms < 1) throw ValidationError("tps.transforms must be >= 1");
    if (tps_points < 3) throw ValidationError("tps.points_per_transform must be >= 3");
    if (tps_regularization < 0.0) throw ValidationError("tps.regularization must be >= 0");
    if (heatmap_sizes.empty()) throw ValidationError("heatmap.sizes must not be empty");
    for (int s : heatmap_sizes) {
        if (s < 1) throw ValidationError("heatmap.sizes entries must be positive");
    }
    if (heatmap_sigma < 0.0) throw ValidationError("heatmap.sigma must be >= 0 (0 = auto)");
    if (!(temperature > 0.0)) throw ValidationError("align.temperature must be positive");
    if (pcm_delta < 0.0) throw ValidationError("metrics.pcm_delta must be >= 0 (0 = auto)");
    if (!(sigma_b > 0.0)) throw ValidationError("metrics.sigma_b must be positive");
}

std::string PipelineConfig::serialize() const {
    std::ostringstream out;
    out << "[pipeline]\n";
    out << "seed = " << seed << "\n";
    out << "canvas = " << canvas << "\n";
    out << "window_len = " << window_len << "\n";
    out << "stride = " << stride << "\n";
    out << "[synth]\n";
    out << "kind = " << synth_kind << "\n";
    out << "frames = " << synth_frames << "\n";
    out << "[rvq]\n";
    out << "layers = " << rvq_layers << "\n";
    out << "codes = " << rvq_codes << "\n";
    out << "dim = " << rvq_dim << "\n";
    out << "epochs = " << rvq_epochs << "\n";
    out << "[decode]\n";
    out << "steps = " << decode_steps << "\n";
    out << "ratio_low = " << format_double(ratio_low) << "\n";
    out << "ratio_high = " << format_double(ratio_high) << "\n";
    out << "predictor = " << predictor << "\n";
    out << "[tps]\n";
    out << "transforms = " << tps_transforms << "\n";
    out << "points_per_transform = " << tps_points << "\n";
    out << "regularization = " << format_double(tps_regularization) << "\n";
    out << "[heatmap]\n";
    out << "sizes = ";
    for (std::size_t i = 0; i < heatmap_sizes.size(); ++i) {
        out << (i ? "," : "") << heatmap_sizes[i];
    }
    out << "\n";
    out << "sigma = " << format_double(heatmap_sigma) << "\n";
    out << "[align]\n";
    out << "temperature = " << format_double(temperature) << "\n";
    out << "[metrics]\n";
    out << "pcm_delta = " << format_double(pcm_delta) << "\n";
    out << "sigma_b = " << format_double(sigma_b) << "\n";
    out << "[paths]\n";
    out << "keypoints = " << keypoints_path << "\n";
    out << "speech = " << speech_path << "\n";
    out << "transcript = " << transcript_path << "\n";
    return out.str();
}

PipelineConfig PipelineConfig::parse_text(const std::string& text) {
    PipelineConfig config;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw ValidationError("config line " + std::to_string(line_no) + ": unclosed section");
            }
            section = t.substr(1, t.size() - 2);
            static const char* known[] = {"pipeline", "synth", "rvq", "decode", "tps",
                                          "heatmap", "align", "metrics", "paths"};
            if (std::find_if(std::begin(known), std::end(known),
                             [&section](const char* k) { return section == k; }) == std::end(known)) {
                throw ValidationError("unknown config section [" + section + "]");
            }
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const std::string qual = section + "." + key;
        if (qual == "pipeline.seed") config.seed = parse_u64(qual, value);
        else if (qual == "pipeline.canvas") config.canvas = static_cast<int>(parse_int(qual, value));
        else if (qual == "pipeline.window_len") config.window_len = static_cast<int>(parse_int(qual, value));
        else if (qual == "pipeline.stride") config.stride = static_cast<int>(parse_int(qual, value));
        else if (qual == "synth.kind") config.synth_kind = value;
        else if (qual == "synth.frames") config.synth_frames = static_cast<int>(parse_int(qual, value));
        else if (qual == "rvq.layers") config.rvq_layers = static_cast<int>(parse_int(qual, value));
        else if (qual == "rvq.codes") config.rvq_codes = static_cast<int>(parse_int(qual, value));
        else if (qual == "rvq.dim") config.rvq_dim = static_cast<int>(parse_int(qual, value));
        else if (qual == "rvq.epochs") config.rvq_epochs = static_cast<int>(parse_int(qual, value));
        else if (qual == "decode.steps") config.decode_steps = static_cast<int>(parse_int(qual, value));
        else if (qual == "decode.ratio_low") config.ratio_low = parse_double(qual, value);
        else if (qual == "decode.ratio_high") config.ratio_high = parse_double(qual, value);
        else if (qual == "decode.predictor") config.predictor = value;
        else if (qual == "tps.transforms") config.tps_transforms = static_cast<int>(parse_int(qual, value));
        else if (qual == "tps.points_per_transform") config.tps_points = static_cast<int>(parse_int(qual, value));
        else if (qual == "tps.regularization") config.tps_regularization = parse_double(qual, value);
        else if (qual == "heatmap.sizes") config.heatmap_sizes = parse_int_list(qual, value);
        else if (qual == "heatmap.sigma") config.heatmap_sigma = parse_double(qual, value);
        else if (qual == "align.temperature") config.temperature = parse_double(qual, value);
        else if (qual == "metrics.pcm_delta") config.pcm_delta = parse_double(qual, value);
        else if (qual == "metrics.sigma_b") config.sigma_b = parse_double(qual, value);
        else if (qual == "paths.keypoints") config.keypoints_path = value;
        else if (qual == "paths.speech") config.speech_path = value;
        else if (qual == "paths.transcript") config.transcript_path = value;
        else throw ValidationError("unknown config key '" + qual + "'");
    }
    if (const char* env_seed = std::getenv("GESTUREKIT_SEED")) {
        config.seed = parse_u64("GESTUREKIT_SEED", env_seed);
    }
    config.validate();
    return config;
}

PipelineConfig PipelineConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str());
}

}  // namespace gesturekit
