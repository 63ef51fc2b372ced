#include "gesturekit/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace gesturekit {

using nlohmann::json;

namespace {

void write_u32le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ValidationError("unexpected end of file while reading header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32le(std::ostream& out, const std::vector<float>& values) {
    for (float v : values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        write_u32le(out, bits);
    }
}

std::vector<float> read_f32le(std::istream& in, std::size_t count, const std::string& what) {
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in) {
            throw ValidationError(what + ": float buffer shorter than declared size (" +
                                  std::to_string(count) + " values expected)");
        }
        std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                             (static_cast<std::uint32_t>(b[1]) << 8) |
                             (static_cast<std::uint32_t>(b[2]) << 16) |
                             (static_cast<std::uint32_t>(b[3]) << 24);
        std::memcpy(&values[i], &bits, 4);
    }
    if (in.peek() != std::istream::traits_type::eof()) {
        throw ValidationError(what + ": trailing bytes beyond declared size");
    }
    return values;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
    std::ofstream out(path, mode);
    if (!out) throw ValidationError("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = {}) {
    std::ifstream in(path, mode);
    if (!in) throw ValidationError("cannot open for reading: " + path.string());
    return in;
}

json parse_json(std::istream& in, const std::string& what) {
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(what + ": malformed JSON: " + e.what());
    }
}

double finite_number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ValidationError("field '" + field + "' must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ValidationError("field '" + field + "' is non-finite");
    return v;
}

Point2 parse_point(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2) {
        throw ValidationError("field '" + field + "' must be an [x, y] pair");
    }
    return Point2(finite_number(j[0], field + ".x"), finite_number(j[1], field + ".y"));
}

}  // namespace

void save_keypoints_jsonl(const std::filesystem::path& path, const GestureSequence& seq) {
    seq.validate();
    auto out = open_out(path);
    for (int t = 0; t < seq.length(); ++t) {
        json face = json::array();
        json body = json::array();
        const KeypointFrame& frame = seq.frames[t];
        for (int i = 0; i < seq.layout.face_count; ++i) {
            face.push_back({frame[i].x(), frame[i].y()});
        }
        for (int i = 0; i < seq.layout.body_count; ++i) {
            const Point2& p = frame[seq.layout.face_count + i];
            body.push_back({p.x(), p.y()});
        }
        json line = {{"t", t}, {"face", std::move(face)}, {"body", std::move(body)}};
        out << line.dump() << '\n';
    }
}

GestureSequence load_keypoints_jsonl(const std::filesystem::path& path, double fps,
                                     double canvas_w, double canvas_h) {
    auto in = open_in(path);
    GestureSequence seq;
    seq.fps = fps;
    seq.canvas_w = canvas_w;
    seq.canvas_h = canvas_h;
    std::string line;
    int line_no = 0;
    int face_count = -1;
    int body_count = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        json j = parse_json(ls, "keypoints line " + std::to_string(line_no));
        if (!j.contains("face") || !j.contains("body")) {
            throw ValidationError("keypoints line " + std::to_string(line_no) +
                                  ": missing 'face' or 'body' field");
        }
        const json& face = j["face"];
        const json& body = j["body"];
        if (!face.is_array() || !body.is_array()) {
            throw ValidationError("keypoints line " + std::to_string(line_no) +
                                  ": 'face' and 'body' must be arrays");
        }
        if (face_count < 0) {
            face_count = static_cast<int>(face.size());
            body_count = static_cast<int>(body.size());
        } else if (static_cast<int>(face.size()) != face_count ||
                   static_cast<int>(body.size()) != body_count) {
            throw ValidationError("keypoints line " + std::to_string(line_no) +
                                  ": point counts differ from first frame");
        }
        KeypointFrame frame;
        frame.reserve(face.size() + body.size());
        for (std::size_t i = 0; i < face.size(); ++i) {
            frame.push_back(parse_point(face[i], "face[" + std::to_string(i) + "]"));
        }
        for (std::size_t i = 0; i < body.size(); ++i) {
            frame.push_back(parse_point(body[i], "body[" + std::to_string(i) + "]"));
        }
        seq.frames.push_back(std::move(frame));
    }
    if (seq.frames.empty()) throw ValidationError("keypoints file has no frames: " + path.string());
    if (face_count == 68 && body_count == 48) {
        seq.layout = KeypointLayout::standard();
    } else {
        seq.layout.face_count = face_count;
        seq.layout.body_count = body_count;
        seq.layout.edges.clear();
    }
    seq.validate();
    return seq;
}

void save_features_bin(const std::filesystem::path& path, const FeatureSequence& features) {
    features.validate();
    auto out = open_out(path, std::ios::binary);
    out.write("GKFT", 4);
    write_u32le(out, static_cast<std::uint32_t>(features.length()));
    write_u32le(out, static_cast<std::uint32_t>(features.dim()));
    write_u32le(out, static_cast<std::uint32_t>(features.kind));
    std::vector<float> buf(static_cast<std::size_t>(features.length()) * features.dim());
    for (int t = 0; t < features.length(); ++t) {
        for (int d = 0; d < features.dim(); ++d) {
            buf[static_cast<std::size_t>(t) * features.dim() + d] =
                static_cast<float>(features.rows(t, d));
        }
    }
    write_f32le(out, buf);
}

FeatureSequence load_features_bin(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "GKFT", 4) != 0) {
        throw ValidationError("bad feature file magic in " + path.string());
    }
    const std::uint32_t T = read_u32le(in);
    const std::uint32_t D = read_u32le(in);
    const std::uint32_t kind = read_u32le(in);
    if (T < 1 || D < 1) throw ValidationError("feature header declares empty matrix");
    if (kind > 2) throw ValidationError("feature header declares unknown kind " + std::to_string(kind));
    const auto buf = read_f32le(in, static_cast<std::size_t>(T) * D, "features " + path.string());
    FeatureSequence features;
    features.kind = static_cast<FeatureKind>(kind);
    features.rows.resize(T, D);
    for (std::uint32_t t = 0; t < T; ++t) {
        for (std::uint32_t d = 0; d < D; ++d) {
            features.rows(t, d) = buf[static_cast<std::size_t>(t) * D + d];
        }
    }
    features.validate();
    return features;
}

void save_features_csv(const std::filesystem::path& path, const FeatureSequence& features) {
    features.validate();
    auto out = open_out(path);
    for (int d = 0; d < features.dim(); ++d) {
        out << (d ? "," : "") << 'c' << d;
    }
    out << '\n';
    out.precision(17);
    for (int t = 0; t < features.length(); ++t) {
        for (int d = 0; d < features.dim(); ++d) {
            out << (d ? "," : "") << features.rows(t, d);
        }
        out << '\n';
    }
}

FeatureSequence load_features_csv(const std::filesystem::path& path, FeatureKind kind) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty CSV file: " + path.string());
    std::vector<std::vector<double>> data;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(cell, &pos);
                if (pos != cell.size()) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                throw ValidationError("CSV line " + std::to_string(line_no) +
                                      ": cannot parse value '" + cell + "'");
            }
        }
        if (!data.empty() && row.size() != data.front().size()) {
            throw ValidationError("CSV line " + std::to_string(line_no) +
                                  ": column count differs from first row");
        }
        data.push_back(std::move(row));
    }
    if (data.empty()) throw ValidationError("CSV has no data rows: " + path.string());
    FeatureSequence features;
    features.kind = kind;
    features.rows.resize(static_cast<int>(data.size()), static_cast<int>(data.front().size()));
    for (std::size_t t = 0; t < data.size(); ++t) {
        for (std::size_t d = 0; d < data[t].size(); ++d) {
            features.rows(static_cast<int>(t), static_cast<int>(d)) = data[t][d];
        }
    }
    features.validate();
    return features;
}

FeatureSequence load_features(const std::filesystem::path& path) {
    if (path.extension() == ".csv") return load_features_csv(path);
    return load_features_bin(path);
}

void save_transcript_json(const std::filesystem::path& path, const TimedTranscript& transcript) {
    transcript.validate();
    json arr = json::array();
    for (const auto& s : transcript.segments) {
        arr.push_back({{"text", s.text}, {"start", s.start}, {"end", s.end}});
    }
    open_out(path) << arr.dump(2) << '\n';
}

TimedTranscript load_transcript_json(const std::filesystem::path& path) {
    auto in = open_in(path);
    json j = parse_json(in, "transcript " + path.string());
    if (!j.is_array()) throw ValidationError("transcript must be a JSON array");
    TimedTranscript transcript;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& seg = j[i];
        if (!seg.contains("text") || !seg.contains("start") || !seg.contains("end")) {
            throw ValidationError("transcript segment " + std::to_string(i) +
                                  ": missing text/start/end");
        }
        transcript.segments.push_back({seg["text"].get<std::string>(),
                                       finite_number(seg["start"], "start"),
                                       finite_number(seg["end"], "end")});
    }
    transcript.validate();
    return transcript;
}

void save_png(const std::filesystem::path& path, const ImageGrid& image) {
    image.validate();
    if (image.channels != 1 && image.channels != 3) {
        throw ValidationError("PNG output supports 1 or 3 channels, got " +
                              std::to_string(image.channels));
    }
    FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw ValidationError("cannot open for writing: " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw NumericalError("libpng failure writing " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, image.width, image.height, 8,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<std::size_t>(image.width) * image.channels);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < image.channels; ++c) {
                const float v = std::clamp(image.at(y, x, c), 0.0f, 1.0f);
                row[static_cast<std::size_t>(x) * image.channels + c] =
                    static_cast<png_byte>(std::lround(v * 255.0f));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

ImageGrid load_png(const std::filesystem::path& path) {
    FILE* fp = std::fopen(path.string().c_str(), "rb");
    if (!fp) throw ValidationError("cannot open for reading: " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        std::fclose(fp);
        throw ValidationError("libpng failure reading " + path.string());
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    // Normalize everything to 8-bit gray or RGB.
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_packing(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    png_read_update_info(png, info);
    ImageGrid image;
    image.height = static_cast<int>(png_get_image_height(png, info));
    image.width = static_cast<int>(png_get_image_width(png, info));
    image.channels = static_cast<int>(png_get_channels(png, info));
    image.pixels.resize(static_cast<std::size_t>(image.height) * image.width * image.channels);
    std::vector<png_byte> row(png_get_rowbytes(png, info));
    for (int y = 0; y < image.height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < image.channels; ++c) {
                image.at(y, x, c) =
                    static_cast<float>(row[static_cast<std::size_t>(x) * image.channels + c]) / 255.0f;
            }
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    image.validate();
    return image;
}

void save_flow_bin(const std::filesystem::path& path, const FlowField& flow) {
    flow.validate();
    auto out = open_out(path, std::ios::binary);
    out.write("GKFL", 4);
    write_u32le(out, static_cast<std::uint32_t>(flow.height));
    write_u32le(out, static_cast<std::uint32_t>(flow.width));
    write_u32le(out, 0);  // convention 0: integer pixel centers
    write_f32le(out, flow.displacement);
}

FlowField load_flow_bin(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "GKFL", 4) != 0) {
        throw ValidationError("bad flow file magic in " + path.string());
    }
    FlowField flow;
    flow.height = static_cast<int>(read_u32le(in));
    flow.width = static_cast<int>(read_u32le(in));
    const std::uint32_t convention = read_u32le(in);
    if (convention != 0) {
        throw ValidationError("unsupported flow convention " + std::to_string(convention));
    }
    if (flow.height < 1 || flow.width < 1) throw ValidationError("flow header declares empty field");
    flow.displacement =
        read_f32le(in, static_cast<std::size_t>(flow.height) * flow.width * 2, "flow " + path.string());
    flow.validate();
    return flow;
}

void save_beats_json(const std::filesystem::path& path, const std::vector<double>& beats) {
    json arr = json::array();
    for (double b : beats) {
        if (!std::isfinite(b)) throw ValidationError("non-finite beat time");
        arr.push_back(b);
    }
    open_out(path) << arr.dump() << '\n';
}

std::vector<double> load_beats_json(const std::filesystem::path& path) {
    auto in = open_in(path);
    json j = parse_json(in, "beats " + path.string());
    if (!j.is_array()) throw ValidationError("beats file must be a JSON array of seconds");
    std::vector<double> beats;
    for (const auto& v : j) beats.push_back(finite_number(v, "beat"));
    return beats;
}

}  // namespace gesturekit
