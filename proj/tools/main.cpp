#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gesturekit/align.hpp"
#include "gesturekit/heatmap.hpp"
#include "gesturekit/io.hpp"
#include "gesturekit/maskgen.hpp"
#include "gesturekit/metrics.hpp"
#include "gesturekit/pipeline.hpp"
#include "gesturekit/rvq.hpp"
#include "gesturekit/synth.hpp"
#include "gesturekit/tps.hpp"

namespace gk = gesturekit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void emit(const json& j) { std::cout << j.dump(2) << std::endl; }

json load_json_file(const fs::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw gk::ValidationError(std::string("cannot open ") + what + ": " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw gk::ValidationError(std::string(what) + ": malformed JSON: " + e.what());
    }
}

gk::SimilarityMatrix load_similarity(const fs::path& path, double temperature) {
    const json j = load_json_file(path, "similarity file");
    const json& entries = j.is_object() ? j.at("entries") : j;
    if (!entries.is_array() || entries.empty()) {
        throw gk::ValidationError("similarity file must hold a non-empty square matrix");
    }
    gk::SimilarityMatrix S;
    const int n = static_cast<int>(entries.size());
    S.entries.resize(n, n);
    for (int i = 0; i < n; ++i) {
        const json& row = entries[i];
        if (!row.is_array() || static_cast<int>(row.size()) != n) {
            throw gk::ValidationError("similarity row " + std::to_string(i) + " is not length " +
                                      std::to_string(n));
        }
        for (int c = 0; c < n; ++c) S.entries(i, c) = row[c].get<double>();
    }
    if (j.is_object() && j.contains("temperature") && temperature <= 0.0) {
        S.temperature = j["temperature"].get<double>();
    } else if (temperature > 0.0) {
        S.temperature = temperature;
    }
    return S;
}

std::vector<gk::EmbeddingSequence> rows_as_embeddings(const gk::FeatureSequence& f) {
    std::vector<gk::EmbeddingSequence> out;
    out.reserve(f.length());
    for (int i = 0; i < f.length(); ++i) {
        out.push_back(gk::EmbeddingSequence::from_rows(f.rows.row(i)));
    }
    return out;
}

Eigen::MatrixXi load_tokens_json(const fs::path& path, int& vocab) {
    const json j = load_json_file(path, "token file");
    vocab = j.at("vocab").get<int>();
    const json& layers = j.at("layers");
    if (!layers.is_array() || layers.empty()) {
        throw gk::ValidationError("token file needs at least one layer array");
    }
    const int R = static_cast<int>(layers.size());
    const int T = static_cast<int>(layers[0].size());
    Eigen::MatrixXi tokens(T, R);
    for (int r = 0; r < R; ++r) {
        if (static_cast<int>(layers[r].size()) != T) {
            throw gk::ValidationError("token layers disagree on length");
        }
        for (int t = 0; t < T; ++t) tokens(t, r) = layers[r][t].get<int>();
    }
    return tokens;
}

void save_tokens_json(const fs::path& path, const Eigen::MatrixXi& tokens, int vocab) {
    json layers = json::array();
    for (int r = 0; r < tokens.cols(); ++r) {
        json layer = json::array();
        for (int t = 0; t < tokens.rows(); ++t) layer.push_back(tokens(t, r));
        layers.push_back(std::move(layer));
    }
    std::ofstream out(path);
    if (!out) throw gk::ValidationError("cannot open for writing: " + path.string());
    out << json{{"vocab", vocab}, {"sentinel", vocab}, {"layers", std::move(layers)}}.dump(2) << '\n';
}

gk::EdgeSet load_edges(const std::string& path, const gk::KeypointLayout& layout) {
    if (path.empty()) return gk::EdgeSet{layout.edges};
    const json j = load_json_file(path, "edges file");
    const json& arr = j.is_object() ? j.at("edges") : j;
    gk::EdgeSet edges;
    for (const auto& e : arr) {
        edges.edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    return edges;
}

std::vector<int> parse_k_list(const std::string& text) {
    std::vector<int> ks;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) ks.push_back(std::stoi(item));
    return ks;
}

int run(int argc, char** argv) {
    CLI::App app{"gesturekit: gesture tokenization, masked decoding, TPS warping, "
                 "edge heatmaps, and motion metrics"};
    app.require_subcommand(1);

    // ---- align -------------------------------------------------------------
    auto* align = app.add_subcommand("align", "contrastive speech-gesture alignment");
    align->require_subcommand(1);

    std::string sim_path;
    double temperature = 0.0;
    auto* align_loss = align->add_subcommand("loss", "InfoNCE loss of a similarity matrix");
    align_loss->add_option("--sim", sim_path, "similarity matrix (JSON)")->required();
    align_loss->add_option("--temperature", temperature, "override temperature");
    align_loss->callback([&] {
        const auto S = load_similarity(sim_path, temperature);
        emit({{"loss", gk::infonce_loss(S)}, {"n", S.size()}, {"temperature", S.temperature}});
    });

    std::string feat_path, transcript_path, out_path;
    std::uint64_t seed = 0;
    double fps = 25.0;
    auto* align_neg = align->add_subcommand("negatives", "chronological negative sample");
    align_neg->add_option("--features", feat_path, "speech features (.bin/.csv)")->required();
    align_neg->add_option("--transcript", transcript_path, "transcript JSON")->required();
    align_neg->add_option("--seed", seed, "permutation seed")->required();
    align_neg->add_option("--fps", fps, "frames per second")->capture_default_str();
    align_neg->add_option("--out", out_path, "output feature file");
    align_neg->callback([&] {
        const auto features = gk::load_features(feat_path);
        const auto transcript = gk::load_transcript_json(transcript_path);
        if (transcript.segments.size() < 2) {
            throw gk::ValidationError("cannot construct chronological negative: need >= 2 segments");
        }
        gk::Rng rng(seed);
        const auto perm =
            gk::random_non_identity_permutation(static_cast<int>(transcript.segments.size()), rng);
        const auto negative = gk::build_chronological_negative(features, transcript, perm, fps);
        if (!out_path.empty()) gk::save_features_bin(out_path, negative);
        emit({{"segments", transcript.segments.size()},
              {"permutation", perm},
              {"frames", negative.length()},
              {"out", out_path}});
    });

    std::string speech_emb_path, gesture_emb_path, k_list = "1,2,3,5,10";
    auto* align_ret = align->add_subcommand("retrieval", "recall@k benchmark");
    align_ret->add_option("--speech-emb", speech_emb_path, "speech embeddings, one row per item")
        ->required();
    align_ret->add_option("--gesture-emb", gesture_emb_path, "gesture embeddings, one row per item")
        ->required();
    align_ret->add_option("--k", k_list, "comma-separated ranks")->capture_default_str();
    align_ret->add_option("--temperature", temperature, "similarity temperature");
    align_ret->callback([&] {
        const auto speech = rows_as_embeddings(gk::load_features(speech_emb_path));
        const auto gesture = rows_as_embeddings(gk::load_features(gesture_emb_path));
        const auto S = gk::cosine_similarity_matrix(speech, gesture,
                                                    temperature > 0.0 ? temperature : 0.7);
        const auto ks = parse_k_list(k_list);
        const auto recall = gk::retrieval_recall(S, ks);
        json r = json::object();
        for (std::size_t i = 0; i < ks.size(); ++i) r["R@" + std::to_string(ks[i])] = recall[i];
        emit({{"n", S.size()}, {"recall", std::move(r)}});
    });

    // ---- rvq ----------------------------------------------------------------
    auto* rvq = app.add_subcommand("rvq", "residual vector quantization");
    rvq->require_subcommand(1);

    std::string features_dir, stack_path, tokens_path;
    int layers = 6, codes = 1024, dim = 128, epochs = 25;
    auto* rvq_train = rvq->add_subcommand("train", "fit codebooks");
    rvq_train->add_option("--features", features_dir, "feature file or directory")->required();
    rvq_train->add_option("--layers", layers, "quantizer layers")->capture_default_str();
    rvq_train->add_option("--codes", codes, "codes per layer")->capture_default_str();
    rvq_train->add_option("--dim", dim, "expected feature dimension")->capture_default_str();
    rvq_train->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    rvq_train->add_option("--seed", seed, "training seed")->required();
    rvq_train->add_option("--out", out_path, "stack output file")->required();
    rvq_train->callback([&] {
        std::vector<gk::FeatureSequence> data;
        if (fs::is_directory(features_dir)) {
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(features_dir)) {
                if (entry.path().extension() == ".bin" || entry.path().extension() == ".csv") {
                    files.push_back(entry.path());
                }
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) data.push_back(gk::load_features(f));
        } else {
            data.push_back(gk::load_features(features_dir));
        }
        if (data.empty()) throw gk::ValidationError("no feature files found in " + features_dir);
        for (const auto& f : data) {
            if (f.dim() != dim) {
                throw gk::ValidationError("feature dim " + std::to_string(f.dim()) +
                                          " does not match --dim " + std::to_string(dim));
            }
        }
        gk::RvqTrainConfig config;
        config.layers = layers;
        config.codes = codes;
        config.epochs = epochs;
        config.seed = seed;
        const auto stack = gk::train_codebooks(data, config);
        gk::save_stack(out_path, stack);
        int rows = 0;
        for (const auto& f : data) rows += f.length();
        emit({{"layers", layers}, {"codes", codes}, {"dim", dim}, {"rows", rows}, {"out", out_path}});
    });

    auto* rvq_encode = rvq->add_subcommand("encode", "features to tokens");
    rvq_encode->add_option("--stack", stack_path, "trained stack")->required();
    rvq_encode->add_option("--features", feat_path, "input features")->required();
    rvq_encode->add_option("--out", out_path, "token JSON output")->required();
    rvq_encode->callback([&] {
        const auto stack = gk::load_stack(stack_path);
        const auto features = gk::load_features(feat_path);
        const auto result = gk::rvq_encode(features, stack);
        save_tokens_json(out_path, result.tokens, stack.layers.front().codes());
        const auto losses = gk::rvq_losses(features, result);
        emit({{"frames", features.length()},
              {"layers", stack.layer_count()},
              {"reconstruction", losses.reconstruction},
              {"commitment", losses.commitment},
              {"out", out_path}});
    });

    auto* rvq_decode = rvq->add_subcommand("decode", "tokens to features");
    rvq_decode->add_option("--stack", stack_path, "trained stack")->required();
    rvq_decode->add_option("--tokens", tokens_path, "token JSON input")->required();
    rvq_decode->add_option("--out", out_path, "feature output (.bin)")->required();
    rvq_decode->callback([&] {
        const auto stack = gk::load_stack(stack_path);
        int vocab = 0;
        const auto tokens = load_tokens_json(tokens_path, vocab);
        auto decoded = gk::rvq_decode(tokens, stack);
        gk::save_features_bin(out_path, decoded);
        emit({{"frames", decoded.length()}, {"dim", decoded.dim()}, {"out", out_path}});
    });

    // ---- decode --------------------------------------------------------------
    auto* decode = app.add_subcommand("decode", "masked iterative decoding");
    decode->require_subcommand(1);

    std::string predictor_name = "toy";
    int steps = 5;
    auto* decode_run = decode->add_subcommand("run", "iteratively decode a token stream");
    decode_run->add_option("--tokens", tokens_path, "reference tokens (JSON)")->required();
    decode_run->add_option("--predictor", predictor_name, "toy | oracle | uniform")->capture_default_str();
    decode_run->add_option("--steps", steps, "decode iterations")->capture_default_str();
    decode_run->add_option("--seed", seed, "seed (reserved for stochastic predictors)")->capture_default_str();
    decode_run->add_option("--out", out_path, "decoded token JSON output");
    decode_run->callback([&] {
        int vocab = 0;
        const auto tokens = load_tokens_json(tokens_path, vocab);
        gk::TokenSequence base;
        base.vocab = vocab;
        base.tokens.resize(tokens.rows());
        for (int t = 0; t < tokens.rows(); ++t) base.tokens[t] = tokens(t, 0);
        std::unique_ptr<gk::TokenPredictor> predictor;
        if (predictor_name == "oracle") {
            predictor = std::make_unique<gk::OraclePredictor>(base);
        } else if (predictor_name == "uniform") {
            predictor = std::make_unique<gk::UniformPredictor>();
        } else if (predictor_name == "toy") {
            predictor = std::make_unique<gk::FrequencyPredictor>(
                std::vector<gk::TokenSequence>{base}, vocab);
        } else {
            throw gk::ValidationError("unknown predictor: " + predictor_name);
        }
        gk::FeatureSequence conditioning;
        conditioning.rows = gk::Matrix::Zero(base.length(), 1);
        const auto result = gk::iterative_decode(*predictor, base.length(), steps, conditioning,
                                                 base.tokens.front(), vocab);
        if (!out_path.empty()) {
            Eigen::MatrixXi out_tokens(result.tokens.length(), 1);
            for (int t = 0; t < result.tokens.length(); ++t) out_tokens(t, 0) = result.tokens.tokens[t];
            save_tokens_json(out_path, out_tokens, vocab);
        }
        int matches = 0;
        for (int t = 0; t < base.length(); ++t) {
            if (result.tokens.tokens[t] == base.tokens[t]) ++matches;
        }
        emit({{"frames", base.length()},
              {"steps", steps},
              {"masked_count_trace", result.masked_count_trace},
              {"match_fraction", static_cast<double>(matches) / base.length()},
              {"out", out_path}});
    });

    double ratio_low = 0.5, ratio_high = 1.0;
    auto* decode_corrupt = decode->add_subcommand("corrupt", "BERT-style token corruption");
    decode_corrupt->add_option("--tokens", tokens_path, "token JSON input")->required();
    decode_corrupt->add_option("--ratio-low", ratio_low, "mask ratio lower bound")->capture_default_str();
    decode_corrupt->add_option("--ratio-high", ratio_high, "mask ratio upper bound")->capture_default_str();
    decode_corrupt->add_option("--seed", seed, "corruption seed")->required();
    decode_corrupt->add_option("--out", out_path, "corrupted token JSON output");
    decode_corrupt->callback([&] {
        int vocab = 0;
        const auto tokens = load_tokens_json(tokens_path, vocab);
        gk::TokenSequence base;
        base.vocab = vocab;
        base.tokens.resize(tokens.rows());
        for (int t = 0; t < tokens.rows(); ++t) base.tokens[t] = tokens(t, 0);
        gk::CorruptionPolicy policy;
        policy.ratio_low = ratio_low;
        policy.ratio_high = ratio_high;
        const auto result = gk::corrupt_tokens(base, policy, seed);
        if (!out_path.empty()) {
            Eigen::MatrixXi out_tokens(result.corrupted.length(), 1);
            for (int t = 0; t < result.corrupted.length(); ++t) {
                out_tokens(t, 0) = result.corrupted.tokens[t];
            }
            save_tokens_json(out_path, out_tokens, vocab);
        }
        emit({{"frames", base.length()},
              {"ratio", result.ratio},
              {"selected", result.mask_positions.size()},
              {"out", out_path}});
    });

    // ---- tps -----------------------------------------------------------------
    auto* tps = app.add_subcommand("tps", "thin-plate-spline warping");
    tps->require_subcommand(1);

    std::string pairs_path, params_path, size_text = "256x256", image_path, flow_path, occlusion_path;
    double regularization = 0.0;
    auto* tps_fit_cmd = tps->add_subcommand("fit", "fit a TPS to control pairs");
    tps_fit_cmd->add_option("--pairs", pairs_path, R"(JSON [{"d":[x,y],"s":[x,y]}...])")->required();
    tps_fit_cmd->add_option("--regularization", regularization, "Tikhonov lambda")->capture_default_str();
    tps_fit_cmd->add_option("--out", out_path, "params JSON output")->required();
    tps_fit_cmd->callback([&] {
        const json j = load_json_file(pairs_path, "pairs file");
        gk::ControlPointSet ctrl;
        for (const auto& p : j) {
            ctrl.pairs.push_back({gk::Point2(p.at("d")[0].get<double>(), p.at("d")[1].get<double>()),
                                  gk::Point2(p.at("s")[0].get<double>(), p.at("s")[1].get<double>())});
        }
        const auto params = gk::tps_fit(ctrl, regularization);
        json out;
        out["affine"] = {{params.affine(0, 0), params.affine(0, 1), params.affine(0, 2)},
                         {params.affine(1, 0), params.affine(1, 1), params.affine(1, 2)}};
        json weights = json::array();
        json anchors = json::array();
        for (int i = 0; i < params.weights.rows(); ++i) {
            weights.push_back({params.weights(i, 0), params.weights(i, 1)});
            anchors.push_back({params.anchors(i, 0), params.anchors(i, 1)});
        }
        out["weights"] = std::move(weights);
        out["anchors"] = std::move(anchors);
        out["fit_residual"] = params.fit_residual;
        std::ofstream f(out_path);
        f << out.dump(2) << '\n';
        emit({{"n", ctrl.size()}, {"fit_residual", params.fit_residual}, {"out", out_path}});
    });

    auto* tps_flow_cmd = tps->add_subcommand("flow", "dense backward flow grid");
    tps_flow_cmd->add_option("--params", params_path, "params JSON from tps fit")->required();
    tps_flow_cmd->add_option("--size", size_text, "grid size WxH")->capture_default_str();
    tps_flow_cmd->add_option("--out", out_path, "flow binary output")->required();
    tps_flow_cmd->callback([&] {
        const json j = load_json_file(params_path, "params file");
        gk::TPSParams params;
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 3; ++c) params.affine(r, c) = j.at("affine")[r][c].get<double>();
        }
        const auto& w = j.at("weights");
        const auto& a = j.at("anchors");
        params.weights.resize(static_cast<int>(w.size()), 2);
        params.anchors.resize(static_cast<int>(a.size()), 2);
        for (std::size_t i = 0; i < w.size(); ++i) {
            params.weights(static_cast<int>(i), 0) = w[i][0].get<double>();
            params.weights(static_cast<int>(i), 1) = w[i][1].get<double>();
            params.anchors(static_cast<int>(i), 0) = a[i][0].get<double>();
            params.anchors(static_cast<int>(i), 1) = a[i][1].get<double>();
        }
        const auto x_pos = size_text.find('x');
        if (x_pos == std::string::npos) throw gk::ValidationError("--size must look like 256x256");
        const int width = std::stoi(size_text.substr(0, x_pos));
        const int height = std::stoi(size_text.substr(x_pos + 1));
        const auto flow = gk::tps_flow_grid(params, height, width);
        gk::save_flow_bin(out_path, flow);
        emit({{"height", height}, {"width", width}, {"out", out_path}});
    });

    auto* tps_warp_cmd = tps->add_subcommand("warp", "warp an image along a flow");
    tps_warp_cmd->add_option("--image", image_path, "input PNG")->required();
    tps_warp_cmd->add_option("--flow", flow_path, "flow binary")->required();
    tps_warp_cmd->add_option("--occlusion", occlusion_path, "optional occlusion mask PNG");
    tps_warp_cmd->add_option("--out", out_path, "output PNG")->required();
    tps_warp_cmd->callback([&] {
        const auto image = gk::load_png(image_path);
        const auto flow = gk::load_flow_bin(flow_path);
        gk::ImageGrid warped;
        if (occlusion_path.empty()) {
            warped = gk::warp_image(image, flow);
        } else {
            warped = gk::warp_image(image, flow, gk::load_png(occlusion_path));
        }
        gk::save_png(out_path, warped);
        emit({{"height", warped.height}, {"width", warped.width}, {"out", out_path}});
    });

    // ---- heatmap ---------------------------------------------------------------
    auto* heatmap = app.add_subcommand("heatmap", "skeleton edge heatmaps");
    heatmap->require_subcommand(1);

    std::string keypoints_path, edges_path, sizes_text = "32,64,128", out_prefix = "hm_";
    int frame_index = 0;
    double sigma = 0.0;
    auto* hm_render = heatmap->add_subcommand("render", "rasterize one frame");
    hm_render->add_option("--keypoints", keypoints_path, "keypoints JSONL")->required();
    hm_render->add_option("--frame", frame_index, "frame index")->capture_default_str();
    hm_render->add_option("--edges", edges_path, "edges JSON (default: standard skeleton)");
    hm_render->add_option("--sigma", sigma, "edge thickness (0 = auto per resolution)")->capture_default_str();
    hm_render->add_option("--sizes", sizes_text, "comma-separated square sizes")->capture_default_str();
    hm_render->add_option("--out-prefix", out_prefix, "output prefix")->capture_default_str();
    hm_render->callback([&] {
        const auto seq = gk::load_keypoints_jsonl(keypoints_path);
        if (frame_index < 0 || frame_index >= seq.length()) {
            throw gk::ValidationError("frame index outside sequence");
        }
        const auto edges = load_edges(edges_path, seq.layout);
        gk::HeatmapConfig config;
        config.resolutions.clear();
        for (int s : parse_k_list(sizes_text)) config.resolutions.push_back({s, s});
        if (sigma > 0.0) config.sigma = sigma;
        const auto maps = gk::render_skeleton_heatmaps(seq.frames[frame_index], edges, config,
                                                       seq.canvas_w, seq.canvas_h);
        json outputs = json::array();
        for (std::size_t i = 0; i < maps.size(); ++i) {
            const std::string base = out_prefix + std::to_string(config.resolutions[i].first);
            gk::save_png(base + ".png", gk::heatmap_to_image(maps[i]));
            // Raw float dump alongside the PNG: magic GKHM, H, W, 0, then rows.
            std::ofstream raw(base + ".bin", std::ios::binary);
            raw.write("GKHM", 4);
            auto put_u32 = [&raw](std::uint32_t v) {
                unsigned char b[4] = {static_cast<unsigned char>(v),
                                      static_cast<unsigned char>(v >> 8),
                                      static_cast<unsigned char>(v >> 16),
                                      static_cast<unsigned char>(v >> 24)};
                raw.write(reinterpret_cast<const char*>(b), 4);
            };
            put_u32(static_cast<std::uint32_t>(maps[i].height));
            put_u32(static_cast<std::uint32_t>(maps[i].width));
            put_u32(0);
            for (double v : maps[i].values) {
                const float fv = static_cast<float>(v);
                std::uint32_t bits;
                std::memcpy(&bits, &fv, 4);
                put_u32(bits);
            }
            outputs.push_back(base + ".png");
            outputs.push_back(base + ".bin");
        }
        emit({{"frame", frame_index}, {"edges", edges.edges.size()}, {"outputs", std::move(outputs)}});
    });

    // ---- metrics ----------------------------------------------------------------
    auto* metrics = app.add_subcommand("metrics", "evaluation metrics");
    metrics->require_subcommand(1);
    std::vector<std::string> gen_files, ref_files;
    double delta = 0.0, sigma_b = 0.1;

    auto add_metric_cmd = [&](const std::string& name, const std::string& desc) {
        auto* cmd = metrics->add_subcommand(name, desc);
        cmd->add_option("--gen", gen_files, "generated keypoint files (JSONL)")->required();
        cmd->add_option("--ref", ref_files, "reference files (JSONL; beats JSON for bas)");
        cmd->add_option("--delta", delta, "PCM tolerance (0 = 0.05 * canvas)");
        cmd->add_option("--sigma-b", sigma_b, "beat kernel width (seconds)")->capture_default_str();
        return cmd;
    };

    auto flat_rows = [](const gk::GestureSequence& seq) {
        auto [face, body] = gk::flatten_frames(seq, true);
        gk::Matrix rows(face.length(), face.dim() + body.dim());
        rows << face.rows, body.rows;
        return rows;
    };

    add_metric_cmd("fgd", "Frechet gesture distance")->callback([&] {
        if (ref_files.empty()) throw gk::ValidationError("fgd needs --ref files");
        std::vector<gk::Matrix> gen_rows, ref_rows;
        int gen_total = 0, ref_total = 0;
        for (const auto& f : gen_files) {
            gen_rows.push_back(flat_rows(gk::load_keypoints_jsonl(f)));
            gen_total += static_cast<int>(gen_rows.back().rows());
        }
        for (const auto& f : ref_files) {
            ref_rows.push_back(flat_rows(gk::load_keypoints_jsonl(f)));
            ref_total += static_cast<int>(ref_rows.back().rows());
        }
        gk::Matrix gen_all(gen_total, gen_rows.front().cols());
        gk::Matrix ref_all(ref_total, ref_rows.front().cols());
        int r = 0;
        for (const auto& m : gen_rows) {
            gen_all.middleRows(r, m.rows()) = m;
            r += static_cast<int>(m.rows());
        }
        r = 0;
        for (const auto& m : ref_rows) {
            ref_all.middleRows(r, m.rows()) = m;
            r += static_cast<int>(m.rows());
        }
        gk::MetricReport report;
        report.values["fgd"] =
            gk::frechet_distance(gk::GaussianStats::fit(gen_all), gk::GaussianStats::fit(ref_all));
        report.config["gen_frames"] = std::to_string(gen_total);
        report.config["ref_frames"] = std::to_string(ref_total);
        std::cout << report.to_json() << std::endl;
    });

    add_metric_cmd("div", "diversity across clips")->callback([&] {
        std::vector<gk::Vector> clips;
        for (const auto& f : gen_files) {
            const auto rows = flat_rows(gk::load_keypoints_jsonl(f));
            clips.push_back(rows.colwise().mean());
        }
        gk::MetricReport report;
        report.values["div_l1"] = gk::diversity_l1(clips);
        report.values["div_l2"] = gk::diversity_l2(clips);
        report.config["clips"] = std::to_string(clips.size());
        std::cout << report.to_json() << std::endl;
    });

    add_metric_cmd("bas", "beat alignment score")->callback([&] {
        if (ref_files.empty()) throw gk::ValidationError("bas needs --ref (audio beats JSON)");
        const auto audio = gk::load_beats_json(ref_files.front());
        std::vector<double> beats;
        for (const auto& f : gen_files) {
            const auto b = gk::motion_beats(gk::load_keypoints_jsonl(f));
            beats.insert(beats.end(), b.begin(), b.end());
        }
        gk::MetricReport report;
        report.values["bas"] = gk::beat_align_score(audio, beats, sigma_b);
        report.values["bc"] = gk::beat_constancy(audio, beats, sigma_b);
        report.values["motion_beats"] = static_cast<double>(beats.size());
        report.config["sigma_b"] = std::to_string(sigma_b);
        std::cout << report.to_json() << std::endl;
    });

    add_metric_cmd("pcm", "percent of correct motion")->callback([&] {
        if (ref_files.size() != gen_files.size()) {
            throw gk::ValidationError("pcm needs matching --gen/--ref file counts");
        }
        gk::MetricReport report;
        double total = 0.0;
        for (std::size_t i = 0; i < gen_files.size(); ++i) {
            const auto gen = gk::load_keypoints_jsonl(gen_files[i]);
            const auto ref = gk::load_keypoints_jsonl(ref_files[i]);
            const double d = delta > 0.0 ? delta : 0.05 * gen.canvas_w;
            total += gk::pcm(gen, ref, d);
            report.config["delta"] = std::to_string(d);
        }
        report.values["pcm"] = total / static_cast<double>(gen_files.size());
        std::cout << report.to_json() << std::endl;
    });

    add_metric_cmd("mse", "mean squared keypoint error")->callback([&] {
        if (ref_files.size() != gen_files.size()) {
            throw gk::ValidationError("mse needs matching --gen/--ref file counts");
        }
        gk::MetricReport report;
        double total = 0.0;
        for (std::size_t i = 0; i < gen_files.size(); ++i) {
            total += gk::mse(gk::load_keypoints_jsonl(gen_files[i]),
                             gk::load_keypoints_jsonl(ref_files[i]));
        }
        report.values["mse"] = total / static_cast<double>(gen_files.size());
        std::cout << report.to_json() << std::endl;
    });

    // ---- synth ---------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "synthetic data generation");
    synth->require_subcommand(1);
    std::string kind = "circle-motion";
    int frames = 80;
    auto* synth_gen = synth->add_subcommand("generate", "keypoints + speech + transcript");
    synth_gen->add_option("--kind", kind, "circle-motion | wave-motion | random-walk")->capture_default_str();
    synth_gen->add_option("--frames", frames, "frame count")->capture_default_str();
    synth_gen->add_option("--seed", seed, "generation seed")->required();
    synth_gen->add_option("--out-prefix", out_prefix, "output prefix")->required();
    synth_gen->callback([&] {
        gk::SyntheticSpec spec;
        spec.kind = gk::synth_kind_from_name(kind);
        spec.frames = frames;
        spec.seed = seed;
        const auto sample = gk::synth_generate(spec);
        gk::save_keypoints_jsonl(out_prefix + "keypoints.jsonl", sample.gesture);
        gk::save_features_bin(out_prefix + "speech.bin", sample.speech);
        gk::save_transcript_json(out_prefix + "transcript.json", sample.transcript);
        gk::save_beats_json(out_prefix + "beats.json", sample.audio_beats);
        emit({{"frames", frames},
              {"kind", kind},
              {"outputs",
               {out_prefix + "keypoints.jsonl", out_prefix + "speech.bin",
                out_prefix + "transcript.json", out_prefix + "beats.json"}}});
    });

    // ---- pipeline ---------------------------------------------------------------
    auto* pipeline = app.add_subcommand("pipeline", "end-to-end demo");
    pipeline->require_subcommand(1);
    std::string config_path, out_dir = "out";

    auto* pipe_init = pipeline->add_subcommand("init", "write a desk-scale demo config");
    pipe_init->add_option("--out", out_path, "config file path")->required();
    pipe_init->callback([&] {
        gk::PipelineConfig config;
        config.synth_frames = 100;
        config.rvq_codes = 64;
        config.rvq_layers = 4;
        std::ofstream out(out_path);
        if (!out) throw gk::ValidationError("cannot open for writing: " + out_path);
        out << config.serialize();
        emit({{"out", out_path}});
    });

    auto* pipe_run = pipeline->add_subcommand("run", "run the full pipeline");
    pipe_run->add_option("--config", config_path, "pipeline config file")->required();
    pipe_run->add_option("--out", out_dir, "artifact directory")->capture_default_str();
    pipe_run->callback([&] {
        const auto config = gk::PipelineConfig::parse_file(config_path);
        const auto result = gk::run_pipeline(config, out_dir);
        std::ifstream in(result.report_path);
        std::cout << in.rdbuf();
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const gk::ValidationError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const gk::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
