#include "gesturekit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gesturekit/align.hpp"
#include "gesturekit/heatmap.hpp"
#include "gesturekit/io.hpp"
#include "gesturekit/maskgen.hpp"
#include "gesturekit/rvq.hpp"
#include "gesturekit/synth.hpp"
#include "gesturekit/tps.hpp"

namespace gesturekit {

using nlohmann::json;

namespace {

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ValidationError("stage " + name + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError("stage " + name + ": " + e.what());
    } catch (const std::exception& e) {
        throw NumericalError("stage " + name + ": " + e.what());
    }
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

struct WindowTokens {
    Eigen::MatrixXi truth;    // T x R from the encoder
    Eigen::MatrixXi decoded;  // T x R from mask + residual decoding
};

/// Token columns for one stream (face or body) across windows.
struct StreamState {
    CodebookStack stack;
    std::vector<QuantizationResult> encoded;
    std::vector<WindowTokens> tokens;
    std::vector<FeatureSequence> decoded_features;
    double l_mask = 0.0;
    double l_res = 0.0;
};

TokenSequence column_tokens(const Eigen::MatrixXi& tokens, int layer, int vocab) {
    TokenSequence seq;
    seq.vocab = vocab;
    seq.tokens.resize(tokens.rows());
    for (int t = 0; t < tokens.rows(); ++t) seq.tokens[t] = tokens(t, layer);
    return seq;
}

json tokens_to_json(const Eigen::MatrixXi& tokens, int vocab) {
    json layers = json::array();
    for (int r = 0; r < tokens.cols(); ++r) {
        json layer = json::array();
        for (int t = 0; t < tokens.rows(); ++t) layer.push_back(tokens(t, r));
        layers.push_back(std::move(layer));
    }
    return json{{"vocab", vocab}, {"sentinel", vocab}, {"layers", std::move(layers)}};
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir) {
    config.validate();
    std::filesystem::create_directories(out_dir);
    PipelineResult result;
    auto emit = [&result, &out_dir](const std::filesystem::path& name) {
        result.artifacts.push_back(out_dir / name);
        return out_dir / name;
    };

    // --- source data -------------------------------------------------------
    SyntheticSample sample = stage("synth", [&config] {
        if (!config.keypoints_path.empty()) {
            SyntheticSample s;
            s.gesture = load_keypoints_jsonl(config.keypoints_path, 25.0,
                                             config.canvas, config.canvas);
            if (!config.speech_path.empty()) s.speech = load_features(config.speech_path);
            if (!config.transcript_path.empty()) {
                s.transcript = load_transcript_json(config.transcript_path);
                for (const auto& seg : s.transcript.segments) s.audio_beats.push_back(seg.start);
            }
            return s;
        }
        SyntheticSpec spec;
        spec.kind = synth_kind_from_name(config.synth_kind);
        spec.frames = config.synth_frames;
        spec.seed = config.seed;
        spec.canvas = config.canvas;
        return synth_generate(spec);
    });

    const std::vector<GestureSequence> windows = stage("window", [&] {
        auto w = slice_windows(sample.gesture, config.window_len, config.stride);
        if (w.empty()) {
            throw ValidationError("no windows: sequence has " +
                                  std::to_string(sample.gesture.length()) + " frames, window_len " +
                                  std::to_string(config.window_len));
        }
        return w;
    });
    const int W = static_cast<int>(windows.size());
    const int T = config.window_len;

    // --- flatten (canvas-normalized for the quantizer) ----------------------
    std::vector<FeatureSequence> face_feats(W), body_feats(W);
    stage("flatten", [&] {
        for (int w = 0; w < W; ++w) {
            auto [face, body] = flatten_frames(windows[w], /*normalize=*/true);
            face_feats[w] = std::move(face);
            body_feats[w] = std::move(body);
        }
        return 0;
    });

    // --- per-stream tokenize / corrupt / decode ------------------------------
    StreamState face_state, body_state;
    auto run_stream = [&](const char* name, const std::vector<FeatureSequence>& feats,
                          std::uint64_t seed_salt) {
        StreamState state;
        stage(std::string("rvq-train-") + name, [&] {
            RvqTrainConfig train;
            train.layers = config.rvq_layers;
            train.codes = config.rvq_codes;
            train.epochs = config.rvq_epochs;
            train.seed = config.seed ^ seed_salt;
            state.stack = train_codebooks(feats, train);
            return 0;
        });
        stage(std::string("rvq-encode-") + name, [&] {
            for (const FeatureSequence& f : feats) state.encoded.push_back(rvq_encode(f, state.stack));
            return 0;
        });
        stage(std::string("decode-") + name, [&] {
            const int vocab = config.rvq_codes;
            const int R = config.rvq_layers;
            // Toy predictors are frequency tables over this stream's own tokens.
            std::vector<TokenSequence> base_examples;
            for (const auto& enc : state.encoded) {
                base_examples.push_back(column_tokens(enc.tokens, 0, vocab));
            }
            FrequencyPredictor toy_base(base_examples, vocab);
            UniformPredictor uniform;
            // Deterministic embedding tables for residual conditioning.
            Rng emb_rng(config.seed ^ seed_salt ^ 0xe5b3u);
            std::vector<Matrix> embeddings;
            const int emb_dim = 16;
            for (int r = 0; r + 1 < R; ++r) {
                Matrix table(vocab, emb_dim);
                for (int c = 0; c < vocab; ++c) {
                    for (int d = 0; d < emb_dim; ++d) table(c, d) = emb_rng.normal();
                }
                embeddings.push_back(std::move(table));
            }
            CorruptionPolicy policy;
            policy.ratio_low = config.ratio_low;
            policy.ratio_high = config.ratio_high;

            double l_mask_total = 0.0;
            double l_res_total = 0.0;
            // Non-overlapping windows decode as one long stream: the last
            // decoded base token of window n seeds window n+1.
            const bool chain_windows = config.stride >= config.window_len;
            int chained_source = -1;
            for (int w = 0; w < W; ++w) {
                const Eigen::MatrixXi& truth = state.encoded[w].tokens;
                const TokenSequence base_truth = column_tokens(truth, 0, vocab);
                OraclePredictor oracle_base(base_truth);
                const TokenPredictor* base_predictor =
                    config.predictor == "oracle"
                        ? static_cast<const TokenPredictor*>(&oracle_base)
                        : (config.predictor == "uniform"
                               ? static_cast<const TokenPredictor*>(&uniform)
                               : static_cast<const TokenPredictor*>(&toy_base));

                // Training-style corruption, scored with the base predictor.
                const CorruptionResult corrupted = corrupt_tokens(
                    base_truth, policy, config.seed ^ seed_salt ^ static_cast<std::uint64_t>(w));
                if (!corrupted.mask_positions.empty()) {
                    const Matrix probs = base_predictor->predict(corrupted.corrupted, feats[w]);
                    l_mask_total +=
                        cross_entropy_masked(probs, base_truth, corrupted.mask_positions);
                }

                // Inference: masked iterative decode of the base layer, then
                // residual layers in order.
                const int source_token = (chain_windows && chained_source >= 0)
                                             ? chained_source
                                             : base_truth.tokens.front();
                const DecodeResult base_decoded = iterative_decode(
                    *base_predictor, T, config.decode_steps, feats[w], source_token, vocab);
                chained_source = base_decoded.tokens.tokens.back();
                WindowTokens tokens;
                tokens.truth = truth;
                if (R > 1) {
                    std::vector<OraclePredictor> oracle_layers;
                    std::vector<FrequencyPredictor> toy_layers;
                    oracle_layers.reserve(R - 1);
                    toy_layers.reserve(R - 1);
                    std::vector<const TokenPredictor*> layer_predictors;
                    std::vector<Matrix> layer_probs;
                    for (int r = 1; r < R; ++r) {
                        const TokenSequence layer_truth = column_tokens(truth, r, vocab);
                        if (config.predictor == "oracle") {
                            oracle_layers.emplace_back(layer_truth);
                            layer_predictors.push_back(&oracle_layers.back());
                        } else if (config.predictor == "uniform") {
                            layer_predictors.push_back(&uniform);
                        } else {
                            toy_layers.emplace_back(std::vector<TokenSequence>{layer_truth}, vocab);
                            layer_predictors.push_back(&toy_layers.back());
                        }
                    }
                    tokens.decoded =
                        residual_decode(base_decoded.tokens, layer_predictors, embeddings);
                    // Residual cross-entropy against the encoder's tokens.
                    TokenSequence all_masked;
                    all_masked.vocab = vocab;
                    all_masked.tokens.assign(T, vocab);
                    Eigen::MatrixXi res_targets(T, R - 1);
                    for (int r = 1; r < R; ++r) {
                        FeatureSequence conditioning;
                        conditioning.kind = FeatureKind::GestureEmbedding;
                        conditioning.rows = Matrix::Zero(T, emb_dim);
                        for (int t = 0; t < T; ++t) {
                            for (int q = 0; q < r; ++q) {
                                conditioning.rows.row(t) += embeddings[q].row(tokens.decoded(t, q));
                            }
                            res_targets(t, r - 1) = truth(t, r);
                        }
                        layer_probs.push_back(
                            layer_predictors[r - 1]->predict(all_masked, conditioning));
                    }
                    l_res_total += cross_entropy_residual(layer_probs, res_targets);
                } else {
                    tokens.decoded.resize(T, 1);
                    for (int t = 0; t < T; ++t) tokens.decoded(t, 0) = base_decoded.tokens.tokens[t];
                }
                state.tokens.push_back(std::move(tokens));
            }
            state.l_mask = l_mask_total / W;
            state.l_res = (R > 1) ? l_res_total / W : 0.0;
            return 0;
        });
        stage(std::string("rvq-decode-") + name, [&] {
            for (int w = 0; w < W; ++w) {
                state.decoded_features.push_back(rvq_decode(state.tokens[w].decoded, state.stack));
            }
            return 0;
        });
        return state;
    };
    face_state = run_stream("face", face_feats, 0x66616365u);
    body_state = run_stream("body", body_feats, 0x626f6479u);

    // --- reassemble decoded keypoint windows --------------------------------
    std::vector<GestureSequence> decoded_windows(W);
    stage("unflatten", [&] {
        for (int w = 0; w < W; ++w) {
            decoded_windows[w] = unflatten_frames(
                face_state.decoded_features[w], body_state.decoded_features[w],
                sample.gesture.layout, sample.gesture.fps, config.canvas, config.canvas,
                /*normalized=*/true);
        }
        return 0;
    });

    // --- artifacts: tokens, stacks ------------------------------------------
    stage("write-tokens", [&] {
        json j;
        j["face"] = tokens_to_json(face_state.tokens[0].decoded, config.rvq_codes);
        j["body"] = tokens_to_json(body_state.tokens[0].decoded, config.rvq_codes);
        std::ofstream out(emit("tokens.json"));
        out << j.dump(2) << '\n';
        save_stack(emit("stack_face.bin"), face_state.stack);
        save_stack(emit("stack_body.bin"), body_state.stack);
        return 0;
    });

    // --- TPS flow from decoded driving pose vs source pose -------------------
    const GestureSequence& source_window = windows.front();
    const GestureSequence& driving_window = decoded_windows.front();
    const int driving_frame = T - 1;
    FlowField combined;
    stage("tps", [&] {
        WarpConfig warp_config{config.tps_transforms, config.tps_points, config.canvas,
                               config.canvas};
        warp_config.validate();
        const int points_needed = warp_config.transforms * warp_config.points_per_transform;
        const int available = sample.gesture.layout.point_count();
        if (points_needed > available) {
            throw ValidationError("tps.transforms * points_per_transform = " +
                                  std::to_string(points_needed) + " exceeds keypoint count " +
                                  std::to_string(available));
        }
        std::vector<FlowField> flows;
        flows.reserve(warp_config.transforms);
        for (int k = 0; k < warp_config.transforms; ++k) {
            ControlPointSet ctrl;
            for (int i = 0; i < warp_config.points_per_transform; ++i) {
                const int idx = k * warp_config.points_per_transform + i;
                ctrl.pairs.push_back({driving_window.frames[driving_frame][idx],
                                      source_window.frames[0][idx]});
            }
            const TPSParams params = tps_fit(ctrl, config.tps_regularization);
            flows.push_back(tps_flow_grid(params, warp_config.canvas_h, warp_config.canvas_w));
        }
        combined = combine_flows(flows, WeightGrid::uniform(warp_config.canvas_h,
                                                            warp_config.canvas_w,
                                                            warp_config.transforms));
        save_flow_bin(emit("flow.bin"), combined);
        return 0;
    });

    // --- warp: source skeleton render carried along the flow -----------------
    stage("warp", [&] {
        HeatmapConfig render_config;
        render_config.resolutions = {{config.canvas, config.canvas}};
        if (config.heatmap_sigma > 0.0) render_config.sigma = config.heatmap_sigma;
        EdgeSet edges{sample.gesture.layout.edges};
        const auto source_maps = render_skeleton_heatmaps(
            source_window.frames[0], edges, render_config, config.canvas, config.canvas);
        const ImageGrid source_image = heatmap_to_image(source_maps.front());
        save_png(emit("source.png"), source_image);
        const ImageGrid warped = warp_image(source_image, combined);
        save_png(emit("warped.png"), warped);
        return 0;
    });

    // --- multi-resolution heatmaps of the driving pose -----------------------
    stage("heatmap", [&] {
        HeatmapConfig hm_config;
        hm_config.resolutions.clear();
        for (int s : config.heatmap_sizes) hm_config.resolutions.push_back({s, s});
        if (config.heatmap_sigma > 0.0) hm_config.sigma = config.heatmap_sigma;
        EdgeSet edges{sample.gesture.layout.edges};
        const auto maps = render_skeleton_heatmaps(driving_window.frames[driving_frame], edges,
                                                   hm_config, config.canvas, config.canvas);
        for (std::size_t i = 0; i < maps.size(); ++i) {
            save_png(emit("heatmap_" + std::to_string(config.heatmap_sizes[i]) + ".png"),
                     heatmap_to_image(maps[i]));
        }
        return 0;
    });

    // --- metrics -------------------------------------------------------------
    MetricReport& report = result.report;
    stage("metrics", [&] {
        const double delta = config.pcm_delta > 0.0 ? config.pcm_delta : 0.05 * config.canvas;
        double pcm_correct = 0.0;
        double mse_total = 0.0;
        for (int w = 0; w < W; ++w) {
            pcm_correct += pcm(decoded_windows[w], windows[w], delta);
            mse_total += mse(decoded_windows[w], windows[w]);
        }
        report.values["pcm"] = pcm_correct / W;
        report.values["mse"] = mse_total / W;
        report.values["velocity"] = velocity_penalty(decoded_windows.front());
        report.values["acceleration"] = acceleration_penalty(decoded_windows.front());
        report.values["l_mask_face"] = face_state.l_mask;
        report.values["l_mask_body"] = body_state.l_mask;
        if (config.rvq_layers > 1) {
            report.values["l_res_face"] = face_state.l_res;
            report.values["l_res_body"] = body_state.l_res;
        }

        // FGD over per-frame flattened keypoints, input vs decoded.
        Matrix real_rows(W * T, face_feats[0].dim() + body_feats[0].dim());
        Matrix gen_rows(W * T, real_rows.cols());
        for (int w = 0; w < W; ++w) {
            auto [gen_face, gen_body] = flatten_frames(decoded_windows[w], true);
            for (int t = 0; t < T; ++t) {
                real_rows.row(w * T + t) << face_feats[w].rows.row(t), body_feats[w].rows.row(t);
                gen_rows.row(w * T + t) << gen_face.rows.row(t), gen_body.rows.row(t);
            }
        }
        report.values["fgd"] =
            frechet_distance(GaussianStats::fit(real_rows), GaussianStats::fit(gen_rows));

        if (W >= 2) {
            std::vector<Vector> clips;
            for (int w = 0; w < W; ++w) {
                auto [gen_face, gen_body] = flatten_frames(decoded_windows[w], true);
                Vector clip(real_rows.cols());
                clip << gen_face.rows.colwise().mean().transpose(),
                    gen_body.rows.colwise().mean().transpose();
                clips.push_back(std::move(clip));
            }
            report.values["diversity_l1"] = diversity_l1(clips);
            report.values["diversity_l2"] = diversity_l2(clips);
        }

        if (!sample.audio_beats.empty()) {
            const auto beats = motion_beats(decoded_windows.front());
            report.values["bas"] = beat_align_score(sample.audio_beats, beats, config.sigma_b);
            report.values["bc"] = beat_constancy(sample.audio_beats, beats, config.sigma_b);
            report.values["motion_beats"] = static_cast<double>(beats.size());
        }
        return 0;
    });

    // --- report --------------------------------------------------------------
    report.config["config_hash"] = hex64(config.hash());
    report.config["seed"] = std::to_string(config.seed);
    report.config["predictor"] = config.predictor;
    report.config["windows"] = std::to_string(W);
    report.config["coordinates"] = "canvas-normalized for quantization, pixels elsewhere";
    result.report_path = emit("report.json");
    {
        json j;
        j["config_hash"] = hex64(config.hash());
        j["config"] = json::object();
        for (const auto& [k, v] : report.config) j["config"][k] = v;
        j["metrics"] = report.values;
        json artifacts = json::array();
        for (const auto& a : result.artifacts) artifacts.push_back(a.filename().string());
        j["artifacts"] = std::move(artifacts);
        std::ofstream out(result.report_path);
        out << j.dump(2) << '\n';
    }
    return result;
}

}  // namespace gesturekit
