#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gesturekit/align.hpp"
#include "gesturekit/config.hpp"
#include "gesturekit/heatmap.hpp"
#include "gesturekit/io.hpp"
#include "gesturekit/maskgen.hpp"
#include "gesturekit/metrics.hpp"
#include "gesturekit/pipeline.hpp"
#include "gesturekit/rvq.hpp"
#include "gesturekit/synth.hpp"
#include "gesturekit/tps.hpp"

namespace py = pybind11;
using namespace gesturekit;

namespace {

GestureSequence sequence_from_array(const Eigen::MatrixXd& frames_xy, double fps, double canvas) {
    // frames_xy: T x (2 * P) interleaved coordinates with the standard layout.
    const KeypointLayout layout = KeypointLayout::standard();
    if (frames_xy.cols() != 2 * layout.point_count()) {
        throw ValidationError("expected " + std::to_string(2 * layout.point_count()) +
                              " columns for the standard layout");
    }
    GestureSequence seq;
    seq.fps = fps;
    seq.canvas_w = canvas;
    seq.canvas_h = canvas;
    seq.frames.resize(frames_xy.rows());
    for (int t = 0; t < frames_xy.rows(); ++t) {
        seq.frames[t].resize(layout.point_count());
        for (int k = 0; k < layout.point_count(); ++k) {
            seq.frames[t][k] = Point2(frames_xy(t, 2 * k), frames_xy(t, 2 * k + 1));
        }
    }
    seq.validate();
    return seq;
}

Eigen::MatrixXd sequence_to_array(const GestureSequence& seq) {
    Eigen::MatrixXd out(seq.length(), 2 * seq.layout.point_count());
    for (int t = 0; t < seq.length(); ++t) {
        for (int k = 0; k < seq.layout.point_count(); ++k) {
            out(t, 2 * k) = seq.frames[t][k].x();
            out(t, 2 * k + 1) = seq.frames[t][k].y();
        }
    }
    return out;
}

FeatureSequence features_from_array(const Eigen::MatrixXd& rows) {
    FeatureSequence f;
    f.rows = rows;
    f.validate();
    return f;
}

}  // namespace

PYBIND11_MODULE(_gesturekit, m) {
    m.doc() = "Gesture tokenization, masked decoding, TPS warping, edge heatmaps, and metrics";

    py::register_exception<ValidationError>(m, "GestureValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "GestureNumericalError", PyExc_ArithmeticError);

    // ---- alignment -----------------------------------------------------------
    m.def(
        "cosine_similarity_matrix",
        [](const std::vector<Eigen::MatrixXd>& speech, const std::vector<Eigen::MatrixXd>& gesture,
           double temperature) {
            std::vector<EmbeddingSequence> s, g;
            for (const auto& rows : speech) s.push_back(EmbeddingSequence::from_rows(rows));
            for (const auto& rows : gesture) g.push_back(EmbeddingSequence::from_rows(rows));
            return cosine_similarity_matrix(s, g, temperature).entries;
        },
        py::arg("speech"), py::arg("gesture"), py::arg("temperature") = 0.7,
        "Pairwise cosine similarities of mean-pooled embedding sequences");

    m.def(
        "infonce_loss",
        [](const Eigen::MatrixXd& entries, double temperature) {
            SimilarityMatrix S;
            S.entries = entries;
            S.temperature = temperature;
            return infonce_loss(S);
        },
        py::arg("similarity"), py::arg("temperature") = 0.7);

    m.def(
        "retrieval_recall",
        [](const Eigen::MatrixXd& entries, const std::vector<int>& ks, double temperature) {
            SimilarityMatrix S;
            S.entries = entries;
            S.temperature = temperature;
            return retrieval_recall(S, ks);
        },
        py::arg("similarity"), py::arg("ks"), py::arg("temperature") = 0.7);

    m.def(
        "build_chronological_negative",
        [](const Eigen::MatrixXd& speech, const std::vector<std::tuple<std::string, double, double>>& segments,
           const std::vector<int>& permutation, double fps) {
            TimedTranscript transcript;
            for (const auto& [text, start, end] : segments) {
                transcript.segments.push_back({text, start, end});
            }
            return build_chronological_negative(features_from_array(speech), transcript,
                                                permutation, fps)
                .rows;
        },
        py::arg("speech"), py::arg("segments"), py::arg("permutation"), py::arg("fps") = 25.0);

    m.def(
        "mean_pool_embed",
        [](const Eigen::MatrixXd& features, const Eigen::MatrixXd& projection) {
            const auto e = mean_pool_embed(features_from_array(features), projection);
            return py::make_tuple(e.rows, e.pooled);
        },
        py::arg("features"), py::arg("projection"));

    // ---- RVQ -----------------------------------------------------------------
    py::class_<CodebookStack>(m, "CodebookStack")
        .def_property_readonly("layer_count", &CodebookStack::layer_count)
        .def_property_readonly("dim", &CodebookStack::dim)
        .def("layer_vectors",
             [](const CodebookStack& stack, int layer) { return stack.layers.at(layer).vectors; })
        .def("save", [](const CodebookStack& stack, const std::filesystem::path& path) {
            save_stack(path, stack);
        });
    m.def("load_stack", &load_stack, py::arg("path"));

    m.def(
        "train_codebooks",
        [](const std::vector<Eigen::MatrixXd>& data, int layers, int codes, int epochs,
           std::uint64_t seed) {
            std::vector<FeatureSequence> feats;
            for (const auto& rows : data) feats.push_back(features_from_array(rows));
            RvqTrainConfig config;
            config.layers = layers;
            config.codes = codes;
            config.epochs = epochs;
            config.seed = seed;
            return train_codebooks(feats, config);
        },
        py::arg("data"), py::arg("layers") = 6, py::arg("codes") = 1024, py::arg("epochs") = 25,
        py::arg("seed") = 0);

    m.def(
        "rvq_encode",
        [](const Eigen::MatrixXd& rows, const CodebookStack& stack) {
            const auto result = rvq_encode(features_from_array(rows), stack);
            return py::make_tuple(result.tokens, result.quantized);
        },
        py::arg("features"), py::arg("stack"),
        "Returns (tokens T x R, quantized reconstruction T x d)");

    m.def(
        "rvq_decode",
        [](const Eigen::MatrixXi& tokens, const CodebookStack& stack) {
            return rvq_decode(tokens, stack).rows;
        },
        py::arg("tokens"), py::arg("stack"));

    m.def(
        "rvq_decode_prefix",
        [](const Eigen::MatrixXi& tokens, const CodebookStack& stack, int layers) {
            return rvq_decode_prefix(tokens, stack, layers).rows;
        },
        py::arg("tokens"), py::arg("stack"), py::arg("layers"));

    m.def(
        "rvq_losses",
        [](const Eigen::MatrixXd& rows, const CodebookStack& stack, double alpha) {
            const auto f = features_from_array(rows);
            const auto result = rvq_encode(f, stack);
            const auto losses = rvq_losses(f, result, alpha);
            return py::make_tuple(losses.reconstruction, losses.commitment, losses.total);
        },
        py::arg("features"), py::arg("stack"), py::arg("alpha") = 1.0);

    m.def(
        "distill_loss",
        [](const Eigen::MatrixXd& rows, const CodebookStack& stack, const Eigen::MatrixXd& teacher,
           const Eigen::MatrixXd& projection) {
            const auto result = rvq_encode(features_from_array(rows), stack);
            FeatureSequence t;
            t.rows = teacher;
            t.kind = FeatureKind::TeacherEmbedding;
            return distill_loss(result, t, DistillProjection{projection});
        },
        py::arg("features"), py::arg("stack"), py::arg("teacher"), py::arg("projection"));

    // ---- masked generation -----------------------------------------------------
    m.def("cosine_mask_count", &cosine_mask_count, py::arg("length"), py::arg("iteration"),
          py::arg("total_iterations"));

    m.def(
        "sample_mask_ratio",
        [](std::uint64_t seed, double low, double high) {
            CorruptionPolicy policy;
            policy.ratio_low = low;
            policy.ratio_high = high;
            return sample_mask_ratio(seed, policy);
        },
        py::arg("seed"), py::arg("ratio_low") = 0.5, py::arg("ratio_high") = 1.0);

    m.def(
        "corrupt_tokens",
        [](const std::vector<int>& tokens, int vocab, std::uint64_t seed, double p_mask,
           double p_random, double p_keep, double ratio_low, double ratio_high) {
            TokenSequence seq;
            seq.tokens = tokens;
            seq.vocab = vocab;
            CorruptionPolicy policy{p_mask, p_random, p_keep, ratio_low, ratio_high};
            const auto result = corrupt_tokens(seq, policy, seed);
            return py::make_tuple(result.corrupted.tokens, result.mask_positions, result.ratio);
        },
        py::arg("tokens"), py::arg("vocab"), py::arg("seed"), py::arg("p_mask") = 0.8,
        py::arg("p_random") = 0.1, py::arg("p_keep") = 0.1, py::arg("ratio_low") = 0.5,
        py::arg("ratio_high") = 1.0);

    m.def(
        "iterative_decode_oracle",
        [](const std::vector<int>& truth, int vocab, int steps) {
            TokenSequence seq;
            seq.tokens = truth;
            seq.vocab = vocab;
            OraclePredictor oracle(seq);
            FeatureSequence conditioning;
            conditioning.rows = Matrix::Zero(seq.length(), 1);
            const auto result =
                iterative_decode(oracle, seq.length(), steps, conditioning, truth.at(0), vocab);
            return py::make_tuple(result.tokens.tokens, result.masked_count_trace);
        },
        py::arg("truth"), py::arg("vocab"), py::arg("steps") = 5,
        "Decode against a ground-truth oracle predictor; returns (tokens, masked trace)");

    m.def(
        "cross_entropy_masked",
        [](const Eigen::MatrixXd& pred_rows, const std::vector<int>& target, int vocab,
           const std::vector<int>& mask_positions) {
            TokenSequence seq;
            seq.tokens = target;
            seq.vocab = vocab;
            return cross_entropy_masked(pred_rows, seq, mask_positions);
        },
        py::arg("pred_rows"), py::arg("target"), py::arg("vocab"), py::arg("mask_positions"));

    // ---- TPS -------------------------------------------------------------------
    py::class_<TPSParams>(m, "TPSParams")
        .def_property_readonly("affine", [](const TPSParams& p) { return Eigen::MatrixXd(p.affine); })
        .def_readonly("weights", &TPSParams::weights)
        .def_readonly("anchors", &TPSParams::anchors)
        .def_readonly("fit_residual", &TPSParams::fit_residual);

    m.def(
        "tps_fit",
        [](const Eigen::MatrixXd& driving, const Eigen::MatrixXd& source, double regularization) {
            if (driving.rows() != source.rows() || driving.cols() != 2 || source.cols() != 2) {
                throw ValidationError("driving and source must be N x 2 with equal N");
            }
            ControlPointSet ctrl;
            for (int i = 0; i < driving.rows(); ++i) {
                ctrl.pairs.push_back({Point2(driving(i, 0), driving(i, 1)),
                                      Point2(source(i, 0), source(i, 1))});
            }
            return tps_fit(ctrl, regularization);
        },
        py::arg("driving"), py::arg("source"), py::arg("regularization") = 0.0);

    m.def(
        "tps_eval",
        [](const TPSParams& params, const Eigen::MatrixXd& points) {
            Eigen::MatrixXd out(points.rows(), 2);
            for (int i = 0; i < points.rows(); ++i) {
                out.row(i) = tps_eval_point(params, Point2(points(i, 0), points(i, 1))).transpose();
            }
            return out;
        },
        py::arg("params"), py::arg("points"));

    m.def(
        "tps_flow_grid",
        [](const TPSParams& params, int height, int width) {
            const auto flow = tps_flow_grid(params, height, width);
            Eigen::MatrixXd dx(height, width), dy(height, width);
            for (int y = 0; y < height; ++y) {
                for (int x = 0; x < width; ++x) {
                    dx(y, x) = flow.dx(y, x);
                    dy(y, x) = flow.dy(y, x);
                }
            }
            return py::make_tuple(dx, dy);
        },
        py::arg("params"), py::arg("height"), py::arg("width"));

    m.def("radial_basis", &radial_basis, py::arg("r"));

    m.def(
        "warp_image",
        [](const Eigen::MatrixXd& gray, const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy) {
            ImageGrid image;
            image.height = static_cast<int>(gray.rows());
            image.width = static_cast<int>(gray.cols());
            image.channels = 1;
            image.pixels.resize(gray.size());
            for (int y = 0; y < image.height; ++y) {
                for (int x = 0; x < image.width; ++x) {
                    image.at(y, x, 0) = static_cast<float>(gray(y, x));
                }
            }
            FlowField flow;
            flow.height = image.height;
            flow.width = image.width;
            flow.displacement.resize(static_cast<std::size_t>(flow.height) * flow.width * 2);
            for (int y = 0; y < flow.height; ++y) {
                for (int x = 0; x < flow.width; ++x) {
                    flow.set(y, x, static_cast<float>(dx(y, x)), static_cast<float>(dy(y, x)));
                }
            }
            const auto warped = warp_image(image, flow);
            Eigen::MatrixXd out(image.height, image.width);
            for (int y = 0; y < image.height; ++y) {
                for (int x = 0; x < image.width; ++x) out(y, x) = warped.at(y, x, 0);
            }
            return out;
        },
        py::arg("gray"), py::arg("dx"), py::arg("dy"),
        "Bilinear backward warp of a single-channel image");

    // ---- heatmaps ----------------------------------------------------------------
    m.def(
        "point_segment_distance",
        [](const Point2& p, const Point2& a, const Point2& b) {
            const auto r = point_segment_distance(p, a, b);
            return py::make_tuple(r.distance, r.t);
        },
        py::arg("p"), py::arg("a"), py::arg("b"));

    m.def(
        "edge_map",
        [](const Point2& ki, const Point2& kj, double sigma, int height, int width) {
            const auto map = edge_map(ki, kj, sigma, height, width);
            Eigen::MatrixXd out(height, width);
            for (int y = 0; y < height; ++y) {
                for (int x = 0; x < width; ++x) out(y, x) = map.at(y, x);
            }
            return out;
        },
        py::arg("ki"), py::arg("kj"), py::arg("sigma"), py::arg("height"), py::arg("width"));

    m.def(
        "render_skeleton_heatmaps",
        [](const Eigen::MatrixXd& frame_xy, const std::vector<std::pair<int, int>>& edge_list,
           const std::vector<int>& sizes, double sigma, double canvas) {
            KeypointFrame frame(frame_xy.rows());
            for (int k = 0; k < frame_xy.rows(); ++k) {
                frame[k] = Point2(frame_xy(k, 0), frame_xy(k, 1));
            }
            EdgeSet edges;
            for (auto [a, b] : edge_list) edges.edges.push_back({a, b});
            HeatmapConfig config;
            config.resolutions.clear();
            for (int s : sizes) config.resolutions.push_back({s, s});
            if (sigma > 0.0) config.sigma = sigma;
            const auto maps = render_skeleton_heatmaps(frame, edges, config, canvas, canvas);
            std::vector<Eigen::MatrixXd> out;
            for (const auto& map : maps) {
                Eigen::MatrixXd grid(map.height, map.width);
                for (int y = 0; y < map.height; ++y) {
                    for (int x = 0; x < map.width; ++x) grid(y, x) = map.at(y, x);
                }
                out.push_back(std::move(grid));
            }
            return out;
        },
        py::arg("frame"), py::arg("edges"), py::arg("sizes"), py::arg("sigma") = 0.0,
        py::arg("canvas") = 256.0);

    m.def("standard_edges", [] {
        std::vector<std::pair<int, int>> out;
        for (const Edge& e : KeypointLayout::standard().edges) out.emplace_back(e.a, e.b);
        return out;
    });

    // ---- metrics -------------------------------------------------------------------
    m.def(
        "frechet_distance",
        [](const Eigen::MatrixXd& samples_a, const Eigen::MatrixXd& samples_b) {
            return frechet_distance(GaussianStats::fit(samples_a), GaussianStats::fit(samples_b));
        },
        py::arg("samples_a"), py::arg("samples_b"));

    m.def(
        "frechet_distance_stats",
        [](const Eigen::VectorXd& mean_a, const Eigen::MatrixXd& cov_a, const Eigen::VectorXd& mean_b,
           const Eigen::MatrixXd& cov_b) {
            GaussianStats a{mean_a, cov_a, 1};
            GaussianStats b{mean_b, cov_b, 1};
            return frechet_distance(a, b);
        },
        py::arg("mean_a"), py::arg("cov_a"), py::arg("mean_b"), py::arg("cov_b"));

    m.def(
        "diversity",
        [](const std::vector<Eigen::VectorXd>& clips, const std::string& norm) {
            if (norm == "l1") return diversity_l1(clips);
            if (norm == "l2") return diversity_l2(clips);
            throw ValidationError("norm must be l1 or l2");
        },
        py::arg("clips"), py::arg("norm") = "l1");

    m.def("beat_align_score", &beat_align_score, py::arg("audio_beats"), py::arg("motion_beats"),
          py::arg("sigma_b") = 0.1);
    m.def("beat_constancy", &beat_constancy, py::arg("audio_beats"), py::arg("motion_beats"),
          py::arg("sigma_b") = 0.1);

    m.def(
        "motion_beats",
        [](const Eigen::MatrixXd& frames_xy, double fps, double canvas) {
            return motion_beats(sequence_from_array(frames_xy, fps, canvas));
        },
        py::arg("frames"), py::arg("fps") = 25.0, py::arg("canvas") = 256.0);

    m.def(
        "pcm",
        [](const Eigen::MatrixXd& gen, const Eigen::MatrixXd& gt, double delta, double fps,
           double canvas) {
            return pcm(sequence_from_array(gen, fps, canvas), sequence_from_array(gt, fps, canvas),
                       delta);
        },
        py::arg("gen"), py::arg("gt"), py::arg("delta"), py::arg("fps") = 25.0,
        py::arg("canvas") = 256.0);

    m.def(
        "mse",
        [](const Eigen::MatrixXd& gen, const Eigen::MatrixXd& gt, double fps, double canvas) {
            return mse(sequence_from_array(gen, fps, canvas), sequence_from_array(gt, fps, canvas));
        },
        py::arg("gen"), py::arg("gt"), py::arg("fps") = 25.0, py::arg("canvas") = 256.0);

    // ---- synthesis / pipeline ---------------------------------------------------------
    m.def(
        "synth_generate",
        [](const std::string& kind, int frames, std::uint64_t seed) {
            SyntheticSpec spec;
            spec.kind = synth_kind_from_name(kind);
            spec.frames = frames;
            spec.seed = seed;
            const auto sample = synth_generate(spec);
            return py::make_tuple(sequence_to_array(sample.gesture), sample.speech.rows,
                                  sample.audio_beats);
        },
        py::arg("kind") = "circle-motion", py::arg("frames") = 80, py::arg("seed") = 0,
        "Returns (keypoints T x 232, speech T x D, audio beat times)");

    m.def(
        "run_pipeline",
        [](const std::string& config_text, const std::filesystem::path& out_dir) {
            const auto config = PipelineConfig::parse_text(config_text);
            const auto result = run_pipeline(config, out_dir);
            return result.report.values;
        },
        py::arg("config_text"), py::arg("out_dir"));

    m.def("default_config", [] { return PipelineConfig().serialize(); });
}
