#include "gesturekit/rvq.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace gesturekit {

namespace {

int nearest_code(const Codebook& book, const Eigen::RowVectorXd& row) {
    int best = 0;
    double best_dist = (book.vectors.row(0) - row).squaredNorm();
    for (int c = 1; c < book.codes(); ++c) {
        const double d = (book.vectors.row(c) - row).squaredNorm();
        if (d < best_dist) {
            best_dist = d;
            best = c;
        }
    }
    return best;
}

void write_u32le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ValidationError("unexpected end of stack file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void Codebook::validate() const {
    if (codes() < 1 || dim() < 1) throw ValidationError("codebook must be at least 1x1");
    if (!vectors.allFinite()) throw ValidationError("codebook contains non-finite vectors");
    if (!usage_counts.empty() && static_cast<int>(usage_counts.size()) != codes()) {
        throw ValidationError("usage_counts size does not match code count");
    }
    for (std::int64_t c : usage_counts) {
        if (c < 0) throw ValidationError("negative usage count");
    }
}

void CodebookStack::validate() const {
    if (layers.empty()) throw ValidationError("codebook stack has no layers");
    for (const Codebook& layer : layers) {
        layer.validate();
        if (layer.dim() != dim()) throw ValidationError("codebook layers disagree on dimension");
    }
}

QuantizationResult rvq_encode(const FeatureSequence& x, const CodebookStack& stack) {
    x.validate();
    stack.validate();
    if (x.dim() != stack.dim()) {
        throw ValidationError("feature dim " + std::to_string(x.dim()) +
                              " does not match codebook dim " + std::to_string(stack.dim()));
    }
    const int T = x.length();
    const int R = stack.layer_count();
    QuantizationResult result;
    result.tokens.resize(T, R);
    result.quantized = Matrix::Zero(T, x.dim());
    result.residuals.reserve(R + 1);
    Matrix residual = x.rows;
    for (int r = 0; r < R; ++r) {
        result.residuals.push_back(residual);
        const Codebook& book = stack.layers[r];
        for (int t = 0; t < T; ++t) {
            const int token = nearest_code(book, residual.row(t));
            result.tokens(t, r) = token;
            residual.row(t) -= book.vectors.row(token);
            result.quantized.row(t) += book.vectors.row(token);
        }
    }
    result.residuals.push_back(residual);
    return result;
}

FeatureSequence rvq_decode(const Eigen::MatrixXi& tokens, const CodebookStack& stack) {
    return rvq_decode_prefix(tokens, stack, stack.layer_count());
}

FeatureSequence rvq_decode_prefix(const Eigen::MatrixXi& tokens, const CodebookStack& stack,
                                  int layers) {
    stack.validate();
    if (tokens.rows() < 1) throw ValidationError("token matrix is empty");
    if (tokens.cols() != stack.layer_count()) {
        throw ValidationError("token matrix has " + std::to_string(tokens.cols()) +
                              " layers, stack has " + std::to_string(stack.layer_count()));
    }
    if (layers < 1 || layers > stack.layer_count()) {
        throw ValidationError("prefix layer count out of range");
    }
    FeatureSequence out;
    out.kind = FeatureKind::GestureEmbedding;
    out.rows = Matrix::Zero(tokens.rows(), stack.dim());
    for (int r = 0; r < layers; ++r) {
        const Codebook& book = stack.layers[r];
        for (int t = 0; t < tokens.rows(); ++t) {
            const int token = tokens(t, r);
            if (token < 0 || token >= book.codes()) {
                throw ValidationError("token " + std::to_string(token) + " out of range at frame " +
                                      std::to_string(t) + ", layer " + std::to_string(r));
            }
            out.rows.row(t) += book.vectors.row(token);
        }
    }
    return out;
}

RvqLosses rvq_losses(const FeatureSequence& x, const QuantizationResult& result, double alpha) {
    x.validate();
    if (!std::isfinite(alpha)) throw ValidationError("alpha must be finite");
    const int T = x.length();
    if (result.quantized.rows() != T || result.quantized.cols() != x.dim()) {
        throw ValidationError("quantization result shape does not match input");
    }
    if (result.residuals.size() < 2) throw ValidationError("quantization result has no layers");
    if (!result.quantized.allFinite()) throw NumericalError("non-finite quantized values");
    RvqLosses losses;
    losses.reconstruction = (x.rows - result.quantized).rowwise().squaredNorm().mean();
    // z_r - e_r is exactly the residual entering layer r+1.
    const int R = static_cast<int>(result.residuals.size()) - 1;
    for (int r = 1; r <= R; ++r) {
        if (!result.residuals[r].allFinite()) throw NumericalError("non-finite residual");
        losses.commitment += result.residuals[r].rowwise().squaredNorm().mean();
    }
    losses.total = losses.reconstruction + alpha * losses.commitment;
    return losses;
}

double distill_loss(const QuantizationResult& result, const FeatureSequence& teacher,
                    const DistillProjection& proj) {
    teacher.validate();
    if (!proj.matrix.allFinite()) throw ValidationError("projection contains non-finite values");
    const int T = static_cast<int>(result.quantized.rows());
    if (teacher.length() != T) {
        throw ValidationError("teacher length " + std::to_string(teacher.length()) +
                              " does not match quantized length " + std::to_string(T));
    }
    if (proj.matrix.rows() != result.quantized.cols() || proj.matrix.cols() != teacher.dim()) {
        throw ValidationError("projection shape does not map quantized dim to teacher dim");
    }
    const Matrix projected = result.quantized * proj.matrix;
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
        const double np = projected.row(t).norm();
        const double nt = teacher.rows.row(t).norm();
        if (np == 0.0) throw ValidationError("projected quantized row " + std::to_string(t) + " has zero norm");
        if (nt == 0.0) throw ValidationError("teacher row " + std::to_string(t) + " has zero norm");
        total += projected.row(t).dot(teacher.rows.row(t)) / (np * nt);
    }
    return -total / T;
}

RvqLosses rvq_losses(const FeatureSequence& x, const QuantizationResult& result,
                     const FeatureSequence& teacher, const DistillProjection& proj, double alpha,
                     double beta) {
    RvqLosses losses = rvq_losses(x, result, alpha);
    if (!std::isfinite(beta)) throw ValidationError("beta must be finite");
    losses.distill = distill_loss(result, teacher, proj);
    losses.total += beta * losses.distill;
    return losses;
}

namespace {

struct LayerTrainer {
    Matrix centers;           // C x d
    Vector ema_counts;        // per code
    Matrix ema_sums;          // C x d
    std::vector<std::int64_t> epoch_usage;

    LayerTrainer(int codes, int dim)
        : centers(codes, dim),
          ema_counts(Vector::Zero(codes)),
          ema_sums(Matrix::Zero(codes, dim)),
          epoch_usage(codes, 0) {}
};

int nearest_center(const Matrix& centers, const Eigen::RowVectorXd& row) {
    int best = 0;
    double best_dist = (centers.row(0) - row).squaredNorm();
    for (int c = 1; c < centers.rows(); ++c) {
        const double d = (centers.row(c) - row).squaredNorm();
        if (d < best_dist) {
            best_dist = d;
            best = c;
        }
    }
    return best;
}

/// Initialize centers from distinct data rows where possible.
void init_centers(LayerTrainer& trainer, const Matrix& data, Rng& rng) {
    const int n = static_cast<int>(data.rows());
    const int codes = static_cast<int>(trainer.centers.rows());
    std::vector<std::size_t> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<int> picked;
    picked.reserve(codes);
    for (std::size_t idx : order) {
        if (static_cast<int>(picked.size()) == codes) break;
        bool duplicate = false;
        for (int p : picked) {
            if (data.row(p) == data.row(static_cast<int>(idx))) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) picked.push_back(static_cast<int>(idx));
    }
    // Fewer distinct rows than codes: reuse rows, dead-code resets clean up later.
    std::size_t cursor = 0;
    while (static_cast<int>(picked.size()) < codes) {
        picked.push_back(static_cast<int>(order[cursor % order.size()]));
        ++cursor;
    }
    for (int c = 0; c < codes; ++c) {
        trainer.centers.row(c) = data.row(picked[c]);
        trainer.ema_counts(c) = 1.0;
        trainer.ema_sums.row(c) = data.row(picked[c]);
    }
}

}  // namespace

CodebookStack train_codebooks(const std::vector<FeatureSequence>& data, const RvqTrainConfig& config) {
    if (config.layers < 1) throw ValidationError("need at least one quantizer layer");
    if (config.codes < 1) throw ValidationError("need at least one code");
    if (config.epochs < 1) throw ValidationError("need at least one epoch");
    if (!(config.ema_decay > 0.0 && config.ema_decay < 1.0)) {
        throw ValidationError("ema_decay must lie in (0, 1)");
    }
    if (data.empty()) throw ValidationError("no training data");
    int total_rows = 0;
    const int dim = data.front().dim();
    for (const FeatureSequence& f : data) {
        f.validate();
        if (f.dim() != dim) throw ValidationError("training sequences disagree on dimension");
        total_rows += f.length();
    }
    if (total_rows < config.codes) {
        throw ValidationError("only " + std::to_string(total_rows) + " rows for " +
                              std::to_string(config.codes) +
                              " codes; use a smaller codebook (--codes)");
    }
    Matrix residual(total_rows, dim);
    int row = 0;
    for (const FeatureSequence& f : data) {
        residual.middleRows(row, f.length()) = f.rows;
        row += f.length();
    }

    CodebookStack stack;
    stack.layers.reserve(config.layers);
    for (int layer = 0; layer < config.layers; ++layer) {
        Rng rng(config.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(layer) + 1);
        LayerTrainer trainer(config.codes, dim);
        init_centers(trainer, residual, rng);

        std::vector<std::size_t> order(total_rows);
        for (int i = 0; i < total_rows; ++i) order[i] = i;
        const double dead_threshold =
            config.dead_fraction * static_cast<double>(total_rows) / config.codes;

        for (int epoch = 0; epoch < config.epochs; ++epoch) {
            rng.shuffle(order);
            std::fill(trainer.epoch_usage.begin(), trainer.epoch_usage.end(), 0);
            for (int start = 0; start < total_rows; start += config.batch_size) {
                const int end = std::min(start + config.batch_size, total_rows);
                Vector batch_counts = Vector::Zero(config.codes);
                Matrix batch_sums = Matrix::Zero(config.codes, dim);
                for (int i = start; i < end; ++i) {
                    const auto r = residual.row(static_cast<int>(order[i]));
                    const int c = nearest_center(trainer.centers, r);
                    batch_counts(c) += 1.0;
                    batch_sums.row(c) += r;
                    ++trainer.epoch_usage[c];
                }
                trainer.ema_counts = config.ema_decay * trainer.ema_counts +
                                     (1.0 - config.ema_decay) * batch_counts;
                trainer.ema_sums = config.ema_decay * trainer.ema_sums +
                                   (1.0 - config.ema_decay) * batch_sums;
                for (int c = 0; c < config.codes; ++c) {
                    if (trainer.ema_counts(c) > 1e-9) {
                        trainer.centers.row(c) = trainer.ema_sums.row(c) / trainer.ema_counts(c);
                    }
                }
            }
            for (int c = 0; c < config.codes; ++c) {
                if (static_cast<double>(trainer.epoch_usage[c]) < dead_threshold) {
                    const int pick = static_cast<int>(rng.below(total_rows));
                    trainer.centers.row(c) = residual.row(pick);
                    trainer.ema_counts(c) = 1.0;
                    trainer.ema_sums.row(c) = residual.row(pick);
                }
            }
        }

        // Exact Lloyd pass: final centers are the means of their assigned rows,
        // so prefix reconstruction error on the training data cannot increase.
        std::vector<int> assignment(total_rows);
        Vector counts = Vector::Zero(config.codes);
        Matrix sums = Matrix::Zero(config.codes, dim);
        for (int i = 0; i < total_rows; ++i) {
            const int c = nearest_center(trainer.centers, residual.row(i));
            assignment[i] = c;
            counts(c) += 1.0;
            sums.row(c) += residual.row(i);
        }
        Codebook book;
        book.vectors.resize(config.codes, dim);
        book.usage_counts.assign(config.codes, 0);
        for (int c = 0; c < config.codes; ++c) {
            if (counts(c) > 0.0) {
                book.vectors.row(c) = sums.row(c) / counts(c);
            } else {
                book.vectors.row(c) = trainer.centers.row(c);
            }
            book.usage_counts[c] = static_cast<std::int64_t>(counts(c));
        }
        // Advance residuals with the final codebook (fresh nearest-code pass).
        for (int i = 0; i < total_rows; ++i) {
            const int c = nearest_code(book, residual.row(i));
            residual.row(i) -= book.vectors.row(c);
        }
        stack.layers.push_back(std::move(book));
    }
    return stack;
}

void save_stack(const std::filesystem::path& path, const CodebookStack& stack) {
    stack.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path.string());
    out.write("GKRQ", 4);
    write_u32le(out, static_cast<std::uint32_t>(stack.layer_count()));
    write_u32le(out, static_cast<std::uint32_t>(stack.layers.front().codes()));
    write_u32le(out, static_cast<std::uint32_t>(stack.dim()));
    for (const Codebook& layer : stack.layers) {
        if (layer.codes() != stack.layers.front().codes()) {
            throw ValidationError("stack serialization requires equal code counts per layer");
        }
        for (int c = 0; c < layer.codes(); ++c) {
            for (int d = 0; d < layer.dim(); ++d) {
                const float v = static_cast<float>(layer.vectors(c, d));
                std::uint32_t bits;
                std::memcpy(&bits, &v, 4);
                write_u32le(out, bits);
            }
        }
    }
}

CodebookStack load_stack(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open for reading: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "GKRQ", 4) != 0) {
        throw ValidationError("bad stack file magic in " + path.string());
    }
    const std::uint32_t R = read_u32le(in);
    const std::uint32_t C = read_u32le(in);
    const std::uint32_t d = read_u32le(in);
    if (R < 1 || C < 1 || d < 1) throw ValidationError("stack header declares empty stack");
    CodebookStack stack;
    for (std::uint32_t r = 0; r < R; ++r) {
        Codebook book;
        book.vectors.resize(C, d);
        book.usage_counts.assign(C, 0);
        for (std::uint32_t c = 0; c < C; ++c) {
            for (std::uint32_t k = 0; k < d; ++k) {
                const std::uint32_t bits = read_u32le(in);
                float v;
                std::memcpy(&v, &bits, 4);
                book.vectors(c, k) = v;
            }
        }
        stack.layers.push_back(std::move(book));
    }
    if (in.peek() != std::istream::traits_type::eof()) {
        throw ValidationError("trailing bytes in stack file " + path.string());
    }
    stack.validate();
    return stack;
}

}  // namespace gesturekit
