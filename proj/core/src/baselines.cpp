#include "jcm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "jcm/metrics.hpp"
#include "jcm/rng.hpp"

namespace jcm {

int uniform_quantize(double v, int levels, double lo, double hi) {
    if (levels < 2 || hi <= lo) throw std::invalid_argument("uniform_quantize: bad grid");
    const double delta = (hi - lo) / levels;
    int idx = static_cast<int>(std::floor((v - lo) / delta));
    if (idx < 0) idx = 0;
    if (idx >= levels) idx = levels - 1;
    return idx;
}

double uniform_dequantize(int index, int levels, double lo, double hi) {
    if (index < 0 || index >= levels) throw std::out_of_range("uniform_dequantize: index");
    const double delta = (hi - lo) / levels;
    return lo + (index + 0.5) * delta;
}

LearnedQuantizer learned_quantizer_train(const std::vector<double>& corpus, int levels) {
    if (corpus.empty() || levels < 2)
        throw std::invalid_argument("learned_quantizer_train: need a corpus and >= 2 levels");
    const auto [mn, mx] = std::minmax_element(corpus.begin(), corpus.end());
    if (*mx - *mn < 1e-12)
        throw std::invalid_argument("learned_quantizer_train: degenerate constant corpus");

    std::vector<double> sorted = corpus;
    std::sort(sorted.begin(), sorted.end());

    // Lloyd iterations on the 1-D codebook, quantile-initialized.
    LearnedQuantizer q;
    q.levels.resize(levels);
    for (int m = 0; m < levels; ++m) {
        const std::size_t at = std::min(sorted.size() - 1,
                                        static_cast<std::size_t>((m + 0.5) * sorted.size() / levels));
        q.levels[m] = sorted[at];
    }
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<double> sum(levels, 0.0);
        std::vector<int> count(levels, 0);
        std::size_t i = 0;
        for (int m = 0; m < levels; ++m) {
            const double upper = m + 1 < levels
                                     ? 0.5 * (q.levels[m] + q.levels[m + 1])
                                     : std::numeric_limits<double>::infinity();
            while (i < sorted.size() && sorted[i] <= upper) {
                sum[m] += sorted[i];
                ++count[m];
                ++i;
            }
        }
        double shift = 0.0;
        for (int m = 0; m < levels; ++m) {
            if (count[m] == 0) continue;  // empty cell keeps its level
            const double next = sum[m] / count[m];
            shift = std::max(shift, std::abs(next - q.levels[m]));
            q.levels[m] = next;
        }
        std::sort(q.levels.begin(), q.levels.end());
        if (shift < 1e-10) break;
    }
    return q;
}

int quantize_nearest(const LearnedQuantizer& q, double v) {
    int best = 0;
    double best_d = std::abs(v - q.levels[0]);
    for (std::size_t m = 1; m < q.levels.size(); ++m) {
        const double d = std::abs(v - q.levels[m]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(m);
        }
    }
    return best;
}

HardSoftResult hard_soft_quantize(cplx v, const Constellation& c, double temperature) {
    if (temperature <= 0.0) throw std::invalid_argument("hard_soft_quantize: temperature > 0");
    HardSoftResult out;
    out.hard_index = nearest_symbol(v, c);
    const int M = static_cast<int>(c.points.size());
    std::vector<double> score(M);
    double mx = -std::numeric_limits<double>::infinity();
    for (int m = 0; m < M; ++m) {
        score[m] = -std::norm(v - c.points[m]) / temperature;
        mx = std::max(mx, score[m]);
    }
    double sum = 0.0;
    for (auto& s : score) {
        s = std::exp(s - mx);
        sum += s;
    }
    cplx soft(0.0, 0.0);
    for (int m = 0; m < M; ++m) soft += (score[m] / sum) * c.points[m];
    out.soft = soft;
    return out;
}

ComplexSequence analog_transmit(const std::vector<double>& encoder_output,
                                const ChannelConfig& cfg, std::uint64_t seed) {
    if (encoder_output.empty() || encoder_output.size() % 2 != 0)
        throw std::invalid_argument("analog_transmit: need 2n reals");
    ComplexSequence z(encoder_output.size() / 2);
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = cplx(encoder_output[2 * i], encoder_output[2 * i + 1]);
    return awgn_transmit(normalize_power(z, cfg.power), cfg, seed);
}

BaselineModel make_baseline_model(BaselineKind kind, const JCMConfig& cfg,
                                  std::uint64_t init_seed, double hs_temperature) {
    BaselineModel model;
    model.kind = kind;
    model.cfg = cfg;
    model.constellation = cfg.scheme == Scheme::BPSK ? make_bpsk() : make_rect_qam(cfg.order);
    model.channel = make_channel_config(cfg.snr_db, cfg.power);
    model.hs_temperature = hs_temperature;
    const int head = cfg.n * num_axes(cfg.scheme);
    model.enc_spec = make_mlp_spec(cfg.source_dim, cfg.enc_hidden, head, HeadKind::Linear);
    model.dec_s_spec = make_mlp_spec(2 * cfg.n, cfg.dec_s_hidden, cfg.num_classes, HeadKind::Logits);
    model.dec_o_spec = make_mlp_spec(2 * cfg.n, cfg.dec_o_hidden, cfg.source_dim, HeadKind::Linear);
    init_mlp(model.params, model.enc_spec, "enc", mix_seed({init_seed, 1}), 0.05);
    init_mlp(model.params, model.dec_s_spec, "dec_s", mix_seed({init_seed, 2}));
    init_mlp(model.params, model.dec_o_spec, "dec_o", mix_seed({init_seed, 3}));
    return model;
}

DecoderGraph build_baseline_forward(ad::Tape& tape, BaselineModel& model, const Mat& x,
                                    const std::vector<int>& labels, const Mat& channel_noise,
                                    SymbolPath path) {
    const JCMConfig& cfg = model.cfg;
    const int batch = x.rows;
    const int axes = num_axes(cfg.scheme);
    ad::Value v = mlp_apply(tape, model.params, model.enc_spec, "enc", tape.constant(x));

    ad::Value z;  // B x 2n in [I | Q] layout
    if (model.kind == BaselineKind::Analog) {
        if (axes == 2) {
            z = tape.permute_cols(v, iq_block_permutation(cfg.n));
        } else {
            z = tape.concat_cols(v, tape.constant(Mat::zeros(batch, cfg.n)));
        }
    } else if (model.kind == BaselineKind::HardSoftQuant) {
        const int M = cfg.order;
        const int rows = batch * cfg.n;
        ad::Value vi, vq;
        if (axes == 2) {
            ad::Value blocks = tape.permute_cols(v, iq_block_permutation(cfg.n));
            vi = tape.reshape(tape.slice_cols(blocks, 0, cfg.n), rows, 1);
            vq = tape.reshape(tape.slice_cols(blocks, cfg.n, 2 * cfg.n), rows, 1);
        } else {
            vi = tape.reshape(v, rows, 1);
        }

        Mat neg_re(rows, M), neg_im(rows, M);
        Mat re_col(M, 1), im_col(M, 1);
        for (int m = 0; m < M; ++m) {
            re_col(m, 0) = model.constellation.points[m].real();
            im_col(m, 0) = model.constellation.points[m].imag();
            for (int r = 0; r < rows; ++r) {
                neg_re(r, m) = -re_col(m, 0);
                neg_im(r, m) = -im_col(m, 0);
            }
        }
        ad::Value d = tape.square(tape.add_const(tape.broadcast_col(vi, M), neg_re));
        if (axes == 2)
            d = tape.add(d, tape.square(tape.add_const(tape.broadcast_col(vq, M), neg_im)));
        ad::Value w = tape.row_softmax(tape.scale(d, -1.0 / model.hs_temperature));
        ad::Value soft_i = tape.matmul_const(w, re_col);
        ad::Value soft_q_val = axes == 2 ? tape.matmul_const(w, im_col) : ad::Value{};

        // Hard projection from the forward encoder values.
        const Mat vi_val = tape.value(vi);
        const Mat vq_val = axes == 2 ? tape.value(vq) : Mat();
        Mat hard_i(rows, 1), hard_q(rows, 1);
        for (int r = 0; r < rows; ++r) {
            const double re = vi_val(r, 0);
            const double im = axes == 2 ? vq_val(r, 0) : 0.0;
            const int m = nearest_symbol(cplx(re, im), model.constellation);
            hard_i(r, 0) = model.constellation.points[m].real();
            hard_q(r, 0) = model.constellation.points[m].imag();
        }

        ad::Value zi = path == SymbolPath::StraightThrough
                           ? tape.straight_through(soft_i, hard_i)
                           : soft_i;
        ad::Value zi_rows = tape.reshape(zi, batch, cfg.n);
        ad::Value zq_rows;
        if (axes == 2) {
            ad::Value zq = path == SymbolPath::StraightThrough
                               ? tape.straight_through(soft_q_val, hard_q)
                               : soft_q_val;
            zq_rows = tape.reshape(zq, batch, cfg.n);
        } else {
            zq_rows = tape.constant(Mat::zeros(batch, cfg.n));
        }
        z = tape.concat_cols(zi_rows, zq_rows);
    } else {
        throw std::invalid_argument("build_baseline_forward: kind is not trainable");
    }

    ad::Value z_norm = tape.normalize_power_rows(z, cfg.power);
    ad::Value zhat = tape.add_const(z_norm, channel_noise);
    return build_decoder_graph(tape, model.params, model.dec_s_spec, model.dec_o_spec, cfg.lambda,
                               zhat, x, labels);
}

namespace {

Mat rows_subset(const Mat& x, const std::vector<int>& rows) {
    Mat out(static_cast<int>(rows.size()), x.cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int c = 0; c < x.cols; ++c) out(static_cast<int>(i), c) = x(rows[i], c);
    return out;
}

std::vector<Mat> snapshot_params(const ParamStore& store) {
    std::vector<Mat> snap;
    for (const auto& name : store.names()) snap.push_back(store.value(name));
    return snap;
}

void restore_params(ParamStore& store, const std::vector<Mat>& snap) {
    const auto names = store.names();
    for (std::size_t i = 0; i < names.size(); ++i) store.value(names[i]) = snap[i];
}

}  // namespace

TrainResult train_baseline(BaselineModel& model, const Dataset& train_ds, const Dataset& val_ds,
                           const TrainOptions& opts) {
    if (model.kind != BaselineKind::Analog && model.kind != BaselineKind::HardSoftQuant)
        throw std::invalid_argument("train_baseline: only Analog and HardSoftQuant train");
    if (train_ds.size() == 0) throw std::invalid_argument("train_baseline: empty dataset");

    TrainResult result;
    std::vector<Mat> last_good = snapshot_params(model.params);

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        const double lr = cosine_lr(epoch, opts.schedule);
        std::vector<int> order(train_ds.size());
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(mix_seed({opts.seed, 0x51ULL, static_cast<std::uint64_t>(epoch)}));
        for (int i = train_ds.size() - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.next_u64() % (i + 1)]);

        double loss_sum = 0.0;
        int steps = 0;
        bool aborted = false;
        for (int start = 0; start < train_ds.size(); start += opts.batch_size, ++steps) {
            const int end = std::min(start + opts.batch_size, train_ds.size());
            std::vector<int> batch_rows(order.begin() + start, order.begin() + end);
            const Mat xb = rows_subset(train_ds.x, batch_rows);
            std::vector<int> yb(batch_rows.size());
            for (std::size_t i = 0; i < batch_rows.size(); ++i) yb[i] = train_ds.labels[batch_rows[i]];

            ad::Tape tape;
            const Mat cn = sample_channel_noise_batch(
                xb.rows, model.cfg.n, model.channel.sigma2,
                mix_seed({opts.seed, 0xC4ULL, static_cast<std::uint64_t>(epoch),
                          static_cast<std::uint64_t>(steps)}));
            const DecoderGraph g = build_baseline_forward(tape, model, xb, yb, cn, opts.path);
            const double step_loss = tape.value(g.loss)(0, 0);
            if (!std::isfinite(step_loss)) {
                restore_params(model.params, last_good);
                result.nan_abort = true;
                aborted = true;
                break;
            }
            model.params.zero_grads();
            tape.backward(g.loss);
            model.params.adam_step(lr);
            loss_sum += step_loss;
        }
        if (aborted) break;

        const EvalMetrics val =
            evaluate_baseline(model, model.kind, val_ds, opts.val_noise_draws,
                              mix_seed({opts.seed, 0xE7ULL, static_cast<std::uint64_t>(epoch)}));
        EpochLog log;
        log.epoch = epoch;
        log.lr = lr;
        log.train_loss = steps > 0 ? loss_sum / steps : 0.0;
        log.val_acc = val.accuracy;
        log.val_psnr = val.psnr_db;
        result.epochs.push_back(log);
        last_good = snapshot_params(model.params);
    }

    if (!opts.epoch_csv.empty()) append_epoch_csv(opts.epoch_csv, result.epochs);
    return result;
}

std::vector<double> encoder_output_corpus(const BaselineModel& model, const Dataset& ds) {
    const Mat v = mlp_eval(model.params, model.enc_spec, "enc", ds.x);
    return v.data;
}

namespace {

double clip_unit(double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

EvalMetrics evaluate_baseline(const BaselineModel& model, BaselineKind kind, const Dataset& ds,
                              int num_noise_draws, std::uint64_t seed,
                              const LearnedQuantizer* lq) {
    if (kind == BaselineKind::LearnedQuant && lq == nullptr)
        throw std::invalid_argument("evaluate_baseline: LearnedQuant needs a trained quantizer");
    const JCMConfig& cfg = model.cfg;
    const int axes = num_axes(cfg.scheme);
    const int draws = std::max(1, num_noise_draws);
    const int total = ds.size() * draws;

    // Ascending per-axis amplitudes so quantizer rank maps onto symbol rank.
    std::vector<double> levels = model.constellation.iq_levels;
    if (cfg.scheme == Scheme::BPSK) levels = {-1.0, +1.0};
    const int num_levels = static_cast<int>(levels.size());

    const Mat v = mlp_eval(model.params, model.enc_spec, "enc", ds.x);

    Mat zhat(total, 2 * cfg.n);
    std::vector<int> labels(total);
    Mat x_rep(total, cfg.source_dim);
    int row = 0;
    for (int b = 0; b < ds.size(); ++b) {
        ComplexSequence z(cfg.n);
        for (int i = 0; i < cfg.n; ++i) {
            const double re = axes == 2 ? v(b, 2 * i) : v(b, i);
            const double im = axes == 2 ? v(b, 2 * i + 1) : 0.0;
            switch (kind) {
                case BaselineKind::Analog:
                    z[i] = cplx(re, im);
                    break;
                case BaselineKind::UniformQuant: {
                    const double zi = levels[uniform_quantize(clip_unit(re), num_levels, -1.0, 1.0)];
                    const double zq = axes == 2
                                          ? levels[uniform_quantize(clip_unit(im), num_levels, -1.0, 1.0)]
                                          : 0.0;
                    z[i] = cplx(zi, zq);
                    break;
                }
                case BaselineKind::LearnedQuant: {
                    const double zi = levels[quantize_nearest(*lq, re)];
                    const double zq = axes == 2 ? levels[quantize_nearest(*lq, im)] : 0.0;
                    z[i] = cplx(zi, zq);
                    break;
                }
                case BaselineKind::HardSoftQuant: {
                    const int m = nearest_symbol(cplx(re, im), model.constellation);
                    z[i] = model.constellation.points[m];
                    break;
                }
            }
        }
        const ComplexSequence sent = normalize_power(z, cfg.power);
        for (int d = 0; d < draws; ++d, ++row) {
            const ComplexSequence received = awgn_transmit(
                sent, model.channel,
                mix_seed({seed, 0xC2ULL, static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(d)}));
            const std::vector<double> reals = to_iq_reals(received);
            for (int c = 0; c < 2 * cfg.n; ++c) zhat(row, c) = reals[c];
            labels[row] = ds.labels[b];
            for (int c = 0; c < cfg.source_dim; ++c) x_rep(row, c) = ds.x(b, c);
        }
    }

    const DecodeResult dec = decode_heads(model.params, model.dec_s_spec, model.dec_o_spec, zhat);
    return finalize_metrics(dec, labels, x_rep, cfg.lambda);
}

}  // namespace jcm
