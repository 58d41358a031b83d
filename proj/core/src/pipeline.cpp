#include "jcm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "jcm/metrics.hpp"
#include "jcm/rng.hpp"

namespace jcm {

namespace {

int side_of_order(int order) {
    return static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
}

}  // namespace

int JCMConfig::axis_cats() const { return scheme == Scheme::BPSK ? 2 : side_of_order(order); }

int JCMConfig::logits_width() const { return n * num_axes(scheme) * axis_cats(); }

JCMModel make_jcm_model(const JCMConfig& cfg, std::uint64_t init_seed) {
    JCMModel model;
    model.cfg = cfg;
    model.constellation = cfg.scheme == Scheme::BPSK ? make_bpsk() : make_rect_qam(cfg.order);
    model.channel = make_channel_config(cfg.snr_db, cfg.power);
    model.enc_spec = make_mlp_spec(cfg.source_dim, cfg.enc_hidden, cfg.logits_width(), HeadKind::Logits);
    model.dec_s_spec = make_mlp_spec(2 * cfg.n, cfg.dec_s_hidden, cfg.num_classes, HeadKind::Logits);
    model.dec_o_spec = make_mlp_spec(2 * cfg.n, cfg.dec_o_hidden, cfg.source_dim, HeadKind::Linear);
    init_mlp(model.params, model.enc_spec, "enc", mix_seed({init_seed, 1}));
    init_mlp(model.params, model.dec_s_spec, "dec_s", mix_seed({init_seed, 2}));
    init_mlp(model.params, model.dec_o_spec, "dec_o", mix_seed({init_seed, 3}));
    return model;
}

double transmission_rate(int channel_uses, int source_dim) {
    return static_cast<double>(channel_uses) / static_cast<double>(source_dim);
}

Mat sample_gumbel_batch(const JCMConfig& cfg, int batch, std::uint64_t seed) {
    return sample_gumbel(batch * cfg.n * num_axes(cfg.scheme), cfg.axis_cats(), seed).values;
}

Mat sample_channel_noise_batch(int batch, int n, double sigma2, std::uint64_t seed) {
    Mat noise(batch, 2 * n);
    for (int b = 0; b < batch; ++b) {
        const ComplexSequence eps = awgn_noise(n, sigma2, mix_seed({seed, static_cast<std::uint64_t>(b)}));
        for (int i = 0; i < n; ++i) {
            noise(b, i) = eps[i].real();
            noise(b, n + i) = eps[i].imag();
        }
    }
    return noise;
}

DecoderGraph build_decoder_graph(ad::Tape& tape, ParamStore& params, const MLPSpec& dec_s_spec,
                                 const MLPSpec& dec_o_spec, double lambda, ad::Value zhat,
                                 const Mat& x, const std::vector<int>& labels) {
    const int batch = x.rows;
    ad::Value s_logits = mlp_apply(tape, params, dec_s_spec, "dec_s", zhat);
    ad::Value post = tape.row_softmax(s_logits);
    ad::Value post_floored = tape.clamp_min(post, kProbFloor);
    ad::Value picked = tape.gather_cols(post_floored, labels);
    ad::Value ce = tape.scale(tape.sum_all(tape.log_elem(picked)), -1.0 / batch);

    ad::Value recon = mlp_apply(tape, params, dec_o_spec, "dec_o", zhat);
    ad::Value diff = tape.sub(recon, tape.constant(x));
    ad::Value mse = tape.scale(tape.sum_all(tape.square(diff)), 1.0 / batch);

    DecoderGraph g;
    g.posteriors = post;
    g.reconstructions = recon;
    g.loss = tape.add(ce, tape.scale(mse, lambda));
    return g;
}

// Interleaved (pos, axis) columns -> [I block | Q block].
std::vector<int> iq_block_permutation(int n) {
    std::vector<int> perm(2 * n);
    for (int j = 0; j < n; ++j) {
        perm[j] = 2 * j;
        perm[n + j] = 2 * j + 1;
    }
    return perm;
}

ForwardArtifacts build_jcm_forward(ad::Tape& tape, JCMModel& model, const Mat& x,
                                   const std::vector<int>& labels, const Mat& gumbel_noise,
                                   const Mat& channel_noise, SymbolPath path) {
    const JCMConfig& cfg = model.cfg;
    const int batch = x.rows;
    const int axes = num_axes(cfg.scheme);
    const int cats = cfg.axis_cats();
    const int rows = batch * cfg.n * axes;
    if (gumbel_noise.rows != rows || gumbel_noise.cols != cats)
        throw std::invalid_argument("build_jcm_forward: gumbel noise shape mismatch");
    if (channel_noise.rows != batch || channel_noise.cols != 2 * cfg.n)
        throw std::invalid_argument("build_jcm_forward: channel noise shape mismatch");

    // Encoder logits -> per-axis categorical rows -> floored, renormalized PMF.
    ad::Value logits = mlp_apply(tape, model.params, model.enc_spec, "enc", tape.constant(x));
    ad::Value rows_logits = tape.reshape(logits, rows, cats);
    ad::Value soft_pmf = tape.row_softmax(rows_logits);
    ad::Value floored = tape.clamp_min(soft_pmf, kProbFloor);
    ad::Value pmf = tape.div_rows(floored, tape.row_sum(floored));

    // Gumbel-Softmax relaxation with the same noise as the hard draw.
    ad::Value scores = tape.scale(tape.add_const(tape.log_elem(pmf), gumbel_noise), 1.0 / cfg.rho);
    ad::Value soft_simplex = tape.row_softmax(scores);

    const std::vector<double> amps = model.constellation.axis_amplitudes();
    Mat amp_col(cats, 1);
    for (int j = 0; j < cats; ++j) amp_col(j, 0) = amps[j];
    ad::Value soft_amp = tape.matmul_const(soft_simplex, amp_col);

    // Hard Gumbel-Max draw from the same PMF values and noise realization.
    const Mat q = tape.value(pmf);
    std::vector<int> axis_hard(rows);
    Mat hard_amp(rows, 1);
    for (int r = 0; r < rows; ++r) {
        axis_hard[r] = gumbel_max_sample(
            std::span<const double>(&q(r, 0), static_cast<std::size_t>(cats)),
            std::span<const double>(&gumbel_noise(r, 0), static_cast<std::size_t>(cats)));
        hard_amp(r, 0) = amps[axis_hard[r]];
    }
    std::vector<int> hard_symbols(batch * cfg.n);
    for (int b = 0; b < batch; ++b)
        for (int i = 0; i < cfg.n; ++i) {
            if (axes == 1)
                hard_symbols[b * cfg.n + i] = axis_hard[b * cfg.n + i];
            else
                hard_symbols[b * cfg.n + i] =
                    axis_hard[(b * cfg.n + i) * 2] * cats + axis_hard[(b * cfg.n + i) * 2 + 1];
        }

    ad::Value amp = path == SymbolPath::StraightThrough
                        ? tape.straight_through(soft_amp, hard_amp)
                        : soft_amp;

    // Assemble the 2n-real channel layout [I | Q] per sample.
    ad::Value z;
    if (cfg.scheme == Scheme::BPSK) {
        ad::Value zi = tape.reshape(amp, batch, cfg.n);
        z = tape.concat_cols(zi, tape.constant(Mat::zeros(batch, cfg.n)));
    } else {
        ad::Value interleaved = tape.reshape(amp, batch, 2 * cfg.n);
        z = tape.permute_cols(interleaved, iq_block_permutation(cfg.n));
    }
    ad::Value z_norm = tape.normalize_power_rows(z, cfg.power);
    ad::Value zhat = tape.add_const(z_norm, channel_noise);

    DecoderGraph dec = build_decoder_graph(tape, model.params, model.dec_s_spec, model.dec_o_spec,
                                           cfg.lambda, zhat, x, labels);

    ForwardArtifacts out;
    out.loss = dec.loss;
    out.posteriors = dec.posteriors;
    out.reconstructions = dec.reconstructions;
    out.hard_symbols = std::move(hard_symbols);
    return out;
}

EncodeResult encode_modulate(const JCMModel& model, const Mat& x, std::uint64_t seed) {
    const JCMConfig& cfg = model.cfg;
    if (x.cols != cfg.source_dim) throw std::invalid_argument("encode_modulate: bad input width");
    const int axes = num_axes(cfg.scheme);
    const int cats = cfg.axis_cats();
    const Mat logits = mlp_eval(model.params, model.enc_spec, "enc", x);

    EncodeResult result;
    result.pmfs.reserve(x.rows);
    result.sequences.reserve(x.rows);
    result.relaxed.reserve(x.rows);
    for (int b = 0; b < x.rows; ++b) {
        Mat sample_logits(cfg.n, axes * cats);
        for (int j = 0; j < sample_logits.size(); ++j)
            sample_logits.data[j] = logits(b, j);
        TransitionPMF pmf = pmf_from_logits(sample_logits, cfg.scheme);
        const GumbelNoise noise =
            sample_gumbel(cfg.n * axes, cats, mix_seed({seed, static_cast<std::uint64_t>(b)}));
        auto [z, relaxed] = st_modulate(pmf, noise, cfg.rho, model.constellation);
        result.sequences.push_back(normalize_power(z, cfg.power));
        result.pmfs.push_back(std::move(pmf));
        result.relaxed.push_back(std::move(relaxed));
    }
    return result;
}

DecodeResult decode_heads(const ParamStore& params, const MLPSpec& dec_s_spec,
                          const MLPSpec& dec_o_spec, const Mat& zhat_reals) {
    DecodeResult out;
    Mat s_logits = mlp_eval(params, dec_s_spec, "dec_s", zhat_reals);
    out.posteriors = Mat(s_logits.rows, s_logits.cols);
    for (int r = 0; r < s_logits.rows; ++r) {
        double mx = s_logits(r, 0);
        for (int c = 1; c < s_logits.cols; ++c) mx = std::max(mx, s_logits(r, c));
        double sum = 0.0;
        for (int c = 0; c < s_logits.cols; ++c) {
            out.posteriors(r, c) = std::exp(s_logits(r, c) - mx);
            sum += out.posteriors(r, c);
        }
        for (int c = 0; c < s_logits.cols; ++c) out.posteriors(r, c) /= sum;
    }
    out.reconstructions = mlp_eval(params, dec_o_spec, "dec_o", zhat_reals);
    return out;
}

DecodeResult decode(const JCMModel& model, const Mat& zhat_reals) {
    if (zhat_reals.cols != 2 * model.cfg.n)
        throw std::invalid_argument("decode: expected 2n reals per row");
    return decode_heads(model.params, model.dec_s_spec, model.dec_o_spec, zhat_reals);
}

EvalMetrics finalize_metrics(const DecodeResult& dec, const std::vector<int>& labels,
                             const Mat& x_rep, double lambda) {
    const int total = x_rep.rows;
    int correct = 0;
    double sse = 0.0;
    for (int r = 0; r < total; ++r) {
        int arg = 0;
        for (int c = 1; c < dec.posteriors.cols; ++c)
            if (dec.posteriors(r, c) > dec.posteriors(r, arg)) arg = c;
        if (arg == labels[r]) ++correct;
        for (int c = 0; c < x_rep.cols; ++c) {
            const double d = x_rep(r, c) - dec.reconstructions(r, c);
            sse += d * d;
        }
    }
    EvalMetrics m;
    m.accuracy = static_cast<double>(correct) / total;
    m.mse = sse / (static_cast<double>(total) * x_rep.cols);
    m.psnr_db = jcm::psnr_db(m.mse);
    LossConfig lc{lambda, dec.posteriors.cols};
    m.mean_loss = vilb_batch_loss(dec.posteriors, labels, x_rep, dec.reconstructions, lc);
    return m;
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

TrainResult train(JCMModel& model, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainOptions& opts) {
    if (train_ds.size() == 0) throw std::invalid_argument("train: empty dataset");
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

            double step_loss = 0.0;
            const int draws = std::max(1, opts.draws_per_step);
            const auto run_pass = [&](const std::vector<std::string>& update_prefixes) {
                model.params.zero_grads();
                double pass_loss = 0.0;
                for (int d = 0; d < draws; ++d) {
                    ad::Tape tape;
                    const Mat gn = sample_gumbel_batch(
                        model.cfg, xb.rows,
                        mix_seed({opts.seed, 0x6bULL, static_cast<std::uint64_t>(epoch),
                                  static_cast<std::uint64_t>(steps), static_cast<std::uint64_t>(d)}));
                    const Mat cn = sample_channel_noise_batch(
                        xb.rows, model.cfg.n, model.channel.sigma2,
                        mix_seed({opts.seed, 0xC4ULL, static_cast<std::uint64_t>(epoch),
                                  static_cast<std::uint64_t>(steps), static_cast<std::uint64_t>(d)}));
                    ForwardArtifacts fwd =
                        build_jcm_forward(tape, model, xb, yb, gn, cn, opts.path);
                    ad::Value total = draws == 1 ? fwd.loss : tape.scale(fwd.loss, 1.0 / draws);
                    pass_loss += tape.value(fwd.loss)(0, 0) / draws;
                    tape.backward(total);
                }
                if (update_prefixes.empty())
                    model.params.adam_step(lr);
                else
                    model.params.adam_step_filtered(lr, AdamConfig{}, update_prefixes);
                return pass_loss;
            };

            if (opts.alternate_updates) {
                run_pass({"dec_s", "dec_o"});
                step_loss = run_pass({"enc"});
            } else {
                step_loss = run_pass({});
            }

            if (!std::isfinite(step_loss)) {
                restore_params(model.params, last_good);
                result.nan_abort = true;
                aborted = true;
                break;
            }
            loss_sum += step_loss;
        }
        if (aborted) break;

        const EvalMetrics val = evaluate(model, val_ds, opts.val_noise_draws,
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

EvalMetrics evaluate(const JCMModel& model, const Dataset& ds, int num_noise_draws,
                     std::uint64_t seed) {
    const JCMConfig& cfg = model.cfg;
    const int draws = std::max(1, num_noise_draws);
    const int total = ds.size() * draws;

    Mat zhat(total, 2 * cfg.n);
    std::vector<int> labels(total);
    Mat x_rep(total, cfg.source_dim);

    const Mat logits = mlp_eval(model.params, model.enc_spec, "enc", ds.x);
    const int axes = num_axes(cfg.scheme);
    const int cats = cfg.axis_cats();
    const std::vector<double> amps = model.constellation.axis_amplitudes();

    int row = 0;
    for (int b = 0; b < ds.size(); ++b) {
        Mat sample_logits(cfg.n, axes * cats);
        for (int j = 0; j < sample_logits.size(); ++j) sample_logits.data[j] = logits(b, j);
        const TransitionPMF pmf = pmf_from_logits(sample_logits, cfg.scheme);
        for (int d = 0; d < draws; ++d, ++row) {
            const GumbelNoise noise = sample_gumbel(
                cfg.n * axes, cats,
                mix_seed({seed, 0xE1ULL, static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(d)}));
            ComplexSequence z(cfg.n);
            for (int i = 0; i < cfg.n; ++i) {
                if (axes == 1) {
                    const int m = gumbel_max_sample(
                        std::span<const double>(pmf.axis_row(i, 0), static_cast<std::size_t>(cats)),
                        std::span<const double>(&noise.values(i, 0), static_cast<std::size_t>(cats)));
                    z[i] = model.constellation.points[m];
                } else {
                    int idx[2];
                    for (int a = 0; a < 2; ++a)
                        idx[a] = gumbel_max_sample(
                            std::span<const double>(pmf.axis_row(i, a), static_cast<std::size_t>(cats)),
                            std::span<const double>(&noise.values(i * 2 + a, 0),
                                                    static_cast<std::size_t>(cats)));
                    z[i] = cplx(amps[idx[0]], amps[idx[1]]);
                }
            }
            const ComplexSequence sent = normalize_power(z, cfg.power);
            const ComplexSequence received = awgn_transmit(
                sent, model.channel,
                mix_seed({seed, 0xC2ULL, static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(d)}));
            const std::vector<double> reals = to_iq_reals(received);
            for (int c = 0; c < 2 * cfg.n; ++c) zhat(row, c) = reals[c];
            labels[row] = ds.labels[b];
            for (int c = 0; c < cfg.source_dim; ++c) x_rep(row, c) = ds.x(b, c);
        }
    }

    const DecodeResult dec = decode(model, zhat);
    return finalize_metrics(dec, labels, x_rep, cfg.lambda);
}

std::vector<int> collect_symbol_usage(const JCMModel& model, const Dataset& ds,
                                      int num_noise_draws, std::uint64_t seed) {
    std::vector<int> symbols;
    symbols.reserve(static_cast<std::size_t>(ds.size()) * num_noise_draws * model.cfg.n);
    for (int d = 0; d < num_noise_draws; ++d) {
        const EncodeResult enc =
            encode_modulate(model, ds.x, mix_seed({seed, static_cast<std::uint64_t>(d)}));
        for (const auto& relaxed : enc.relaxed)
            for (int idx : relaxed.hard) symbols.push_back(idx);
    }
    return symbols;
}

void append_epoch_csv(const std::string& path, const std::vector<EpochLog>& rows) {
    const bool exists = std::filesystem::exists(path);
    std::ofstream os(path, std::ios::app);
    if (!os) throw std::runtime_error("append_epoch_csv: cannot open " + path);
    if (!exists) os << "epoch,lr,train_loss,val_acc,val_psnr\r\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\r\n", r.epoch, r.lr,
                      r.train_loss, r.val_acc, r.val_psnr);
        os << buf;
    }
}

}  // namespace jcm
