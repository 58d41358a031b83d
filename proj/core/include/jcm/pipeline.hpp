#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jcm/autodiff.hpp"
#include "jcm/channel.hpp"
#include "jcm/constellation.hpp"
#include "jcm/datagen.hpp"
#include "jcm/gumbel.hpp"
#include "jcm/mlp.hpp"
#include "jcm/params.hpp"
#include "jcm/transition.hpp"
#include "jcm/vilb.hpp"

namespace jcm {

// How constellation symbols enter the differentiable graph.
//   StraightThrough: hard Gumbel-Max symbols forward, Gumbel-Softmax surrogate
//                    backward, one shared noise realization.
//   Relaxed:         the soft surrogate is transmitted; the whole forward pass
//                    is differentiable (used by finite-difference checks).
enum class SymbolPath { StraightThrough, Relaxed };

struct JCMConfig {
    Scheme scheme = Scheme::RectQAM;
    int order = 4;
    int n = 16;           // channel uses
    int source_dim = 16;  // k
    int num_classes = 4;  // L
    std::vector<int> enc_hidden = {32};
    std::vector<int> dec_s_hidden = {32};
    std::vector<int> dec_o_hidden = {32};
    double rho = 1.5;
    double lambda = 30.0;
    double snr_db = 12.0;
    double power = 1.0;

    int axis_cats() const;    // categories per modulated axis
    int logits_width() const; // encoder output width = n * axes * axis_cats
};

// Encoder-modulator (theta), semantic decoder (phi), source decoder (psi)
// plus the constellation and channel they operate on. Decoders only ever see
// the received sequence: decode() takes nothing but zhat.
struct JCMModel {
    JCMConfig cfg;
    Constellation constellation;
    ChannelConfig channel;
    MLPSpec enc_spec, dec_s_spec, dec_o_spec;
    ParamStore params;
};

JCMModel make_jcm_model(const JCMConfig& cfg, std::uint64_t init_seed);

double transmission_rate(int channel_uses, int source_dim);

// ---- Differentiable forward pass -----------------------------------------

struct ForwardArtifacts {
    ad::Value loss;
    ad::Value posteriors;       // B x L
    ad::Value reconstructions;  // B x k
    std::vector<int> hard_symbols;  // B*n combined constellation indices
};

// Decoder half of the graph, shared by every trained system:
// zhat -> posterior, reconstruction, cross-entropy + lambda * MSE.
struct DecoderGraph {
    ad::Value posteriors;
    ad::Value reconstructions;
    ad::Value loss;
};

DecoderGraph build_decoder_graph(ad::Tape& tape, ParamStore& params, const MLPSpec& dec_s_spec,
                                 const MLPSpec& dec_o_spec, double lambda, ad::Value zhat,
                                 const Mat& x, const std::vector<int>& labels);

// Column permutation taking interleaved (I,Q) pairs to the [I block | Q block]
// layout the decoders consume.
std::vector<int> iq_block_permutation(int n);

// Builds the full training graph on `tape`. gumbel_noise must be
// (B * n * num_axes) x axis_cats; channel_noise must be B x 2n with
// per-component variance sigma2/2. Both are treated as constants.
ForwardArtifacts build_jcm_forward(ad::Tape& tape, JCMModel& model, const Mat& x,
                                   const std::vector<int>& labels, const Mat& gumbel_noise,
                                   const Mat& channel_noise, SymbolPath path);

Mat sample_gumbel_batch(const JCMConfig& cfg, int batch, std::uint64_t seed);
Mat sample_channel_noise_batch(int batch, int n, double sigma2, std::uint64_t seed);

// ---- Hard (evaluation) paths ----------------------------------------------

struct EncodeResult {
    std::vector<TransitionPMF> pmfs;
    std::vector<ComplexSequence> sequences;  // power-normalized channel inputs
    std::vector<RelaxedSymbols> relaxed;
};

EncodeResult encode_modulate(const JCMModel& model, const Mat& x, std::uint64_t seed);

struct DecodeResult {
    Mat posteriors;       // B x L, rows sum to 1
    Mat reconstructions;  // B x k
};

DecodeResult decode(const JCMModel& model, const Mat& zhat_reals);

// Same decoder pass for any (params, specs) tuple; used by the baselines.
DecodeResult decode_heads(const ParamStore& params, const MLPSpec& dec_s_spec,
                          const MLPSpec& dec_o_spec, const Mat& zhat_reals);

// ---- Training and evaluation ----------------------------------------------

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_acc = 0.0;
    double val_psnr = 0.0;
};

struct TrainOptions {
    int epochs = 100;
    int batch_size = 32;
    std::uint64_t seed = 1;
    int draws_per_step = 1;        // Monte Carlo symbol draws per example
    bool alternate_updates = false;
    SymbolPath path = SymbolPath::StraightThrough;
    CosineSchedule schedule;
    int val_noise_draws = 1;
    std::string epoch_csv;  // per-epoch log file, empty = no file
};

struct TrainResult {
    std::vector<EpochLog> epochs;
    bool nan_abort = false;  // params restored to the last finished epoch
};

TrainResult train(JCMModel& model, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainOptions& opts);

struct EvalMetrics {
    double accuracy = 0.0;
    double psnr_db = 0.0;
    double mse = 0.0;  // per-coordinate
    double mean_loss = 0.0;
};

EvalMetrics evaluate(const JCMModel& model, const Dataset& ds, int num_noise_draws,
                     std::uint64_t seed);

// Accuracy / PSNR / mean loss from decoded rows against (labels, x_rep).
EvalMetrics finalize_metrics(const DecodeResult& dec, const std::vector<int>& labels,
                             const Mat& x_rep, double lambda);

// Hard constellation indices drawn while encoding a dataset (shaping stats).
std::vector<int> collect_symbol_usage(const JCMModel& model, const Dataset& ds,
                                      int num_noise_draws, std::uint64_t seed);

void append_epoch_csv(const std::string& path, const std::vector<EpochLog>& rows);

}  // namespace jcm
