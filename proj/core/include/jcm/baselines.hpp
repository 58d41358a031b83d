#pragma once

#include <cstdint>
#include <vector>

#include "jcm/channel.hpp"
#include "jcm/constellation.hpp"
#include "jcm/datagen.hpp"
#include "jcm/pipeline.hpp"

namespace jcm {

// The four comparison systems. Analog and HardSoftQuant are trained
// end-to-end; UniformQuant and LearnedQuant wrap a trained Analog model with
// a quantizer at evaluation time (the separate-design benchmarks).
enum class BaselineKind { Analog, UniformQuant, LearnedQuant, HardSoftQuant };

// ---- Quantizer primitives ---------------------------------------------------

// Bin index of v on a uniform grid over [lo, hi]; out-of-range values clamp
// to the boundary bins.
int uniform_quantize(double v, int levels, double lo, double hi);

// Midpoint of the bin.
double uniform_dequantize(int index, int levels, double lo, double hi);

// Scalar codebook minimizing E (v - level_nearest(v))^2 over the corpus.
struct LearnedQuantizer {
    std::vector<double> levels;  // ascending
};

LearnedQuantizer learned_quantizer_train(const std::vector<double>& corpus, int levels);
int quantize_nearest(const LearnedQuantizer& q, double v);

// Forward nearest-symbol projection with a softmax-weighted backward surrogate.
struct HardSoftResult {
    int hard_index = 0;
    cplx soft;
};

HardSoftResult hard_soft_quantize(cplx v, const Constellation& c, double temperature);

// ---- Analog transmission ----------------------------------------------------

// Interprets 2n reals as consecutive (I, Q) pairs, power-normalizes, and
// transmits; no constellation constraint.
ComplexSequence analog_transmit(const std::vector<double>& encoder_output,
                                const ChannelConfig& cfg, std::uint64_t seed);

// ---- Trained baseline systems ----------------------------------------------

// Shares the decoder shells of the JCM pipeline; the encoder head emits
// n * num_axes reals (one per modulated axis).
struct BaselineModel {
    BaselineKind kind = BaselineKind::Analog;
    JCMConfig cfg;
    Constellation constellation;
    ChannelConfig channel;
    MLPSpec enc_spec, dec_s_spec, dec_o_spec;
    ParamStore params;
    double hs_temperature = 1.0;
};

BaselineModel make_baseline_model(BaselineKind kind, const JCMConfig& cfg,
                                  std::uint64_t init_seed, double hs_temperature = 1.0);

// Differentiable forward pass of a trainable baseline (Analog or
// HardSoftQuant); channel_noise is B x 2n, treated as a constant.
DecoderGraph build_baseline_forward(ad::Tape& tape, BaselineModel& model, const Mat& x,
                                    const std::vector<int>& labels, const Mat& channel_noise,
                                    SymbolPath path);

// End-to-end training for Analog and HardSoftQuant (the trainable kinds).
TrainResult train_baseline(BaselineModel& model, const Dataset& train_ds, const Dataset& val_ds,
                           const TrainOptions& opts);

// Raw encoder outputs over a dataset (learned-quantizer training corpus).
std::vector<double> encoder_output_corpus(const BaselineModel& model, const Dataset& ds);

// Evaluation under the given kind. `kind` may differ from model.kind only for
// the quantized wrappers around a trained Analog model; LearnedQuant requires lq.
EvalMetrics evaluate_baseline(const BaselineModel& model, BaselineKind kind, const Dataset& ds,
                              int num_noise_draws, std::uint64_t seed,
                              const LearnedQuantizer* lq = nullptr);

}  // namespace jcm
