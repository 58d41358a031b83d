#include <benchmark/benchmark.h>

#include "jcm/channel.hpp"
#include "jcm/datagen.hpp"
#include "jcm/gumbel.hpp"
#include "jcm/oracle.hpp"
#include "jcm/pipeline.hpp"
#include "jcm/rng.hpp"
#include "jcm/transition.hpp"

namespace {

using namespace jcm;

void BM_PmfFromLogits(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    Mat logits(n, 8);
    for (auto& v : logits.data) v = 2.0 * rng.uniform() - 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(pmf_from_logits(logits, Scheme::RectQAM));
    }
}
BENCHMARK(BM_PmfFromLogits)->Arg(16)->Arg(128);

void BM_StModulate(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(2);
    Mat logits(n, 8);
    for (auto& v : logits.data) v = 2.0 * rng.uniform() - 1.0;
    const TransitionPMF pmf = pmf_from_logits(logits, Scheme::RectQAM);
    const Constellation c = make_rect_qam(16);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        const GumbelNoise noise = sample_gumbel(2 * n, 4, ++seed);
        benchmark::DoNotOptimize(st_modulate(pmf, noise, 1.5, c));
    }
}
BENCHMARK(BM_StModulate)->Arg(16)->Arg(128);

void BM_AwgnTransmit(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ComplexSequence z(n, cplx(1.0, 0.0));
    z = normalize_power(z, 1.0);
    const ChannelConfig cfg = make_channel_config(6.0, 1.0);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(awgn_transmit(z, cfg, ++seed));
    }
}
BENCHMARK(BM_AwgnTransmit)->Arg(128)->Arg(1024);

void BM_TrainStep(benchmark::State& state) {
    JCMConfig cfg;
    cfg.scheme = Scheme::RectQAM;
    cfg.order = 16;
    cfg.n = 16;
    cfg.source_dim = 16;
    cfg.num_classes = 4;
    cfg.enc_hidden = {64};
    cfg.dec_s_hidden = {64};
    cfg.dec_o_hidden = {64};
    cfg.lambda = 30.0;
    cfg.snr_db = 6.0;
    JCMModel model = make_jcm_model(cfg, 3);
    Rng rng(4);
    Mat x(32, 16);
    for (auto& v : x.data) v = rng.uniform();
    std::vector<int> labels(32);
    for (auto& l : labels) l = static_cast<int>(rng.next_u64() % 4);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        ad::Tape tape;
        const Mat gn = sample_gumbel_batch(cfg, 32, ++seed);
        const Mat cn = sample_channel_noise_batch(32, cfg.n, model.channel.sigma2, seed);
        const ForwardArtifacts fwd =
            build_jcm_forward(tape, model, x, labels, gn, cn, SymbolPath::StraightThrough);
        model.params.zero_grads();
        tape.backward(fwd.loss);
        model.params.adam_step(1e-4);
    }
}
BENCHMARK(BM_TrainStep);

void BM_ExactPosterior(benchmark::State& state) {
    const ToySystem sys = reference_toy_systems()[1];  // BPSK, n = 2, four sources
    const ComplexSequence zhat = {cplx(0.4, -0.1), cplx(-0.7, 0.2)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(exact_posterior(sys, zhat));
    }
}
BENCHMARK(BM_ExactPosterior);

}  // namespace

BENCHMARK_MAIN();
