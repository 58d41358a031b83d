#include <doctest.h>

#include <cmath>
#include <vector>

#include "jcm/baselines.hpp"
#include "jcm/rng.hpp"

using namespace jcm;

TEST_CASE("uniform quantizer arithmetic") {
    CHECK(uniform_quantize(-1.0, 4, -1.0, 1.0) == 0);
    CHECK(uniform_dequantize(0, 4, -1.0, 1.0) == doctest::Approx(-0.75));
    CHECK(uniform_quantize(0.3, 4, -1.0, 1.0) == 2);
    CHECK(uniform_dequantize(2, 4, -1.0, 1.0) == doctest::Approx(0.25));
    CHECK(uniform_quantize(1.7, 4, -1.0, 1.0) == 3);  // clipped into the top bin
    CHECK(uniform_quantize(-3.0, 4, -1.0, 1.0) == 0);
    CHECK_THROWS_AS(uniform_quantize(0.0, 1, -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(uniform_dequantize(4, 4, -1.0, 1.0), std::out_of_range);
}

TEST_CASE("learned quantizer approaches the uniform-corpus optimum") {
    Rng rng(5);
    std::vector<double> corpus(20000);
    for (auto& v : corpus) v = 2.0 * rng.uniform() - 1.0;
    const LearnedQuantizer q = learned_quantizer_train(corpus, 4);
    REQUIRE(q.levels.size() == 4);

    double mse = 0.0;
    for (double v : corpus) {
        const double d = v - q.levels[quantize_nearest(q, v)];
        mse += d * d;
    }
    mse /= corpus.size();
    // Uniform-quantizer distortion on this corpus is Delta^2/12 = 0.0208...
    const double delta = 0.5;
    CHECK(mse <= delta * delta / 12.0 + 1e-3);
}

TEST_CASE("learned quantizer levels are symmetric for a symmetric corpus") {
    Rng rng(6);
    std::vector<double> corpus;
    for (int i = 0; i < 10000; ++i) {
        const double v = rng.normal();
        corpus.push_back(v);
        corpus.push_back(-v);
    }
    const LearnedQuantizer q = learned_quantizer_train(corpus, 2);
    CHECK(std::abs(q.levels[0] + q.levels[1]) < 0.05);
}

TEST_CASE("learned quantizer rejects a constant corpus") {
    const std::vector<double> corpus(100, 0.37);
    CHECK_THROWS_AS(learned_quantizer_train(corpus, 4), std::invalid_argument);
}

TEST_CASE("hard-soft quantizer forward and backward surrogate") {
    const Constellation q16 = make_rect_qam(16);

    // On a constellation point the two paths coincide at low temperature.
    const cplx on_point = q16.points[5];
    const HardSoftResult exact = hard_soft_quantize(on_point, q16, 0.01);
    CHECK(exact.hard_index == 5);
    CHECK(std::abs(exact.soft - on_point) < 1e-6);

    // Equidistant from two symbols: the lowest index wins the forward pass.
    const Constellation bpsk = make_bpsk();
    const HardSoftResult tie = hard_soft_quantize(cplx(0.0, 0.0), bpsk, 1.0);
    CHECK(tie.hard_index == 0);

    // Infinite temperature pulls the surrogate to the constellation centroid.
    const HardSoftResult hot = hard_soft_quantize(cplx(0.9, -0.7), q16, 1e9);
    cplx centroid(0.0, 0.0);
    for (const auto& p : q16.points) centroid += p;
    centroid /= static_cast<double>(q16.points.size());
    CHECK(std::abs(hot.soft - centroid) < 1e-6);
}

TEST_CASE("analog transmission is exact over a clean channel") {
    const ChannelConfig cfg = make_channel_config(300.0, 1.0);
    const std::vector<double> enc_out = {0.3, -0.2, 0.8, 0.5, -0.6, 0.1};
    const ComplexSequence received = analog_transmit(enc_out, cfg, 3);
    CHECK(std::abs(sequence_power(received) - 1.0) < 1e-5);
    ComplexSequence expected(3);
    for (int i = 0; i < 3; ++i) expected[i] = cplx(enc_out[2 * i], enc_out[2 * i + 1]);
    expected = normalize_power(expected, 1.0);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(received[i] - expected[i]) < 1e-6);
    CHECK_THROWS_AS(analog_transmit({0.1, 0.2, 0.3}, cfg, 3), std::invalid_argument);
}

TEST_CASE("uniform quantization lands exactly on constellation amplitudes") {
    const Constellation q16 = make_rect_qam(16);
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const double v = 3.0 * (2.0 * rng.uniform() - 1.0);
        const double clipped = std::min(1.0, std::max(-1.0, v));
        const double amp = q16.iq_levels[uniform_quantize(clipped, 4, -1.0, 1.0)];
        bool on_grid = false;
        for (double level : q16.iq_levels) on_grid |= (amp == level);
        CHECK(on_grid);
    }
}

namespace {

JCMConfig baseline_config(Scheme scheme, int order) {
    JCMConfig cfg;
    cfg.scheme = scheme;
    cfg.order = order;
    cfg.n = 4;
    cfg.source_dim = 6;
    cfg.num_classes = 3;
    cfg.enc_hidden = {8};
    cfg.dec_s_hidden = {8};
    cfg.dec_o_hidden = {8};
    cfg.lambda = 5.0;
    cfg.snr_db = 12.0;
    return cfg;
}

}  // namespace

TEST_CASE("baseline graphs pass finite-difference checks") {
    for (BaselineKind kind : {BaselineKind::Analog, BaselineKind::HardSoftQuant}) {
        BaselineModel model = make_baseline_model(kind, baseline_config(Scheme::RectQAM, 4), 61);
        Rng rng(62);
        Mat x(3, 6);
        for (auto& v : x.data) v = rng.uniform();
        const std::vector<int> labels = {0, 2, 1};
        const Mat cn = sample_channel_noise_batch(3, model.cfg.n, model.channel.sigma2, 63);
        const auto f = [&]() {
            ad::Tape tape;
            return tape.value(
                build_baseline_forward(tape, model, x, labels, cn, SymbolPath::Relaxed).loss)(0, 0);
        };
        const auto grads = [&]() {
            ad::Tape tape;
            tape.backward(build_baseline_forward(tape, model, x, labels, cn, SymbolPath::Relaxed).loss);
        };
        const ad::GradCheckReport report =
            ad::gradient_check(model.params, model.params.names(), f, grads, 1e-4, 1e-4);
        CHECK(static_cast<double>(report.bad_coords) <= 0.01 * report.total_coords);
    }
}

TEST_CASE("trainable baselines learn on the mixture task") {
    const Dataset full = gen_gaussian_mixture(6, 3, 48, 0.05, 70);
    const auto [train_ds, val_ds] = split_dataset(full, 32);
    TrainOptions opts;
    opts.epochs = 20;
    opts.batch_size = 16;
    opts.seed = 71;

    for (BaselineKind kind : {BaselineKind::Analog, BaselineKind::HardSoftQuant}) {
        BaselineModel model = make_baseline_model(kind, baseline_config(Scheme::RectQAM, 4), 72);
        const TrainResult result = train_baseline(model, train_ds, val_ds, opts);
        REQUIRE(result.epochs.size() == 20);
        CHECK(!result.nan_abort);
        CHECK(result.epochs.back().train_loss < result.epochs.front().train_loss);
    }

    BaselineModel uq = make_baseline_model(BaselineKind::UniformQuant,
                                           baseline_config(Scheme::RectQAM, 4), 73);
    CHECK_THROWS_AS(train_baseline(uq, train_ds, val_ds, opts), std::invalid_argument);
}

TEST_CASE("quantized wrappers evaluate a trained analog model") {
    const Dataset full = gen_gaussian_mixture(6, 3, 32, 0.05, 80);
    const auto [train_ds, val_ds] = split_dataset(full, 24);
    BaselineModel analog = make_baseline_model(BaselineKind::Analog,
                                               baseline_config(Scheme::RectQAM, 4), 81);
    TrainOptions opts;
    opts.epochs = 10;
    opts.batch_size = 16;
    opts.seed = 82;
    (void)train_baseline(analog, train_ds, val_ds, opts);

    const EvalMetrics ma = evaluate_baseline(analog, BaselineKind::Analog, val_ds, 2, 83);
    const EvalMetrics mu = evaluate_baseline(analog, BaselineKind::UniformQuant, val_ds, 2, 83);
    CHECK(std::isfinite(ma.psnr_db));
    CHECK(std::isfinite(mu.psnr_db));

    const std::vector<double> corpus = encoder_output_corpus(analog, train_ds);
    const LearnedQuantizer lq = learned_quantizer_train(corpus, analog.constellation.side());
    const EvalMetrics mn = evaluate_baseline(analog, BaselineKind::LearnedQuant, val_ds, 2, 83, &lq);
    CHECK(std::isfinite(mn.psnr_db));
    CHECK_THROWS_AS(evaluate_baseline(analog, BaselineKind::LearnedQuant, val_ds, 2, 83, nullptr),
                    std::invalid_argument);

    // Determinism of evaluation given the seed.
    const EvalMetrics mu2 = evaluate_baseline(analog, BaselineKind::UniformQuant, val_ds, 2, 83);
    CHECK(mu.accuracy == mu2.accuracy);
    CHECK(mu.psnr_db == mu2.psnr_db);
}
