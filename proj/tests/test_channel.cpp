#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "jcm/channel.hpp"
#include "jcm/constellation.hpp"

using namespace jcm;

TEST_CASE("snr to noise variance") {
    CHECK(snr_to_sigma2(0.0, 1.0) == doctest::Approx(1.0));
    CHECK(snr_to_sigma2(10.0, 1.0) == doctest::Approx(0.1));
    CHECK(snr_to_sigma2(-6.0, 1.0) == doctest::Approx(3.9810717055349727));
    CHECK(snr_to_sigma2(0.0, 2.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(snr_to_sigma2(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("near-noiseless channel is the identity") {
    const ChannelConfig cfg = make_channel_config(300.0, 1.0);
    ComplexSequence z = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    const ComplexSequence out = awgn_transmit(z, cfg, 5);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(out[i] - z[i]) < 1e-6);
}

TEST_CASE("empirical noise power at 0 dB") {
    const int n = 100000;
    const ComplexSequence eps = awgn_noise(n, 1.0, 8);
    double power = 0.0, re_mean = 0.0, im_mean = 0.0, re_var = 0.0, im_var = 0.0;
    for (const auto& e : eps) {
        power += std::norm(e);
        re_mean += e.real();
        im_mean += e.imag();
        re_var += e.real() * e.real();
        im_var += e.imag() * e.imag();
    }
    power /= n;
    re_mean /= n;
    im_mean /= n;
    re_var /= n;
    im_var /= n;
    CHECK(std::abs(power - 1.0) < 0.02);
    // Per-component variance sigma2 / 2 within 2%, means within 3 sigma / sqrt(n).
    CHECK(std::abs(re_var - 0.5) < 0.01);
    CHECK(std::abs(im_var - 0.5) < 0.01);
    const double bound = 3.0 * std::sqrt(0.5) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(re_mean) < bound);
    CHECK(std::abs(im_mean) < bound);
}

TEST_CASE("transmission is deterministic given the seed") {
    const ChannelConfig cfg = make_channel_config(3.0, 1.0);
    ComplexSequence z = {cplx(1, 0), cplx(-1, 0)};
    const ComplexSequence a = awgn_transmit(z, cfg, 123);
    const ComplexSequence b = awgn_transmit(z, cfg, 123);
    CHECK(a == b);
    const ComplexSequence c = awgn_transmit(z, cfg, 124);
    CHECK(a != c);
}

TEST_CASE("power mismatch is rejected") {
    const ChannelConfig cfg = make_channel_config(0.0, 1.0);
    ComplexSequence loud = {cplx(2, 0), cplx(2, 0)};  // power 4
    CHECK_THROWS_AS(awgn_transmit(loud, cfg, 1), std::invalid_argument);
    const ComplexSequence ok = normalize_power(loud, 1.0);
    CHECK_NOTHROW(awgn_transmit(ok, cfg, 1));
}

TEST_CASE("channel is memoryless under permutation") {
    const int n = 16;
    ComplexSequence z(n);
    for (int i = 0; i < n; ++i) z[i] = cplx(std::cos(0.3 * i), std::sin(0.3 * i));
    const ComplexSequence eps = awgn_noise(n, 0.7, 9);

    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = (i * 5 + 3) % n;

    // transmit then permute
    ComplexSequence sent(n);
    for (int i = 0; i < n; ++i) sent[i] = z[i] + eps[i];
    ComplexSequence a(n);
    for (int i = 0; i < n; ++i) a[i] = sent[perm[i]];
    // permute then transmit with permuted noise
    ComplexSequence b(n);
    for (int i = 0; i < n; ++i) b[i] = z[perm[i]] + eps[perm[i]];
    CHECK(a == b);
}

TEST_CASE("decoder layout concatenates I then Q") {
    const ComplexSequence z = {cplx(1, 2), cplx(3, 4)};
    const std::vector<double> reals = to_iq_reals(z);
    CHECK(reals == std::vector<double>{1, 3, 2, 4});
}
