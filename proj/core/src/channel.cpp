#include "jcm/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "jcm/rng.hpp"

namespace jcm {

double snr_to_sigma2(double snr_db, double power) {
    if (power <= 0.0) throw std::invalid_argument("snr_to_sigma2: power must be positive");
    return power / std::pow(10.0, snr_db / 10.0);
}

ChannelConfig make_channel_config(double snr_db, double power) {
    ChannelConfig cfg;
    cfg.snr_db = snr_db;
    cfg.power = power;
    cfg.sigma2 = snr_to_sigma2(snr_db, power);
    return cfg;
}

ComplexSequence awgn_noise(int n, double sigma2, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("awgn_noise: n must be >= 1");
    const double comp_std = std::sqrt(sigma2 / 2.0);
    Rng rng(seed);
    ComplexSequence eps(n);
    for (int i = 0; i < n; ++i) {
        const double re = comp_std * rng.normal();
        const double im = comp_std * rng.normal();
        eps[i] = cplx(re, im);
    }
    return eps;
}

ComplexSequence awgn_transmit(const ComplexSequence& z, const ChannelConfig& cfg,
                              std::uint64_t seed) {
    if (z.empty()) throw std::invalid_argument("awgn_transmit: empty sequence");
    const double p = sequence_power(z);
    if (std::abs(p - cfg.power) > 1e-6 * cfg.power)
        throw std::invalid_argument("awgn_transmit: input power violates the transmit constraint");
    const ComplexSequence eps = awgn_noise(static_cast<int>(z.size()), cfg.sigma2, seed);
    ComplexSequence out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] + eps[i];
    return out;
}

std::vector<double> to_iq_reals(const ComplexSequence& z) {
    std::vector<double> out(2 * z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = z[i].real();
        out[z.size() + i] = z[i].imag();
    }
    return out;
}

}  // namespace jcm
