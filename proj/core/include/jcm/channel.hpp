#pragma once

#include <cstdint>
#include <vector>

#include "jcm/constellation.hpp"

namespace jcm {

// Complex AWGN channel. sigma2 is the total per-use noise variance of
// CN(0, sigma2); each real component carries sigma2/2.
struct ChannelConfig {
    double snr_db = 0.0;
    double power = 1.0;
    double sigma2 = 1.0;
};

double snr_to_sigma2(double snr_db, double power);

ChannelConfig make_channel_config(double snr_db, double power = 1.0);

// n complex noise samples, each CN(0, sigma2).
ComplexSequence awgn_noise(int n, double sigma2, std::uint64_t seed);

// z + noise. Rejects inputs whose average power deviates from cfg.power by
// more than 1e-6 relative (a missed normalization upstream).
ComplexSequence awgn_transmit(const ComplexSequence& z, const ChannelConfig& cfg,
                              std::uint64_t seed);

// Decoder-facing layout: 2n reals, all I components then all Q components.
std::vector<double> to_iq_reals(const ComplexSequence& z);

}  // namespace jcm
