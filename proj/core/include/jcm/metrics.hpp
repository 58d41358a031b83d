#pragma once

#include <string>
#include <vector>

#include "jcm/constellation.hpp"

namespace jcm {

// Frequency of each constellation index in a symbol stream.
std::vector<double> empirical_constellation_pmf(const std::vector<int>& symbols, int order);

// KL(p || q) in nats, with q floored at 1e-12 and 0 log 0 = 0.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

struct MaxwellBoltzmannFit {
    double nu = 0.0;
    std::vector<double> pmf;  // fitted distribution, proportional to exp(-nu |c|^2)
    double kl = 0.0;          // KL(empirical || fit)
};

// Fits nu >= 0 by golden-section search on KL(empirical || MB(nu)) over
// nu in [0, 50] with tolerance 1e-6.
MaxwellBoltzmannFit maxwell_boltzmann_fit(const Constellation& c,
                                          const std::vector<double>& empirical);

std::vector<double> maxwell_boltzmann_pmf(const Constellation& c, double nu);

// Constellation-usage diagnostics for one trained operating point.
struct ShapingReport {
    double snr_db = 0.0;
    std::vector<double> pmf;
    double kl_uniform = 0.0;
    double nu = 0.0;
    double kl_mb = 0.0;
};

ShapingReport make_shaping_report(const Constellation& c, const std::vector<int>& symbols,
                                  double snr_db);

std::string shaping_report_json(const ShapingReport& report);
void write_shaping_report(const ShapingReport& report, const std::string& path);

// 10 log10(peak^2 / mse) with peak 1; mse is the per-coordinate mean squared error.
double psnr_db(double mse);

}  // namespace jcm
