#include "jcm/metrics.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace jcm {

std::vector<double> empirical_constellation_pmf(const std::vector<int>& symbols, int order) {
    if (symbols.empty()) throw std::invalid_argument("empirical_constellation_pmf: empty stream");
    std::vector<double> pmf(order, 0.0);
    for (int s : symbols) {
        if (s < 0 || s >= order) throw std::out_of_range("empirical_constellation_pmf: symbol index");
        pmf[s] += 1.0;
    }
    for (auto& p : pmf) p /= static_cast<double>(symbols.size());
    return pmf;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;  // 0 log 0 = 0
        kl += p[i] * std::log(p[i] / std::max(q[i], 1e-12));
    }
    return kl;
}

std::vector<double> maxwell_boltzmann_pmf(const Constellation& c, double nu) {
    std::vector<double> pmf(c.points.size());
    double sum = 0.0;
    for (std::size_t m = 0; m < c.points.size(); ++m) {
        pmf[m] = std::exp(-nu * std::norm(c.points[m]));
        sum += pmf[m];
    }
    for (auto& p : pmf) p /= sum;
    return pmf;
}

MaxwellBoltzmannFit maxwell_boltzmann_fit(const Constellation& c,
                                          const std::vector<double>& empirical) {
    if (c.scheme != Scheme::RectQAM)
        throw std::invalid_argument("maxwell_boltzmann_fit: RectQAM only");
    if (empirical.size() != c.points.size())
        throw std::invalid_argument("maxwell_boltzmann_fit: pmf size mismatch");

    const auto objective = [&](double nu) {
        return kl_divergence(empirical, maxwell_boltzmann_pmf(c, nu));
    };

    // Golden-section search on [0, 50]; the objective is convex in nu.
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, hi = 50.0;
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = objective(x1);
    double f2 = objective(x2);
    while (hi - lo > 1e-6) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = objective(x2);
        }
    }
    MaxwellBoltzmannFit fit;
    fit.nu = 0.5 * (lo + hi);
    // The uniform member (nu = 0) must never lose to the interior estimate.
    if (objective(0.0) <= objective(fit.nu)) fit.nu = 0.0;
    fit.pmf = maxwell_boltzmann_pmf(c, fit.nu);
    fit.kl = kl_divergence(empirical, fit.pmf);
    return fit;
}

ShapingReport make_shaping_report(const Constellation& c, const std::vector<int>& symbols,
                                  double snr_db) {
    ShapingReport report;
    report.snr_db = snr_db;
    report.pmf = empirical_constellation_pmf(symbols, c.order);
    const std::vector<double> uniform(c.order, 1.0 / c.order);
    report.kl_uniform = kl_divergence(report.pmf, uniform);
    const MaxwellBoltzmannFit fit = maxwell_boltzmann_fit(c, report.pmf);
    report.nu = fit.nu;
    report.kl_mb = fit.kl;
    return report;
}

std::string shaping_report_json(const ShapingReport& report) {
    nlohmann::json j;
    j["snr_db"] = report.snr_db;
    j["pmf"] = report.pmf;
    j["kl_uniform"] = report.kl_uniform;
    j["nu"] = report.nu;
    j["kl_mb"] = report.kl_mb;
    return j.dump(2);
}

void write_shaping_report(const ShapingReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("write_shaping_report: cannot open " + path);
    os << shaping_report_json(report) << "\n";
}

double psnr_db(double mse) {
    if (mse <= 0.0) return 200.0;  // exact reconstruction; cap the scale
    return 10.0 * std::log10(1.0 / mse);
}

}  // namespace jcm
