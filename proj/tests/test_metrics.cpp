#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "jcm/metrics.hpp"
#include "jcm/rng.hpp"

using namespace jcm;

TEST_CASE("empirical pmf") {
    CHECK(empirical_constellation_pmf({2, 2, 2}, 4) == std::vector<double>{0, 0, 1, 0});
    CHECK_THROWS_AS(empirical_constellation_pmf({}, 4), std::invalid_argument);

    Rng rng(3);
    std::vector<int> stream(100000);
    for (auto& s : stream) s = static_cast<int>(rng.next_u64() % 16);
    const auto pmf = empirical_constellation_pmf(stream, 16);
    for (double p : pmf) CHECK(std::abs(p - 1.0 / 16) < 0.01);

    // Concatenation mixes with stream-length weights.
    const std::vector<int> a = {0, 0, 1};
    const std::vector<int> b = {1, 1, 1, 2, 3, 3};
    std::vector<int> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const auto pa = empirical_constellation_pmf(a, 4);
    const auto pb = empirical_constellation_pmf(b, 4);
    const auto pab = empirical_constellation_pmf(ab, 4);
    const double wa = static_cast<double>(a.size()) / ab.size();
    for (int m = 0; m < 4; ++m)
        CHECK(pab[m] == doctest::Approx(wa * pa[m] + (1 - wa) * pb[m]));
}

TEST_CASE("kl divergence closed forms") {
    CHECK(kl_divergence({0.3, 0.7}, {0.3, 0.7}) == doctest::Approx(0.0));
    CHECK(kl_divergence({1.0, 0.0}, {0.5, 0.5}) == doctest::Approx(std::log(2.0)));
    CHECK(kl_divergence({0.75, 0.25}, {0.5, 0.5}) == doctest::Approx(0.1308120359411));
    CHECK(kl_divergence({0.5, 0.5}, {1.0, 0.0}) > 0.0);  // floored q keeps it finite
    CHECK_THROWS_AS(kl_divergence({1.0}, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("maxwell-boltzmann fit recovers the generating parameter") {
    const Constellation c = make_rect_qam(16);

    const std::vector<double> uniform(16, 1.0 / 16);
    const MaxwellBoltzmannFit flat = maxwell_boltzmann_fit(c, uniform);
    CHECK(flat.nu < 1e-4);
    CHECK(flat.kl < 1e-8);

    const auto target = maxwell_boltzmann_pmf(c, 0.5);
    const MaxwellBoltzmannFit fit = maxwell_boltzmann_fit(c, target);
    CHECK(std::abs(fit.nu - 0.5) < 1e-3);
    CHECK(fit.kl < 1e-9);
}

TEST_CASE("maxwell-boltzmann fit survives a degenerate one-hot input") {
    const Constellation c = make_rect_qam(16);
    std::vector<double> onehot(16, 0.0);
    onehot[0] = 1.0;  // an outer corner point
    const MaxwellBoltzmannFit fit = maxwell_boltzmann_fit(c, onehot);
    CHECK(std::isfinite(fit.nu));
    CHECK(std::isfinite(fit.kl));
    CHECK(fit.nu >= 0.0);
}

TEST_CASE("fit never loses to the uniform family member") {
    const Constellation c = make_rect_qam(16);
    const std::vector<double> uniform(16, 1.0 / 16);
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> pmf(16);
        double sum = 0.0;
        for (auto& p : pmf) {
            p = rng.uniform() + 1e-3;
            sum += p;
        }
        for (auto& p : pmf) p /= sum;
        const MaxwellBoltzmannFit fit = maxwell_boltzmann_fit(c, pmf);
        CHECK(fit.kl <= kl_divergence(pmf, uniform) + 1e-12);
    }
}

TEST_CASE("shaping report serializes to json") {
    const Constellation c = make_rect_qam(4);
    const std::vector<int> symbols = {0, 1, 1, 2, 3, 3, 3, 0};
    const ShapingReport report = make_shaping_report(c, symbols, -6.0);
    const auto j = nlohmann::json::parse(shaping_report_json(report));
    CHECK(j["snr_db"] == -6.0);
    CHECK(j["pmf"].size() == 4);
    CHECK(j["kl_uniform"].get<double>() >= 0.0);
    CHECK(j["kl_mb"].get<double>() >= 0.0);
    CHECK(j["nu"].get<double>() >= 0.0);
    CHECK(j["kl_mb"].get<double>() <= j["kl_uniform"].get<double>() + 1e-12);
}

TEST_CASE("psnr formula") {
    CHECK(psnr_db(0.01) == doctest::Approx(20.0));
    CHECK(psnr_db(1.0) == doctest::Approx(0.0));
    CHECK(psnr_db(0.0) == 200.0);
}
