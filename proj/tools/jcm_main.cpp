#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jcm/experiment.hpp"
#include "jcm/rng.hpp"

namespace {

int print_checks(const std::vector<jcm::CheckResult>& checks) {
    for (const auto& c : checks)
        std::printf("[%s] %s: measured %.6g vs threshold %.6g\n", c.pass ? "PASS" : "FAIL",
                    c.name.c_str(), c.measured, c.threshold);
    return jcm::all_pass(checks) ? 0 : 1;
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("JCM_SEED")) return std::strtoull(env, nullptr, 10);
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learned coding-modulation laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Train and evaluate every configured cell");
    run->add_option("config", config_path, "flat key=value config file")->required();

    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient fidelity");
    std::uint64_t gc_seed = default_seed();
    gradcheck->add_option("--seed", gc_seed, "rng seed");

    auto* oraclecheck = app.add_subcommand("oraclecheck", "Bound and estimator verification");
    std::uint64_t oc_seed = default_seed();
    oraclecheck->add_option("--seed", oc_seed, "rng seed");

    std::string shaping_config;
    auto* shaping = app.add_subcommand("shaping", "Constellation-shaping diagnostics");
    shaping->add_option("config", shaping_config, "flat key=value config file")->required();

    auto* sample_dist = app.add_subcommand("sample-dist", "Gumbel-Max sampling distribution");
    int sd_order = 16;
    int sd_draws = 100000;
    std::uint64_t sd_seed = default_seed();
    sample_dist->add_option("--order", sd_order, "modulation order M");
    sample_dist->add_option("--draws", sd_draws, "draws per pmf");
    sample_dist->add_option("--seed", sd_seed, "rng seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const jcm::ExperimentConfig cfg = jcm::parse_config_file(config_path);
            const int status = jcm::run_experiment(cfg);
            if (status == 3) std::fprintf(stderr, "training aborted on non-finite loss\n");
            return status;
        }
        if (gradcheck->parsed()) return print_checks(jcm::run_gradcheck_suite(gc_seed));
        if (oraclecheck->parsed()) return print_checks(jcm::run_oracle_suite(oc_seed));
        if (shaping->parsed()) {
            const jcm::ExperimentConfig cfg = jcm::parse_config_file(shaping_config);
            return print_checks(jcm::run_shaping_suite(cfg));
        }
        if (sample_dist->parsed())
            return print_checks(jcm::run_sample_dist_suite(sd_order, sd_draws, sd_seed));
    } catch (const jcm::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
