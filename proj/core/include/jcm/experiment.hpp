#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jcm/constellation.hpp"

namespace jcm {

// Raised on any malformed or unknown configuration input; the message names
// the offending field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    Scheme scheme = Scheme::RectQAM;
    int order = 4;
    int n = 16;
    std::vector<double> snr_db = {12.0};
    std::vector<double> lambdas;  // empty: resolved from the built-in table
    double rho = 1.5;
    int epochs = 100;
    int batch_size = 32;
    std::vector<int> enc_hidden = {32};
    std::vector<int> dec_s_hidden = {32};
    std::vector<int> dec_o_hidden = {32};

    std::string dataset = "gmm";  // gmm | toyimg
    int k = 16;
    int num_classes = 4;
    int train_per_class = 128;
    int val_per_class = 64;
    double sigma_c = 0.05;
    int image_side = 8;
    double image_noise = 0.1;
    std::uint64_t dataset_seed = 1234;

    std::vector<std::uint64_t> seeds = {1};
    std::vector<std::string> methods = {"jcm"};
    std::string outdir = "out";
    int eval_noise_draws = 1;
    bool alternate_updates = false;
    int draws_per_step = 1;
    double hs_temperature = 1.0;
    double power = 1.0;

    // Lambda for the i-th SNR: explicit list entry, or the built-in table.
    double resolve_lambda(std::size_t snr_index) const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Trains/evaluates every (method, snr, seed) cell and writes results.csv,
// shaping JSON files, checkpoints, and per-epoch logs under cfg.outdir.
// Returns 0 on success, 3 if any training aborted on a non-finite loss.
// JCM_SEED in the environment replaces the seed list.
int run_experiment(const ExperimentConfig& cfg);

// ---- Verification suites ----------------------------------------------------

struct CheckResult {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

bool all_pass(const std::vector<CheckResult>& checks);

// Finite-difference fidelity of the relaxed pipeline for M in {2, 4, 16}.
std::vector<CheckResult> run_gradcheck_suite(std::uint64_t seed);

// Variational-bound tightness checks on the reference toy systems plus the
// score-function oracle agreement checks.
std::vector<CheckResult> run_oracle_suite(std::uint64_t seed);

// Gumbel-Max empirical distribution vs PMF in total variation.
std::vector<CheckResult> run_sample_dist_suite(int order, int num_draws, std::uint64_t seed);

// Trains JCM per config cell and checks the Maxwell-Boltzmann fit family
// property; writes shaping_<snr>.json under cfg.outdir.
std::vector<CheckResult> run_shaping_suite(const ExperimentConfig& cfg);

}  // namespace jcm
