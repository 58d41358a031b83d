#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "jcm/channel.hpp"
#include "jcm/constellation.hpp"
#include "jcm/mat.hpp"
#include "jcm/transition.hpp"

namespace jcm {

// Fully enumerable miniature of the pipeline: a finite source support, an
// explicit transition PMF per source value, and a Gaussian channel. Small
// enough (M^n <= 4096) that posteriors and expected losses are computed by
// summing over every constellation sequence.
struct ToySource {
    std::vector<double> x;
    int label = 0;  // 0-based
    double prior = 0.0;
};

struct ToySystem {
    std::vector<ToySource> support;
    int num_labels = 0;
    Constellation constellation;
    int n = 1;
    std::vector<TransitionPMF> pmf_per_source;  // one per support entry
    double sigma2 = 1.0;
};

// Throws unless priors sum to 1, source vectors are distinct, shapes agree,
// and M^n <= 4096.
void validate_toy_system(const ToySystem& sys);

struct PosteriorPair {
    std::vector<double> over_labels;   // p(s | zhat)
    std::vector<double> over_sources;  // p(x_j | zhat)
};

// Bayes over the enumerable joint. Sequences are transmitted unscaled, so the
// likelihood of zhat given source j is sum_z p_en(z|x_j) N_c(zhat; z, sigma2).
PosteriorPair exact_posterior(const ToySystem& sys, const ComplexSequence& zhat);

struct MCEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct MutualInfoEstimates {
    MCEstimate mi_semantic;  // I(S; Zhat)
    MCEstimate mi_source;    // I(X; Zhat)
    // Covariance of the two sample means (same draws), for the standard error
    // of mi_semantic.value + lambda * mi_source.value.
    double cov_of_means = 0.0;

    double objective(double lambda) const;
    double objective_std_error(double lambda) const;
};

// Monte Carlo average of log[p(s|zhat)/p(s)] (and the source analogue) over
// joint draws, with exact inner posteriors.
MutualInfoEstimates mc_mutual_information(const ToySystem& sys, int num_draws,
                                          std::uint64_t seed);

// Arbitrary decoder: any map from a received sequence to posteriors.
using DecoderFn = std::function<PosteriorPair(const ComplexSequence&)>;

// Monte Carlo estimate of the bound: E[ E_{p(s|zhat)} log q_s + lambda *
// E_{p(x|zhat)} log q_x ] + H(S) + lambda H(X), with the entropies exact.
MCEstimate vilb_exact(const ToySystem& sys, const DecoderFn& decoder, double lambda,
                      int num_draws, std::uint64_t seed);

double toy_label_entropy(const ToySystem& sys);
double toy_source_entropy(const ToySystem& sys);

// Constellation sequence (unscaled) for a combined-index symbol vector.
ComplexSequence sequence_from_indices(const std::vector<int>& symbols, const Constellation& c);

// Three small systems (BPSK n=1, BPSK n=2, 4QAM n=1) used by the bound
// verification suites.
std::vector<ToySystem> reference_toy_systems();

// ---- Score-function gradient oracle ----------------------------------------
//
// Plain per-position categorical encoder: logits is n x M, q = row softmax
// (no flooring). h maps a symbol-index sequence to a scalar loss.

using SequenceLoss = std::function<double(const std::vector<int>&)>;

// Exact E[h(z) grad log p(z)] by enumerating all M^n sequences.
Mat score_function_grad_exact(const Mat& logits, const SequenceLoss& h);

// Monte Carlo variant; per-coordinate standard errors in *std_err if given.
Mat score_function_grad_mc(const Mat& logits, const SequenceLoss& h, int num_draws,
                           std::uint64_t seed, Mat* std_err = nullptr);

// Exact expected loss sum_z p(z) h(z) (finite-difference target).
double expected_loss_enumerated(const Mat& logits, const SequenceLoss& h);

}  // namespace jcm
