#pragma once

#include <optional>
#include <vector>

#include "jcm/constellation.hpp"
#include "jcm/mat.hpp"

namespace jcm {

// Empirical training objective: classification cross-entropy plus
// lambda-weighted reconstruction MSE. Training minimizes this value (the
// negated bound); the constant H(S) + lambda H(X) is dropped.
struct LossConfig {
    double lambda = 1.0;
    int num_classes = 2;
};

// Batch mean of -log posterior[label]; posterior entries are floored at 1e-12.
double cross_entropy(const Mat& posteriors, const std::vector<int>& labels);

// Batch mean of ||x - x_hat||^2 (summed over coordinates per sample).
double mse_batch(const Mat& x, const Mat& x_hat);

double vilb_batch_loss(const Mat& posteriors, const std::vector<int>& labels, const Mat& x,
                       const Mat& x_hat, const LossConfig& cfg);

// Trade-off weights for 128 channel uses, keyed on (scheme, SNR in dB).
// Returns nothing for unlisted SNRs; callers must then supply lambda.
std::optional<double> table_lambda(Scheme scheme, double snr_db);

}  // namespace jcm
