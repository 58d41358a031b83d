#include "jcm/vilb.hpp"

#include <cmath>
#include <stdexcept>

#include "jcm/transition.hpp"

namespace jcm {

double cross_entropy(const Mat& posteriors, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != posteriors.rows)
        throw std::invalid_argument("cross_entropy: one label per row required");
    double total = 0.0;
    for (int r = 0; r < posteriors.rows; ++r) {
        const int s = labels[r];
        if (s < 0 || s >= posteriors.cols) throw std::invalid_argument("cross_entropy: invalid label");
        total -= std::log(std::max(posteriors(r, s), kProbFloor));
    }
    return total / posteriors.rows;
}

double mse_batch(const Mat& x, const Mat& x_hat) {
    if (!x.same_shape(x_hat)) throw std::invalid_argument("mse_batch: shape mismatch");
    double total = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        const double d = x.data[i] - x_hat.data[i];
        total += d * d;
    }
    return total / x.rows;
}

double vilb_batch_loss(const Mat& posteriors, const std::vector<int>& labels, const Mat& x,
                       const Mat& x_hat, const LossConfig& cfg) {
    if (posteriors.rows != x.rows) throw std::invalid_argument("vilb_batch_loss: batch mismatch");
    return cross_entropy(posteriors, labels) + cfg.lambda * mse_batch(x, x_hat);
}

std::optional<double> table_lambda(Scheme scheme, double snr_db) {
    struct Row {
        int snr;
        double bpsk;
        double qam;
    };
    static constexpr Row kTable[] = {
        {18, 70.0, 270.0}, {12, 70.0, 250.0}, {6, 70.0, 250.0}, {0, 30.0, 30.0},
        {-6, 20.0, 20.0},  {-12, 2.0, 2.0},   {-18, 0.5, 0.5},
    };
    for (const auto& row : kTable)
        if (std::abs(snr_db - row.snr) < 1e-9)
            return scheme == Scheme::BPSK ? row.bpsk : row.qam;
    return std::nullopt;
}

}  // namespace jcm
