#include "jcm/transition.hpp"

#include <cmath>
#include <stdexcept>

namespace jcm {

namespace {

void softmax_floor_row(const double* in, double* out, int c) {
    double mx = in[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
        out[j] = std::exp(in[j] - mx);
        sum += out[j];
    }
    double floored_sum = 0.0;
    for (int j = 0; j < c; ++j) {
        out[j] = std::max(out[j] / sum, kProbFloor);
        floored_sum += out[j];
    }
    // Renormalize, then clamp once more so no entry dips below the floor.
    // The sum then exceeds 1 by at most c * kProbFloor, inside the 1e-9 row
    // tolerance.
    for (int j = 0; j < c; ++j) out[j] = std::max(out[j] / floored_sum, kProbFloor);
}

}  // namespace

const double* TransitionPMF::axis_row(int position, int axis) const {
    if (scheme == Scheme::BPSK) return &probs(position, 0);
    return axis == 0 ? &probs_i(position, 0) : &probs_q(position, 0);
}

TransitionPMF pmf_from_logits(const Mat& logits, Scheme scheme) {
    for (double v : logits.data)
        if (!std::isfinite(v)) throw std::invalid_argument("pmf_from_logits: non-finite logits");

    TransitionPMF pmf;
    pmf.scheme = scheme;
    pmf.n = logits.rows;
    if (scheme == Scheme::BPSK) {
        if (logits.cols != 2) throw std::invalid_argument("pmf_from_logits: BPSK expects 2 logits per position");
        pmf.probs = Mat(pmf.n, 2);
        for (int i = 0; i < pmf.n; ++i) softmax_floor_row(&logits(i, 0), &pmf.probs(i, 0), 2);
    } else {
        if (logits.cols < 4 || logits.cols % 2 != 0)
            throw std::invalid_argument("pmf_from_logits: RectQAM expects 2*sqrt(M) logits per position");
        const int side = logits.cols / 2;
        pmf.probs_i = Mat(pmf.n, side);
        pmf.probs_q = Mat(pmf.n, side);
        for (int i = 0; i < pmf.n; ++i) {
            softmax_floor_row(&logits(i, 0), &pmf.probs_i(i, 0), side);
            softmax_floor_row(&logits(i, side), &pmf.probs_q(i, 0), side);
        }
    }
    return pmf;
}

double sequence_probability(const TransitionPMF& pmf, const std::vector<int>& symbols) {
    if (static_cast<int>(symbols.size()) != pmf.n)
        throw std::invalid_argument("sequence_probability: symbol count != n");
    double p = 1.0;
    if (pmf.scheme == Scheme::BPSK) {
        for (int i = 0; i < pmf.n; ++i) {
            const int m = symbols[i];
            if (m < 0 || m >= 2) throw std::out_of_range("sequence_probability: symbol index");
            p *= pmf.probs(i, m);
        }
    } else {
        const int side = pmf.probs_i.cols;
        for (int i = 0; i < pmf.n; ++i) {
            const int m = symbols[i];
            if (m < 0 || m >= side * side) throw std::out_of_range("sequence_probability: symbol index");
            p *= pmf.probs_i(i, m / side) * pmf.probs_q(i, m % side);
        }
    }
    return p;
}

std::vector<double> joint_symbol_pmf(const TransitionPMF& pmf, int position) {
    if (pmf.scheme != Scheme::RectQAM)
        throw std::invalid_argument("joint_symbol_pmf: defined for RectQAM only");
    if (position < 0 || position >= pmf.n) throw std::out_of_range("joint_symbol_pmf: position");
    const int side = pmf.probs_i.cols;
    std::vector<double> joint(static_cast<std::size_t>(side) * side);
    for (int r = 0; r < side; ++r)
        for (int s = 0; s < side; ++s) joint[r * side + s] = pmf.probs_i(position, r) * pmf.probs_q(position, s);
    return joint;
}

}  // namespace jcm
