#pragma once

#include <vector>

#include "jcm/constellation.hpp"
#include "jcm/mat.hpp"

namespace jcm {

// Probabilities below this floor are clamped (then renormalized) so that
// log-probabilities stay finite in sampling and loss terms.
inline constexpr double kProbFloor = 1e-12;

// Per-position categorical distributions over constellation symbols.
//
// Positions are conditionally independent by construction. For RectQAM the
// I and Q axes are factorized as well: only the two sqrt(M)-way marginals
// per position are stored, never the M-way joint.
struct TransitionPMF {
    Scheme scheme = Scheme::BPSK;
    int n = 0;
    Mat probs;    // BPSK: n x 2, column 0 = P(+1)
    Mat probs_i;  // RectQAM: n x sqrt(M)
    Mat probs_q;  // RectQAM: n x sqrt(M)

    int axis_categories() const { return scheme == Scheme::BPSK ? 2 : probs_i.cols; }

    // Row of the categorical distribution for (position, axis); axis is 0 for
    // BPSK, 0 = I / 1 = Q for RectQAM.
    const double* axis_row(int position, int axis) const;
};

// Row-wise softmax of logits with max-subtraction, followed by flooring at
// kProbFloor and renormalization. BPSK expects n x 2 logits; RectQAM expects
// n x 2*sqrt(M) with the I half before the Q half in each row.
TransitionPMF pmf_from_logits(const Mat& logits, Scheme scheme);

// Joint probability of a full symbol-index sequence (product over positions;
// for RectQAM the product of I and Q marginals at each position).
double sequence_probability(const TransitionPMF& pmf, const std::vector<int>& symbols);

// Length-M joint distribution over constellation points at one position
// (outer product of the I and Q rows, flattened in point order). RectQAM only.
std::vector<double> joint_symbol_pmf(const TransitionPMF& pmf, int position);

}  // namespace jcm
